//! Normal form of the left-hand side and the normalization rules.

use crate::defs::Registry;
use crate::pure::{self, PairStatus};
use crate::rule::{identity_trace, removal_trace, Rule, Step};
use crate::syntax::{Entailment, Expr, PureAtom, SpatialAtom, Subst, SymbolicHeap};

/// `G(op(E))`: `None` stands for `true`.
pub fn guard(a: &SpatialAtom) -> Option<PureAtom> {
    match a {
        SpatialAtom::Pred { args, .. } => Some(PureAtom::ptr_neq(args[0].clone(), args[1].clone())),
        _ => None,
    }
}

fn guard_present(h: &SymbolicHeap, a: &SpatialAtom) -> bool {
    guard(a).is_none_or(|g| h.pure.contains(&g))
}

/// Clauses of the normal form that `h` violates (empty when in NF).
pub fn nf_failures(h: &SymbolicHeap) -> Vec<u8> {
    let mut out = Vec::new();
    if !h.spatial.iter().all(|a| guard_present(h, a)) {
        out.push(1);
    }
    let roots: Vec<&Expr> = h.spatial.iter().filter_map(|a| a.root()).collect();
    if !roots.iter().all(|r| h.pure.contains(&PureAtom::ptr_neq((*r).clone(), Expr::Null))) {
        out.push(2);
    }
    let mut pairwise = true;
    for i in 0..roots.len() {
        for j in i + 1..roots.len() {
            if !h.pure.contains(&PureAtom::ptr_neq(roots[i].clone(), roots[j].clone())) {
                pairwise = false;
            }
        }
    }
    if !pairwise {
        out.push(3);
    }
    if h.pure.atoms().iter().any(|a| matches!(a, PureAtom::PtrEq(..))) {
        out.push(4);
    }
    if h.pure.atoms().iter().any(|a| matches!(a, PureAtom::PtrNeq(x, y) if x == y)) {
        out.push(5);
    }
    let arith = crate::syntax::Pure::from_atoms(h.pure.atoms().iter().filter(|a| !a.is_pointer()).cloned());
    if !pure::satisfiable(&arith) {
        out.push(6);
    }
    out
}

pub fn is_nf(h: &SymbolicHeap) -> bool {
    nf_failures(h).is_empty()
}

/// Variables introduced by unfolding carry a `#`.
pub fn is_fresh(v: &str) -> bool {
    v.contains('#')
}

/// `=L`: drop one `E=E` from the left.
pub fn rule_eq_l(e: &Entailment) -> Option<Step> {
    let a = e.lhs.pure.atoms().iter().find(|a| a.is_trivial_eq())?.clone();
    let mut out = e.clone();
    out.lhs.pure.remove(&a);
    Some(Step::single(Rule::EqL, out, identity_trace(e.lhs.spatial.len())))
}

/// Orientation of `a = b` as `(replaced variable, replacement)`.
fn orient(a: &Expr, b: &Expr) -> Option<(String, Expr)> {
    match (a, b) {
        (Expr::Var(x), Expr::Null) | (Expr::Null, Expr::Var(x)) => Some((x.clone(), Expr::Null)),
        (Expr::Var(x), Expr::Var(y)) if x != y => {
            let (fx, fy) = (is_fresh(x), is_fresh(y));
            let replace_x = if fx != fy { fx } else { x > y };
            if replace_x {
                Some((x.clone(), b.clone()))
            } else {
                Some((y.clone(), a.clone()))
            }
        }
        _ => None,
    }
}

/// `Subst`: eliminate one pointer equality `x=E` on the left.
pub fn rule_subst(e: &Entailment) -> Option<Step> {
    for a in e.lhs.pure.atoms() {
        if let PureAtom::PtrEq(x, y) = a {
            if let Some((v, by)) = orient(x, y) {
                let mut base = e.clone();
                base.lhs.pure.remove(a);
                let bind = Subst::single(&v, by);
                let out = base.subst(&bind);
                return Some(Step::binding(Rule::Subst, out, identity_trace(e.lhs.spatial.len()), bind));
            }
        }
    }
    None
}

/// `LBase`: drop `P(E,E,..)` on the left and apply `[tg/sc]`.
pub fn rule_lbase(e: &Entailment, reg: &Registry) -> Option<Step> {
    let i = e.lhs.spatial.iter().position(|a| matches!(a, SpatialAtom::Pred { args, .. } if args[0] == args[1]))?;
    let SpatialAtom::Pred { name, args, .. } = &e.lhs.spatial[i] else { unreachable!() };
    let mut base = e.clone();
    base.lhs.spatial.remove(i);
    let mut bind = Subst::new();
    let out = match reg.get(name).and_then(|d| d.source_target(args)) {
        Some((Expr::Var(sc), tg)) if Expr::Var(sc.clone()) != tg => {
            bind.insert(&sc, tg);
            base.subst(&bind)
        }
        Some((sc, tg)) => {
            base.lhs.pure.push(PureAtom::arith_eq(sc, tg));
            base
        }
        None => base,
    };
    Some(Step::binding(Rule::LBase, out, removal_trace(e.lhs.spatial.len(), &[i]), bind))
}

/// `≠null`: a guarded atom's root is not null.
pub fn rule_neq_null(e: &Entailment) -> Option<Step> {
    for a in &e.lhs.spatial {
        let root = a.root()?.clone();
        let atom = PureAtom::ptr_neq(root, Expr::Null);
        if guard_present(&e.lhs, a) && !e.lhs.pure.contains(&atom) {
            let mut out = e.clone();
            out.lhs.pure.push(atom);
            return Some(Step::single(Rule::NeqNull, out, identity_trace(e.lhs.spatial.len())));
        }
    }
    None
}

/// `≠*`: two guarded atoms have distinct roots. The frame is disjoint from
/// the left-hand heap, so its guarded atoms take part as well.
pub fn rule_neq_star(e: &Entailment) -> Option<Step> {
    let k = &e.lhs.spatial;
    let others = k.iter().chain(&e.frame);
    for (i, a) in k.iter().enumerate() {
        for b in others.clone().skip(i + 1) {
            if !guard_present(&e.lhs, a) || !guard_present(&e.lhs, b) {
                continue;
            }
            let atom = PureAtom::ptr_neq(a.root()?.clone(), b.root()?.clone());
            if !e.lhs.pure.contains(&atom) {
                let mut out = e.clone();
                out.lhs.pure.push(atom);
                return Some(Step::single(Rule::NeqStar, out, identity_trace(k.len())));
            }
        }
    }
    None
}

/// Case split on `E1 = E2` for a pointer pair over spatial variables.
pub fn exm_on(e: &Entailment, a: &Expr, b: &Expr) -> Option<Step> {
    let eq = PureAtom::ptr_eq(a.clone(), b.clone());
    let neq = PureAtom::ptr_neq(a.clone(), b.clone());
    if a == b || e.lhs.pure.contains(&eq) || e.lhs.pure.contains(&neq) {
        return None;
    }
    let mut vars = e.lhs.spatial_vars();
    vars.extend(e.rhs.spatial_vars());
    let spatial_ok = [a, b].iter().all(|x| x.as_var().map_or(x.is_null(), |v| vars.contains(v)));
    if !spatial_ok || pure::status_of_pair(&e.lhs.pure, a, b) != PairStatus::Unknown {
        return None;
    }
    let n = e.lhs.spatial.len();
    let mut left = e.clone();
    left.lhs.pure.push(eq);
    let mut right = e.clone();
    right.lhs.pure.push(neq);
    Some(Step {
        rule: Rule::ExM,
        premises: vec![
            crate::rule::Premise { ent: left, trace: identity_trace(n), bind: Subst::new() },
            crate::rule::Premise { ent: right, trace: identity_trace(n), bind: Subst::new() },
        ],
    })
}

/// `ExM`, lazily: root/segment pairs of predicates first, then root pairs.
pub fn rule_exm(e: &Entailment) -> Option<Step> {
    let k = &e.lhs.spatial;
    for a in k {
        if let SpatialAtom::Pred { args, .. } = a {
            if let Some(s) = exm_on(e, &args[0], &args[1]) {
                return Some(s);
            }
        }
    }
    for i in 0..k.len() {
        for j in i + 1..k.len() {
            if let (Some(x), Some(y)) = (k[i].root(), k[j].root()) {
                if let Some(s) = exm_on(e, x, y) {
                    return Some(s);
                }
            }
        }
    }
    None
}

/// The first applicable normalization rule in the fixed order
/// `=L, Subst, LBase, ≠null, ≠*, ExM`. Nothing applies to an unsatisfiable LHS.
pub fn normalization_step(e: &Entailment, reg: &Registry) -> Option<Step> {
    if !pure::satisfiable(&e.lhs.pure) {
        return None;
    }
    rule_eq_l(e)
        .or_else(|| rule_subst(e))
        .or_else(|| rule_lbase(e, reg))
        .or_else(|| rule_neq_null(e))
        .or_else(|| rule_neq_star(e))
        .or_else(|| rule_exm(e))
}

/// Exhaustive normalization. Each output has an LHS in NF or an unsatisfiable LHS.
pub fn normalize(e: &Entailment, reg: &Registry) -> Vec<(Entailment, Vec<Rule>)> {
    normalize_tracked(e, reg).into_iter().map(|b| (b.ent, b.rules)).collect()
}

/// One output of [`normalize_tracked`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub ent: Entailment,
    pub rules: Vec<Rule>,
    /// Variables eliminated on the way, with their values in `ent`.
    pub elim: Subst,
}

/// As [`normalize`], also recording the substitutions applied by `Subst`
/// and `LBase`, so each branch can be related back to the input.
pub fn normalize_tracked(e: &Entailment, reg: &Registry) -> Vec<Branch> {
    let mut out = Vec::new();
    let mut work = vec![Branch { ent: e.clone(), rules: Vec::new(), elim: Subst::new() }];
    while let Some(cur) = work.pop() {
        match normalization_step(&cur.ent, reg) {
            None => out.push(cur),
            Some(step) => {
                // Reverse so the first premise is processed first.
                for p in step.premises.into_iter().rev() {
                    let mut rules = cur.rules.clone();
                    rules.push(step.rule);
                    work.push(Branch { ent: p.ent, rules, elim: cur.elim.then(&p.bind) });
                }
            }
        }
    }
    out
}
