//! Rule choice on a leaf and the reduction rules.

use crate::defs::{unfold, Fresh, Registry};
use crate::normalize::{exm_on, normalization_step};
use crate::pure::{self, PairStatus, PureState};
use crate::rule::{identity_trace, removal_trace, Premise, Rule, Step, Trace};
use crate::syntax::{Entailment, Expr, Pure, PureAtom, SpatialAtom, Subst, SymbolicHeap, VarSort};
use std::fmt;

/// Why a leaf cannot be reduced further.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StuckCase {
    /// No rule applies.
    NoRule,
    /// A right-hand root is not allocated on the left.
    Unallocated,
    /// A left-hand atom has no right-hand counterpart.
    Unmatched,
    /// Matching roots with different sorts or fields.
    Mismatch,
}

impl StuckCase {
    pub fn tag(self) -> &'static str {
        match self {
            StuckCase::NoRule => "2a",
            StuckCase::Unallocated => "2b",
            StuckCase::Unmatched => "2c",
            StuckCase::Mismatch => "2d",
        }
    }
}

impl fmt::Display for StuckCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match self {
            StuckCase::NoRule => "no rule applies",
            StuckCase::Unallocated => "right-hand root not allocated on the left",
            StuckCase::Unmatched => "left-hand heap not covered on the right",
            StuckCase::Mismatch => "points-to sort or field mismatch",
        };
        write!(f, "case {}: {what}", self.tag())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decision {
    Axiom(Rule),
    Apply(Step),
    Stuck(StuckCase),
}

/// Chooses the next rule for a leaf: normalization, axioms, then reductions
/// in the order `=R, RBase, Hypothesis, Star, RInd, LInd/Frame`.
pub fn classify(e: &Entailment, reg: &Registry, fresh: &mut Fresh) -> Decision {
    if !pure::satisfiable(&e.lhs.pure) {
        return Decision::Axiom(Rule::Inconsistency);
    }
    // Id needs no normal form: both sides are the same pure-free heap. An
    // empty heap is left to Emp.
    if !e.lhs.spatial.is_empty() && e.lhs.pure.is_true() && e.rhs.pure.is_true() && e.lhs.same_spatial(&e.rhs) {
        return Decision::Axiom(Rule::Id);
    }
    if let Some(s) = normalization_step(e, reg) {
        return Decision::Apply(s);
    }
    if e.lhs.spatial.is_empty() && e.rhs.spatial.is_empty() && e.rhs.pure.is_true() {
        return Decision::Axiom(Rule::Emp);
    }
    let n = e.lhs.spatial.len();
    if let Some(a) = e.rhs.pure.atoms().iter().find(|a| a.is_trivial_eq()) {
        let mut out = e.clone();
        out.rhs.pure.remove(a);
        return Decision::Apply(Step::single(Rule::EqR, out, identity_trace(n)));
    }
    if let Some(s) = rule_rbase(e, reg) {
        return Decision::Apply(s);
    }
    if let Some(s) = rule_hypothesis(e) {
        return Decision::Apply(s);
    }
    if points_to_mismatch(e, reg) {
        return Decision::Stuck(StuckCase::Mismatch);
    }
    if let Some(s) = rule_star(e, reg) {
        return Decision::Apply(s);
    }
    match rule_rind(e, reg) {
        Some(Ok(s)) => return Decision::Apply(s),
        Some(Err(c)) => return Decision::Stuck(c),
        None => {}
    }
    if let Some(s) = rule_lind(e, reg, fresh) {
        return Decision::Apply(s);
    }
    Decision::Stuck(stuck_case(e))
}

fn stuck_case(e: &Entailment) -> StuckCase {
    let lroots: Vec<&Expr> = e.lhs.spatial.iter().filter_map(|a| a.root()).collect();
    let rroots: Vec<&Expr> = e.rhs.spatial.iter().filter_map(|a| a.root()).collect();
    if rroots.iter().any(|r| !lroots.contains(r)) {
        StuckCase::Unallocated
    } else if lroots.iter().any(|r| !rroots.contains(r)) {
        StuckCase::Unmatched
    } else {
        StuckCase::NoRule
    }
}

/// `RBase`: drop `P(E,E,..)` on the right, asserting `sc=tg` there.
fn rule_rbase(e: &Entailment, reg: &Registry) -> Option<Step> {
    let j = e.rhs.spatial.iter().position(|a| matches!(a, SpatialAtom::Pred { args, .. } if args[0] == args[1]))?;
    let mut out = e.clone();
    let a = out.rhs.spatial.remove(j);
    if let SpatialAtom::Pred { name, args, .. } = &a {
        if let Some((sc, tg)) = reg.get(name).and_then(|d| d.source_target(args)) {
            out.rhs.pure.push(PureAtom::arith_eq(sc, tg));
        }
    }
    Some(Step::single(Rule::RBase, out, identity_trace(e.lhs.spatial.len())))
}

/// `Hypothesis`: drop right-hand pure atoms entailed by the left.
fn rule_hypothesis(e: &Entailment) -> Option<Step> {
    let st = PureState::from_pure(&e.lhs.pure);
    let drop: Vec<PureAtom> = e.rhs.pure.atoms().iter().filter(|a| st.entails_atom(a)).cloned().collect();
    if drop.is_empty() {
        return None;
    }
    let mut out = e.clone();
    for a in &drop {
        out.rhs.pure.remove(a);
    }
    Some(Step::single(Rule::Hypothesis, out, identity_trace(e.lhs.spatial.len())))
}

fn field_sorts(reg: &Registry, sort: &str) -> Option<Vec<VarSort>> {
    reg.data(sort).map(|d| d.fields.iter().map(|(_, t)| t.var_sort()).collect())
}

/// Two points-to atoms agree up to integer fields. Returns the equalities
/// needed on those fields, or `None` when they cannot denote the same cell.
fn align(reg: &Registry, l: &SpatialAtom, r: &SpatialAtom) -> Option<Vec<PureAtom>> {
    let (
        SpatialAtom::PointsTo { root: lr, sort: ls, fields: lf },
        SpatialAtom::PointsTo { root: rr, sort: rs, fields: rf },
    ) = (l, r)
    else {
        return None;
    };
    if lr != rr || ls != rs || lf.len() != rf.len() {
        return None;
    }
    let sorts = field_sorts(reg, ls)?;
    let mut eqs = Vec::new();
    for ((a, b), s) in lf.iter().zip(rf).zip(sorts) {
        if a == b {
            continue;
        }
        match s {
            VarSort::Int => eqs.push(PureAtom::arith_eq(a.clone(), b.clone())),
            VarSort::Ptr => return None,
        }
    }
    Some(eqs)
}

fn points_to_mismatch(e: &Entailment, reg: &Registry) -> bool {
    e.rhs.spatial.iter().any(|r| match r {
        SpatialAtom::PointsTo { root, .. } => e.lhs.spatial.iter().any(|l| match l {
            SpatialAtom::PointsTo { root: lr, .. } => lr == root && align(reg, l, r).is_none(),
            _ => false,
        }),
        _ => false,
    })
}

/// `*`: split off right-hand atoms that have an identical left-hand partner.
fn rule_star(e: &Entailment, reg: &Registry) -> Option<Step> {
    let mut used = vec![false; e.lhs.spatial.len()];
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    let mut eqs: Vec<PureAtom> = Vec::new();
    for (j, r) in e.rhs.spatial.iter().enumerate() {
        let hit = e.lhs.spatial.iter().enumerate().find_map(|(i, l)| {
            if used[i] {
                return None;
            }
            if l.same_shape(r) {
                return Some((i, Vec::new()));
            }
            align(reg, l, r).map(|q| (i, q))
        });
        if let Some((i, q)) = hit {
            used[i] = true;
            pairs.push((i, j));
            eqs.extend(q);
        }
    }
    if pairs.is_empty() {
        return None;
    }
    // Ptr-field mismatches on a shared root are left to the stuck check.
    let li: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    let rj: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    let mut rest = e.clone();
    rest.lhs.spatial = keep(&e.lhs.spatial, &li);
    rest.rhs.spatial = keep(&e.rhs.spatial, &rj);
    for a in eqs {
        rest.rhs.pure.push(a);
    }
    let mut sorted_li = li.clone();
    sorted_li.sort_unstable();
    // Framed predicates keep their order consequence on the left.
    let st = PureState::from_pure(&e.lhs.pure);
    for &i in &sorted_li {
        if let SpatialAtom::Pred { name, args, .. } = &e.lhs.spatial[i] {
            if let Some(a) = reg.get(name).and_then(|d| d.order_consequence(args)) {
                if !st.entails_atom(&a) {
                    rest.lhs.pure.push(a);
                }
            }
        }
    }
    rest.frame.extend(sorted_li.iter().map(|&i| e.lhs.spatial[i].clone()));
    let n = e.lhs.spatial.len();
    let rest_prem = Premise { ent: rest, trace: removal_trace(n, &sorted_li), bind: Subst::new() };
    if li.len() == n && rj.len() == e.rhs.spatial.len() {
        return Some(Step { rule: Rule::Star, premises: vec![rest_prem] });
    }
    let matched: Vec<SpatialAtom> = sorted_li.iter().map(|&i| e.lhs.spatial[i].clone()).collect();
    let trace: Trace = sorted_li.iter().enumerate().map(|(k, &i)| (i, k, false)).collect();
    let id = Entailment::new(SymbolicHeap::new(matched.clone(), Pure::new()), SymbolicHeap::new(matched, Pure::new()));
    Some(Step { rule: Rule::Star, premises: vec![Premise { ent: id, trace, bind: Subst::new() }, rest_prem] })
}

fn keep(k: &[SpatialAtom], drop: &[usize]) -> Vec<SpatialAtom> {
    k.iter().enumerate().filter(|(i, _)| !drop.contains(i)).map(|(_, a)| a.clone()).collect()
}

/// Either a case split making `a ≠ b` known, or `Ok(())` when it already is.
/// `Err(None)` when the pair is known equal.
fn need_distinct(e: &Entailment, a: &Expr, b: &Expr) -> Result<(), Option<Step>> {
    match pure::status_of_pair(&e.lhs.pure, a, b) {
        PairStatus::Distinct => Ok(()),
        PairStatus::Equal => Err(None),
        PairStatus::Unknown => Err(exm_on(e, a, b)),
    }
}

/// `RInd`: unfold a right-hand predicate whose root is allocated on the left.
fn rule_rind(e: &Entailment, reg: &Registry) -> Option<Result<Step, StuckCase>> {
    for (j, r) in e.rhs.spatial.iter().enumerate() {
        let SpatialAtom::Pred { name, args, .. } = r else { continue };
        let Some(SpatialAtom::PointsTo { sort, fields, .. }) =
            e.lhs.spatial.iter().find(|l| matches!(l, SpatialAtom::PointsTo { root, .. } if *root == args[0]))
        else {
            continue;
        };
        match need_distinct(e, &args[0], &args[1]) {
            Ok(()) => {}
            Err(Some(s)) => return Some(Ok(s)),
            Err(None) => return Some(Err(StuckCase::NoRule)),
        }
        let def = reg.get(name)?;
        let shape = reg.shape(name).ok()?;
        let SpatialAtom::PointsTo { sort: hs, fields: hf, .. } = &def.body[shape.head] else {
            return None;
        };
        if hs != sort || hf.len() != fields.len() {
            return Some(Err(StuckCase::Mismatch));
        }
        let mut s = Subst::new();
        for (p, a) in def.params.iter().zip(args) {
            s.insert(&p.name, a.clone());
        }
        let sorts = field_sorts(reg, sort)?;
        let mut extra = Vec::new();
        for ((h, v), vs) in hf.iter().zip(fields).zip(&sorts) {
            let bound = match h {
                Expr::Var(x) if def.exists.contains(x) && s.get(x).is_none() => {
                    s.insert(x, v.clone());
                    continue;
                }
                other => other.subst(&s),
            };
            if bound != *v {
                match vs {
                    VarSort::Int => extra.push(PureAtom::arith_eq(v.clone(), bound)),
                    VarSort::Ptr => return Some(Err(StuckCase::Mismatch)),
                }
            }
        }
        let mut body: Vec<SpatialAtom> = def.body.iter().map(|a| a.subst(&s).with_unfold(0)).collect();
        // Integer field differences were turned into equalities above.
        body[shape.head] = SpatialAtom::PointsTo { root: args[0].clone(), sort: sort.clone(), fields: fields.clone() };
        let mut out = e.clone();
        out.rhs.spatial.splice(j..=j, body);
        if let Some((op, succ)) = &def.order {
            let sc = args[def.source_index().expect("validated")].clone();
            out.rhs.pure.push(op.atom(sc, Expr::var(succ).subst(&s)));
        }
        out.rhs.pure.extend(&def.side.subst(&s));
        for a in extra {
            out.rhs.pure.push(a);
        }
        return Some(Ok(Step::single(Rule::RInd, out, identity_trace(e.lhs.spatial.len()))));
    }
    None
}

/// `LInd` and `Frame`: unfold the left-hand predicate, with the greatest
/// unfolding number, whose root is also a right-hand root.
fn rule_lind(e: &Entailment, reg: &Registry, fresh: &mut Fresh) -> Option<Step> {
    let mut best: Option<(usize, u32)> = None;
    for (i, l) in e.lhs.spatial.iter().enumerate() {
        let SpatialAtom::Pred { args, unfold: k, .. } = l else { continue };
        if !e.rhs.spatial.iter().any(|r| r.root() == Some(&args[0])) {
            continue;
        }
        if best.is_none_or(|(_, bk)| *k > bk) {
            best = Some((i, *k));
        }
    }
    let (i, _) = best?;
    let occ = &e.lhs.spatial[i];
    let root = occ.root()?.clone();
    let target = e.rhs.spatial.iter().find(|r| r.root() == Some(&root))?;
    let rule = match target {
        SpatialAtom::Pred { args, .. } => {
            match need_distinct(e, &root, &args[1]) {
                Ok(()) => {}
                Err(s) => return s,
            }
            Rule::LInd
        }
        _ => Rule::Frame,
    };
    let u = unfold(occ, reg, fresh).ok()?;
    let mut out = e.clone();
    let len = u.rec.spatial.len();
    out.lhs.spatial.splice(i..=i, u.rec.spatial);
    out.lhs.pure.extend(&u.rec.pure);
    let n = e.lhs.spatial.len();
    let mut trace = Vec::new();
    for k in 0..n {
        if k < i {
            trace.push((k, k, false));
        } else if k == i {
            trace.push((k, i + u.rec_index, true));
        } else {
            trace.push((k, k + len - 1, false));
        }
    }
    Some(Step::single(rule, out, trace))
}

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
#[error("{rule} does not apply: {condition}")]
pub struct SideConditionFailed {
    pub rule: Rule,
    pub condition: String,
}

/// Applies one named rule to `e` and returns its premises. Axioms return no
/// premises. Fails when the rule's schema or side condition does not hold.
pub fn apply_rule(
    e: &Entailment,
    rule: Rule,
    reg: &Registry,
    fresh: &mut Fresh,
) -> Result<Vec<Entailment>, SideConditionFailed> {
    use crate::normalize::{rule_eq_l, rule_exm, rule_lbase, rule_neq_null, rule_neq_star, rule_subst};
    let fail = |c: &str| SideConditionFailed { rule, condition: c.to_string() };
    let premises = |s: Option<Step>, c: &str| -> Result<Vec<Entailment>, SideConditionFailed> {
        match s {
            Some(s) if s.rule == rule => Ok(s.premises.into_iter().map(|p| p.ent).collect()),
            _ => Err(fail(c)),
        }
    };
    match rule {
        Rule::Inconsistency => {
            if pure::satisfiable(&e.lhs.pure) {
                Err(fail("the left-hand pure part is satisfiable"))
            } else {
                Ok(Vec::new())
            }
        }
        Rule::Id => {
            if e.lhs.pure.is_true() && e.rhs.pure.is_true() && e.lhs.same_spatial(&e.rhs) {
                Ok(Vec::new())
            } else {
                Err(fail("the two sides differ"))
            }
        }
        Rule::Emp => {
            if e.lhs.spatial.is_empty() && e.rhs.spatial.is_empty() && e.rhs.pure.is_true() {
                Ok(Vec::new())
            } else {
                Err(fail("both sides must be `emp` and the right pure part `true`"))
            }
        }
        Rule::EqR => match e.rhs.pure.atoms().iter().find(|a| a.is_trivial_eq()) {
            Some(a) => {
                let mut out = e.clone();
                out.rhs.pure.remove(a);
                Ok(vec![out])
            }
            None => Err(fail("no `E=E` on the right")),
        },
        Rule::Subst => premises(rule_subst(e), "no equality on the left"),
        Rule::EqL => premises(rule_eq_l(e), "no `E=E` on the left"),
        Rule::LBase => premises(rule_lbase(e, reg), "no `P(E,E,..)` on the left"),
        Rule::NeqNull => premises(rule_neq_null(e), "every allocated root already differs from null"),
        Rule::NeqStar => premises(rule_neq_star(e), "every pair of roots is already distinct"),
        Rule::ExM => premises(rule_exm(e), "no undecided pair of spatial variables"),
        Rule::RBase => premises(rule_rbase(e, reg), "no `P(E,E,..)` on the right"),
        Rule::Hypothesis => premises(rule_hypothesis(e), "no right-hand pure atom is entailed"),
        Rule::Star => {
            if points_to_mismatch(e, reg) {
                return Err(fail("matching roots with different cells"));
            }
            premises(rule_star(e, reg), "no atom pair with a shared root and equal shape")
        }
        Rule::RInd => match rule_rind(e, reg) {
            Some(Ok(s)) => premises(Some(s), "the right-hand root needs a case split first"),
            Some(Err(c)) => Err(fail(&c.to_string())),
            None => Err(fail("no right-hand predicate rooted at a left-hand cell")),
        },
        Rule::LInd | Rule::Frame => premises(
            rule_lind(e, reg, fresh),
            "no left-hand predicate whose root is a right-hand root, decided against its segment",
        ),
    }
}
