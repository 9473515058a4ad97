//! Back-link generation.
//!
//! A bud is linked to a companion when the bud is a substitution instance of
//! the companion up to weakening of left-hand pure atoms. The substitution
//! `θ` maps companion variables to bud variables and must be injective, so
//! that its inverse `σ` reads as a renaming of the bud. Right-hand arguments
//! in positions where the predicate is monotone may differ when the bud's
//! pure part orders them the right way.

use super::{NodeStatus, ProofTree};
use crate::defs::Registry;
use crate::pure::PureState;
use crate::syntax::{Entailment, Expr, PureAtom, SpatialAtom, Subst, VarSort};
use std::collections::BTreeSet;

/// How an integer argument may change without losing truth.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Slack {
    /// `P(..v..) ∧ w ≤ v ⊨ P(..w..)`
    pub down: bool,
    /// `P(..v..) ∧ v ≤ w ⊨ P(..w..)`
    pub up: bool,
}

/// Monotonicity of the `i`-th parameter of `name`. Only transitivity
/// parameters used as bounds in side constraints qualify.
pub fn slack(reg: &Registry, name: &str, i: usize) -> Slack {
    let mut seen = BTreeSet::new();
    slack_rec(reg, name, i, &mut seen)
}

fn slack_rec(reg: &Registry, name: &str, i: usize, seen: &mut BTreeSet<(String, usize)>) -> Slack {
    let none = Slack::default();
    let Some(d) = reg.get(name) else { return none };
    let Some(p) = d.params.get(i) else { return none };
    if p.role != crate::defs::ParamRole::Transitivity || p.sort != VarSort::Int {
        return none;
    }
    if !seen.insert((name.to_string(), i)) {
        return Slack { down: true, up: true };
    }
    let pv = Expr::var(&p.name);
    let mut out = Slack { down: true, up: true };
    if let Some((_, succ)) = &d.order {
        if *succ == p.name {
            return none;
        }
    }
    for a in d.side.atoms() {
        match a {
            PureAtom::ArithLeq(x, y) if *x == pv && *y != pv => out.up = false,
            PureAtom::ArithLeq(x, y) if *y == pv && *x != pv => out.down = false,
            other if other.exprs().contains(&&pv) => return none,
            _ => {}
        }
    }
    for a in &d.body {
        match a {
            SpatialAtom::PointsTo { fields, root, .. } => {
                if fields.contains(&pv) || *root == pv {
                    return none;
                }
            }
            SpatialAtom::Pred { name: q, args, .. } => {
                for (j, x) in args.iter().enumerate() {
                    if *x != pv {
                        continue;
                    }
                    let s =
                        if q == name && j == i { Slack { down: true, up: true } } else { slack_rec(reg, q, j, seen) };
                    out.down &= s.down;
                    out.up &= s.up;
                }
            }
            SpatialAtom::Emp => {}
        }
    }
    out
}

/// Extends `theta` so that `c θ` equals `b`, modulo unfolding numbers.
fn unify_expr(c: &Expr, b: &Expr, theta: &mut Subst) -> bool {
    match c {
        Expr::Var(v) => match theta.get(v) {
            Some(img) => img == b,
            None => {
                if !matches!(b, Expr::Var(_)) {
                    return false;
                }
                theta.insert(v, b.clone());
                true
            }
        },
        _ => c == b,
    }
}

fn unify_atom(c: &SpatialAtom, b: &SpatialAtom, theta: &Subst) -> Option<Subst> {
    let mut t = theta.clone();
    let ok = match (c, b) {
        (
            SpatialAtom::PointsTo { root: cr, sort: cs, fields: cf },
            SpatialAtom::PointsTo { root: br, sort: bs, fields: bf },
        ) => {
            cs == bs
                && cf.len() == bf.len()
                && unify_expr(cr, br, &mut t)
                && cf.iter().zip(bf).all(|(x, y)| unify_expr(x, y, &mut t))
        }
        (SpatialAtom::Pred { name: cn, args: ca, .. }, SpatialAtom::Pred { name: bn, args: ba, .. }) => {
            cn == bn && ca.len() == ba.len() && ca.iter().zip(ba).all(|(x, y)| unify_expr(x, y, &mut t))
        }
        _ => false,
    };
    ok.then_some(t)
}

/// All ways to map the companion atoms one-to-one onto the bud atoms.
fn match_all(c: &[SpatialAtom], b: &[SpatialAtom], theta: Subst, out: &mut Vec<(Subst, Vec<usize>)>) {
    fn go(
        c: &[SpatialAtom],
        b: &[SpatialAtom],
        k: usize,
        theta: Subst,
        used: &mut Vec<bool>,
        assign: &mut Vec<usize>,
        out: &mut Vec<(Subst, Vec<usize>)>,
    ) {
        if out.len() >= 64 {
            return;
        }
        if k == c.len() {
            out.push((theta, assign.clone()));
            return;
        }
        for j in 0..b.len() {
            if used[j] {
                continue;
            }
            if let Some(t) = unify_atom(&c[k], &b[j], &theta) {
                used[j] = true;
                assign.push(j);
                go(c, b, k + 1, t, used, assign, out);
                assign.pop();
                used[j] = false;
            }
        }
    }
    if c.len() != b.len() {
        return;
    }
    let mut used = vec![false; b.len()];
    go(c, b, 0, theta, &mut used, &mut Vec::new(), out);
}

/// Right-hand atoms agree under `theta`, allowing monotone slack.
fn rhs_atom_ok(c: &SpatialAtom, b: &SpatialAtom, theta: &Subst, st: &PureState, reg: &Registry) -> bool {
    let c = c.subst(theta);
    match (&c, b) {
        (SpatialAtom::Pred { name: cn, args: ca, .. }, SpatialAtom::Pred { name: bn, args: ba, .. }) => {
            cn == bn
                && ca.len() == ba.len()
                && ca.iter().zip(ba).enumerate().all(|(i, (x, y))| {
                    if x == y {
                        return true;
                    }
                    let s = slack(reg, cn, i);
                    (s.down && st.entails_atom(&PureAtom::arith_leq(y.clone(), x.clone())))
                        || (s.up && st.entails_atom(&PureAtom::arith_leq(x.clone(), y.clone())))
                })
        }
        _ => c.same_shape(b),
    }
}

fn rhs_ok(comp: &Entailment, bud: &Entailment, theta: &Subst, reg: &Registry) -> bool {
    let st = PureState::from_pure(&bud.lhs.pure);
    let (c, b) = (&comp.rhs.spatial, &bud.rhs.spatial);
    if c.len() != b.len() {
        return false;
    }
    fn go(
        c: &[SpatialAtom],
        b: &[SpatialAtom],
        k: usize,
        used: &mut Vec<bool>,
        ok: &dyn Fn(usize, usize) -> bool,
    ) -> bool {
        if k == c.len() {
            return true;
        }
        for j in 0..b.len() {
            if !used[j] && ok(k, j) {
                used[j] = true;
                if go(c, b, k + 1, used, ok) {
                    return true;
                }
                used[j] = false;
            }
        }
        false
    }
    let ok = |k: usize, j: usize| rhs_atom_ok(&c[k], &b[j], theta, &st, reg);
    if !go(c, b, 0, &mut vec![false; b.len()], &ok) {
        return false;
    }
    let cpure = comp.rhs.pure.subst(theta);
    bud.rhs.pure.atoms().iter().all(|a| cpure.contains(a) || st.entails_atom(a))
}

/// Checks that `bud` is justified by `comp` under `theta` (companion
/// variables to bud expressions). Returns the left-hand atom correspondence
/// `(companion index, bud index)` on success.
pub fn instance(comp: &Entailment, bud: &Entailment, theta: &Subst, reg: &Registry) -> Option<Vec<(usize, usize)>> {
    let lhs: Vec<SpatialAtom> = comp.lhs.spatial.iter().map(|a| a.subst(theta)).collect();
    let mut used = vec![false; bud.lhs.spatial.len()];
    let mut pairs = Vec::new();
    for (i, a) in lhs.iter().enumerate() {
        let j = (0..bud.lhs.spatial.len()).find(|&j| !used[j] && a.same_shape(&bud.lhs.spatial[j]))?;
        used[j] = true;
        pairs.push((i, j));
    }
    if used.iter().any(|u| !u) {
        return None;
    }
    // The frame only tells which locations lie outside the current heap; the
    // companion may not assume more of them than the bud.
    let outside = frame_roots(bud);
    if !frame_roots(comp).iter().all(|r| outside.contains(&r.subst(theta))) {
        return None;
    }
    let st = PureState::from_pure(&bud.lhs.pure);
    let dead = dead_pointers(comp);
    let needed = comp
        .lhs
        .pure
        .atoms()
        .iter()
        .filter(|a| !a.exprs().iter().any(|e| e.as_var().is_some_and(|v| dead.contains(v))));
    if !needed.map(|a| a.subst(theta)).all(|a| st.entails_atom(&a)) {
        return None;
    }
    rhs_ok(comp, bud, theta, reg).then_some(pairs)
}

/// Roots of frame atoms known to be allocated, hence outside the heap of `e.lhs`.
fn frame_roots(e: &Entailment) -> BTreeSet<Expr> {
    e.frame
        .iter()
        .filter(|a| crate::normalize::guard(a).is_none_or(|g| e.lhs.pure.contains(&g)))
        .filter_map(|a| a.root().cloned())
        .collect()
}

/// Pointer variables of `e` that occur only in left-hand disequalities.
/// Such a variable can always be moved to a fresh location, so the atoms
/// that mention it constrain nothing else and are left out of the match.
fn dead_pointers(e: &Entailment) -> BTreeSet<String> {
    let mut live = e.rhs.free_vars();
    live.extend(
        e.lhs.spatial.iter().chain(&e.frame).flat_map(|a| a.exprs()).filter_map(|x| x.as_var().map(str::to_string)),
    );
    let mut out: BTreeSet<String> = BTreeSet::new();
    let mut bad: BTreeSet<String> = BTreeSet::new();
    for a in e.lhs.pure.atoms() {
        for x in a.exprs() {
            if let Expr::Var(v) = x {
                if matches!(a, PureAtom::PtrNeq(p, q) if p != q) {
                    out.insert(v.clone());
                } else {
                    bad.insert(v.clone());
                }
            }
        }
    }
    out.retain(|v| !live.contains(v) && !bad.contains(v));
    out
}

fn progress(comp: &Entailment, bud: &Entailment, pairs: &[(usize, usize)]) -> bool {
    pairs.iter().any(|&(i, j)| {
        let (a, b) = (comp.lhs.spatial[i].unfold_number(), bud.lhs.spatial[j].unfold_number());
        matches!((a, b), (Some(x), Some(y)) if y > x)
    })
}

/// The bud-to-companion renaming `σ` for an injective `θ`.
pub fn sigma_of(theta: &Subst) -> Option<Subst> {
    let mut s = Subst::new();
    let mut images = BTreeSet::new();
    for (c, img) in theta.iter() {
        let Expr::Var(b) = img else { return None };
        if !images.insert(b.clone()) {
            return None;
        }
        if b != c {
            s.insert(b, Expr::var(c));
        }
    }
    Some(s)
}

/// `θ` recovered from a stored `σ`: the inverse on renamed variables and the
/// identity elsewhere.
pub fn theta_of(sigma: &Subst, comp: &Entailment) -> Subst {
    let mut t = Subst::new();
    for (b, c) in sigma.iter() {
        if let Expr::Var(c) = c {
            t.insert(c, Expr::var(b));
        }
    }
    for v in comp.free_vars() {
        if t.get(&v).is_none() {
            t.insert(&v, Expr::var(&v));
        }
    }
    t
}

/// Tries to link `comp` as a companion for `bud`; returns `θ` and the atom
/// correspondence.
pub fn try_link(comp: &Entailment, bud: &Entailment, reg: &Registry) -> Option<(Subst, Vec<(usize, usize)>)> {
    if comp.lhs.spatial.len() != bud.lhs.spatial.len() || comp.rhs.spatial.len() != bud.rhs.spatial.len() {
        return None;
    }
    let mut cands = Vec::new();
    match_all(&comp.lhs.spatial, &bud.lhs.spatial, Subst::new(), &mut cands);
    for (theta, _) in cands {
        // Right-hand variables not fixed by the left map exactly.
        let mut rc = Vec::new();
        match_all(&comp.rhs.spatial, &bud.rhs.spatial, theta.clone(), &mut rc);
        let mut thetas: Vec<Subst> = rc.into_iter().map(|(t, _)| t).collect();
        thetas.push(theta);
        for mut t in thetas {
            for v in comp.free_vars() {
                if t.get(&v).is_none() {
                    t.insert(&v, Expr::var(&v));
                }
            }
            if sigma_of(&t).is_none() {
                continue;
            }
            if let Some(pairs) = instance(comp, bud, &t, reg) {
                if progress(comp, bud, &pairs) {
                    return Some((t, pairs));
                }
            }
        }
    }
    None
}

/// Looks for a companion among the strict ancestors of `leaf`, nearest first.
pub fn link_back(t: &ProofTree, leaf: usize, reg: &Registry) -> Option<(usize, Subst)> {
    if t.nodes[leaf].status != NodeStatus::Open {
        return None;
    }
    let bud = &t.nodes[leaf].ent;
    if !bud.lhs.spatial.iter().any(|a| a.unfold_number().is_some_and(|k| k > 0)) {
        return None;
    }
    for a in t.ancestors(leaf) {
        if let Some((theta, _)) = try_link(&t.nodes[a].ent, bud, reg) {
            return Some((a, sigma_of(&theta)?));
        }
    }
    None
}
