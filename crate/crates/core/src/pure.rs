//! Decision procedure for the pure fragment.
//!
//! Pointer atoms are handled by union-find plus a disequality list. Arithmetic
//! atoms become difference constraints `a - b <= c` over the integers, decided
//! by negative-cycle detection.

use crate::syntax::{Expr, Pure, PureAtom};
use num_bigint::BigInt;
use num_traits::{One, Zero};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairStatus {
    Equal,
    Distinct,
    Unknown,
}

/// `a - b <= c`
#[derive(Clone, Debug, PartialEq, Eq)]
struct Diff {
    a: Expr,
    b: Expr,
    c: BigInt,
}

/// Asserted pure facts, split by sort.
#[derive(Clone, Debug, Default)]
pub struct PureState {
    parent: BTreeMap<Expr, Expr>,
    neqs: Vec<(Expr, Expr)>,
    diffs: Vec<Diff>,
    inconsistent: bool,
}

impl PureState {
    pub fn new() -> PureState {
        PureState::default()
    }

    pub fn from_pure(p: &Pure) -> PureState {
        let mut s = PureState::new();
        for a in p.atoms() {
            s.assert_atom(a);
        }
        s
    }

    fn find(&self, e: &Expr) -> Expr {
        let mut cur = e.clone();
        while let Some(p) = self.parent.get(&cur) {
            if *p == cur {
                break;
            }
            cur = p.clone();
        }
        cur
    }

    fn union(&mut self, a: &Expr, b: &Expr) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // Smaller representative wins so that null stays a representative.
            let (lo, hi) = if ra <= rb { (ra, rb) } else { (rb, ra) };
            self.parent.insert(hi, lo.clone());
            self.parent.entry(lo.clone()).or_insert(lo);
        }
    }

    pub fn assert_atom(&mut self, a: &PureAtom) {
        match a {
            PureAtom::PtrEq(x, y) => self.union(x, y),
            PureAtom::PtrNeq(x, y) => self.neqs.push((x.clone(), y.clone())),
            PureAtom::ArithEq(x, y) => {
                self.diffs.push(Diff { a: x.clone(), b: y.clone(), c: BigInt::zero() });
                self.diffs.push(Diff { a: y.clone(), b: x.clone(), c: BigInt::zero() });
            }
            PureAtom::ArithLeq(x, y) => self.diffs.push(Diff { a: x.clone(), b: y.clone(), c: BigInt::zero() }),
            PureAtom::False => self.inconsistent = true,
        }
    }

    fn pointer_sat(&self) -> bool {
        self.neqs.iter().all(|(a, b)| self.find(a) != self.find(b))
    }

    pub fn satisfiable(&self) -> bool {
        !self.inconsistent && self.pointer_sat() && solve_diffs(&self.diffs).is_some()
    }

    /// An integer assignment to the arithmetic variables, if one exists.
    pub fn arith_model(&self) -> Option<BTreeMap<String, BigInt>> {
        solve_diffs(&self.diffs)
    }

    /// `π ⊨ a`, by refuting `π ∧ ¬a`.
    pub fn entails_atom(&self, a: &PureAtom) -> bool {
        if !self.satisfiable() {
            return true;
        }
        match a {
            PureAtom::PtrEq(x, y) => self.find(x) == self.find(y),
            PureAtom::PtrNeq(x, y) => {
                let (rx, ry) = (self.find(x), self.find(y));
                rx != ry
                    && self.neqs.iter().any(|(p, q)| {
                        let (rp, rq) = (self.find(p), self.find(q));
                        (rp == rx && rq == ry) || (rp == ry && rq == rx)
                    })
            }
            PureAtom::ArithLeq(x, y) => {
                // ¬(x <= y)  is  y - x <= -1
                self.refutes(&[Diff { a: y.clone(), b: x.clone(), c: -BigInt::one() }])
            }
            PureAtom::ArithEq(x, y) => {
                self.refutes(&[Diff { a: y.clone(), b: x.clone(), c: -BigInt::one() }])
                    && self.refutes(&[Diff { a: x.clone(), b: y.clone(), c: -BigInt::one() }])
            }
            PureAtom::False => false,
        }
    }

    fn refutes(&self, extra: &[Diff]) -> bool {
        let mut d = self.diffs.clone();
        d.extend_from_slice(extra);
        solve_diffs(&d).is_none()
    }

    pub fn status_of_pair(&self, a: &Expr, b: &Expr) -> PairStatus {
        if self.entails_atom(&PureAtom::ptr_eq(a.clone(), b.clone())) {
            PairStatus::Equal
        } else if self.entails_atom(&PureAtom::ptr_neq(a.clone(), b.clone())) {
            PairStatus::Distinct
        } else {
            PairStatus::Unknown
        }
    }
}

/// Solves difference constraints over the integers. Constants are encoded as
/// offsets from a zero node. Returns values of the variables.
fn solve_diffs(diffs: &[Diff]) -> Option<BTreeMap<String, BigInt>> {
    // Node 0 is the zero reference.
    let mut index: BTreeMap<String, usize> = BTreeMap::new();
    let node = |e: &Expr, index: &mut BTreeMap<String, usize>| -> (usize, BigInt) {
        match e {
            Expr::Var(v) => {
                let n = index.len() + 1;
                (*index.entry(v.clone()).or_insert(n), BigInt::zero())
            }
            Expr::Int(k) => (0, k.clone()),
            Expr::Null => (0, BigInt::zero()),
        }
    };
    // Edge v -> u with weight w encodes u - v <= w.
    let mut edges: Vec<(usize, usize, BigInt)> = Vec::new();
    for d in diffs {
        let (u, ku) = node(&d.a, &mut index);
        let (v, kv) = node(&d.b, &mut index);
        // (u + ku) - (v + kv) <= c
        let w = &d.c - &ku + &kv;
        if u == v {
            if w < BigInt::zero() {
                return None;
            }
            continue;
        }
        edges.push((v, u, w));
    }
    let n = index.len() + 1;
    let mut dist = vec![BigInt::zero(); n];
    for round in 0..=n {
        let mut changed = false;
        for (v, u, w) in &edges {
            let cand = &dist[*v] + w;
            if cand < dist[*u] {
                dist[*u] = cand;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        if round == n {
            return None;
        }
    }
    let z = dist[0].clone();
    Some(index.into_iter().map(|(k, i)| (k, &dist[i] - &z)).collect())
}

pub fn satisfiable(p: &Pure) -> bool {
    PureState::from_pure(p).satisfiable()
}

/// `π ⊨ π'`.
pub fn entails(p: &Pure, q: &Pure) -> bool {
    let s = PureState::from_pure(p);
    q.atoms().iter().all(|a| s.entails_atom(a))
}

pub fn status_of_pair(p: &Pure, a: &Expr, b: &Expr) -> PairStatus {
    PureState::from_pure(p).status_of_pair(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Expr {
        Expr::var(s)
    }

    fn p(atoms: Vec<PureAtom>) -> Pure {
        Pure::from_atoms(atoms)
    }

    #[test]
    fn eq_and_neq_unsat() {
        assert!(!satisfiable(&p(vec![PureAtom::ptr_eq(v("x"), v("y")), PureAtom::ptr_neq(v("x"), v("y"))])));
    }

    #[test]
    fn order_chain_sat() {
        assert!(satisfiable(&p(vec![PureAtom::arith_leq(v("mi"), v("m'")), PureAtom::arith_leq(v("m'"), v("ma"))])));
    }

    #[test]
    fn constant_bounds_unsat() {
        assert!(!satisfiable(&p(vec![
            PureAtom::arith_leq(v("a"), Expr::int(5)),
            PureAtom::arith_leq(Expr::int(7), v("a"))
        ])));
    }

    #[test]
    fn entails_examples() {
        let a = PureAtom::arith_leq(v("mi"), v("ma"));
        assert!(entails(&p(vec![a.clone()]), &p(vec![a])));
        let b = PureAtom::arith_leq(v("mi"), v("m'"));
        assert!(entails(&p(vec![PureAtom::ptr_neq(v("x"), Expr::Null), b.clone()]), &p(vec![b])));
        assert!(!entails(&Pure::new(), &p(vec![PureAtom::ptr_neq(v("x"), v("y"))])));
    }

    #[test]
    fn entails_strict_via_integers() {
        // a <= b and b <= a entail a = b
        let pi = p(vec![PureAtom::arith_leq(v("a"), v("b")), PureAtom::arith_leq(v("b"), v("a"))]);
        assert!(entails(&pi, &p(vec![PureAtom::arith_eq(v("a"), v("b"))])));
        assert!(!entails(&p(vec![PureAtom::arith_leq(v("a"), v("b"))]), &p(vec![PureAtom::arith_eq(v("a"), v("b"))])));
    }

    #[test]
    fn pair_status_examples() {
        let pi = p(vec![PureAtom::ptr_eq(v("x"), v("y"))]);
        assert_eq!(status_of_pair(&pi, &v("x"), &v("y")), PairStatus::Equal);
        let pi = p(vec![PureAtom::ptr_neq(v("x"), Expr::Null)]);
        assert_eq!(status_of_pair(&pi, &v("x"), &Expr::Null), PairStatus::Distinct);
        assert_eq!(status_of_pair(&Pure::new(), &v("x"), &v("y")), PairStatus::Unknown);
    }

    #[test]
    fn model_satisfies_constraints() {
        let pi = p(vec![PureAtom::arith_leq(v("a"), v("b")), PureAtom::arith_leq(Expr::int(3), v("a"))]);
        let m = PureState::from_pure(&pi).arith_model().unwrap();
        assert!(m["a"] >= BigInt::from(3));
        assert!(m["a"] <= m["b"]);
    }
}
