use num_bigint::BigInt;
use proptest::prelude::*;
use shlide::pure::{entails, satisfiable, status_of_pair, PairStatus, PureState};
use shlide::syntax::{Expr, Pure, PureAtom};
use std::collections::BTreeMap;

fn v(s: &str) -> Expr {
    Expr::var(s)
}

fn k(n: i64) -> Expr {
    Expr::int(n)
}

fn pure(atoms: Vec<PureAtom>) -> Pure {
    Pure::from_atoms(atoms)
}

#[test]
fn pointer_examples() {
    let p = pure(vec![PureAtom::ptr_eq(v("x"), v("y")), PureAtom::ptr_neq(v("y"), Expr::Null)]);
    assert!(satisfiable(&p));
    assert!(entails(&p, &pure(vec![PureAtom::ptr_neq(v("x"), Expr::Null)])));
    assert!(!entails(&p, &pure(vec![PureAtom::ptr_neq(v("x"), v("z"))])));
    assert!(!satisfiable(&pure(vec![PureAtom::ptr_neq(v("x"), v("x"))])));
    assert!(!satisfiable(&pure(vec![
        PureAtom::ptr_eq(v("x"), v("y")),
        PureAtom::ptr_eq(v("y"), v("z")),
        PureAtom::ptr_neq(v("z"), v("x")),
    ])));
    assert_eq!(status_of_pair(&p, &v("x"), &v("y")), PairStatus::Equal);
    assert_eq!(status_of_pair(&p, &v("x"), &Expr::Null), PairStatus::Distinct);
    assert_eq!(status_of_pair(&p, &v("x"), &v("w")), PairStatus::Unknown);
}

#[test]
fn arithmetic_examples() {
    let p = pure(vec![PureAtom::arith_leq(v("a"), v("b")), PureAtom::arith_leq(v("b"), v("c"))]);
    assert!(entails(&p, &pure(vec![PureAtom::arith_leq(v("a"), v("c"))])));
    assert!(!entails(&p, &pure(vec![PureAtom::arith_leq(v("c"), v("a"))])));
    let q = pure(vec![PureAtom::arith_leq(v("a"), k(3)), PureAtom::arith_leq(k(4), v("a"))]);
    assert!(!satisfiable(&q));
    let r = pure(vec![PureAtom::arith_leq(v("a"), v("b")), PureAtom::arith_leq(v("b"), v("a"))]);
    assert!(entails(&r, &pure(vec![PureAtom::arith_eq(v("a"), v("b"))])));
    assert!(entails(&pure(vec![]), &pure(vec![PureAtom::arith_leq(k(-2), k(5))])));
    assert!(entails(&pure(vec![PureAtom::False]), &pure(vec![PureAtom::ptr_neq(v("x"), v("x"))])));
}

#[test]
fn arithmetic_model_satisfies_constraints() {
    let p = pure(vec![
        PureAtom::arith_leq(v("a"), v("b")),
        PureAtom::arith_leq(k(2), v("a")),
        PureAtom::arith_eq(v("c"), k(7)),
        PureAtom::arith_leq(v("b"), v("c")),
    ]);
    let m = PureState::from_pure(&p).arith_model().unwrap();
    let get = |x: &str| m[x].clone();
    assert!(BigInt::from(2) <= get("a") && get("a") <= get("b") && get("b") <= get("c"));
    assert_eq!(get("c"), BigInt::from(7));
}

const PTRS: [&str; 3] = ["x", "y", "z"];
const INTS: [&str; 2] = ["a", "b"];
const LOCS: i64 = 4;

fn arb_ptr() -> impl Strategy<Value = Expr> {
    prop_oneof![1 => Just(Expr::Null), 3 => (0..PTRS.len()).prop_map(|i| v(PTRS[i]))]
}

fn arb_int() -> impl Strategy<Value = Expr> {
    prop_oneof![(0i64..6).prop_map(k), (0..INTS.len()).prop_map(|i| v(INTS[i]))]
}

fn arb_atom() -> impl Strategy<Value = PureAtom> {
    prop_oneof![
        (arb_ptr(), arb_ptr()).prop_map(|(a, b)| PureAtom::ptr_eq(a, b)),
        (arb_ptr(), arb_ptr()).prop_map(|(a, b)| PureAtom::ptr_neq(a, b)),
        (arb_int(), arb_int()).prop_map(|(a, b)| PureAtom::arith_eq(a, b)),
        (arb_int(), arb_int()).prop_map(|(a, b)| PureAtom::arith_leq(a, b)),
    ]
}

fn arb_pure() -> impl Strategy<Value = Pure> {
    prop::collection::vec(arb_atom(), 0..5).prop_map(Pure::from_atoms)
}

/// Pointer 0 is null; integers range over a window wide enough to realise
/// every order type of two variables among the constants 0..6.
fn models() -> Vec<BTreeMap<String, i64>> {
    let mut out = Vec::new();
    let ptr_dom: Vec<i64> = (0..=LOCS).collect();
    let int_dom: Vec<i64> = (-5..=11).collect();
    for &x in &ptr_dom {
        for &y in &ptr_dom {
            for &z in &ptr_dom {
                for &a in &int_dom {
                    for &b in &int_dom {
                        out.push(BTreeMap::from([
                            ("x".to_string(), x),
                            ("y".to_string(), y),
                            ("z".to_string(), z),
                            ("a".to_string(), a),
                            ("b".to_string(), b),
                        ]));
                    }
                }
            }
        }
    }
    out
}

fn val(e: &Expr, m: &BTreeMap<String, i64>) -> i64 {
    match e {
        Expr::Null => 0,
        Expr::Int(n) => i64::try_from(n).unwrap(),
        Expr::Var(x) => m[x],
    }
}

fn holds(p: &Pure, m: &BTreeMap<String, i64>) -> bool {
    p.atoms().iter().all(|a| match a {
        PureAtom::PtrEq(x, y) | PureAtom::ArithEq(x, y) => val(x, m) == val(y, m),
        PureAtom::PtrNeq(x, y) => val(x, m) != val(y, m),
        PureAtom::ArithLeq(x, y) => val(x, m) <= val(y, m),
        PureAtom::False => false,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn agrees_with_brute_force(p in arb_pure(), q in arb_pure()) {
        let ms = models();
        let sat = ms.iter().any(|m| holds(&p, m));
        prop_assert_eq!(satisfiable(&p), sat, "satisfiable({})", p);
        let ent = ms.iter().filter(|m| holds(&p, m)).all(|m| holds(&q, m));
        prop_assert_eq!(entails(&p, &q), ent, "{} |= {}", p, q);
    }
}

proptest! {
    #[test]
    fn entailment_is_monotone(p in arb_pure(), extra in arb_pure(), q in arb_pure()) {
        if entails(&p, &q) {
            let mut bigger = p.clone();
            bigger.extend(&extra);
            prop_assert!(entails(&bigger, &q));
        }
        prop_assert!(entails(&p, &p));
    }

    #[test]
    fn pointer_equality_is_a_congruence(p in arb_pure(), a in arb_ptr(), b in arb_ptr(), c in arb_ptr()) {
        let eq = |x: &Expr, y: &Expr| entails(&p, &Pure::from_atoms([PureAtom::ptr_eq(x.clone(), y.clone())]));
        prop_assert!(eq(&a, &a));
        prop_assert_eq!(eq(&a, &b), eq(&b, &a));
        if eq(&a, &b) && eq(&b, &c) {
            prop_assert!(eq(&a, &c));
        }
        if eq(&a, &b) && satisfiable(&p) {
            prop_assert_eq!(status_of_pair(&p, &a, &c), status_of_pair(&p, &b, &c));
        }
    }
}
