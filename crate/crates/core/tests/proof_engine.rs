mod common;

use common::*;
use proptest::prelude::*;
use shlide::defs::{Fresh, Registry};
use shlide::engine::{
    apply_rule, check_cyclic_soundness, is_closed, link_back, prove, Backlink, Closure, NodeStatus, Options, ProofTree,
    SoundnessFailure, StuckCase, Verdict,
};
use shlide::oracle::{eval_exact, oracle_entails, Bound, OracleVerdict};
use shlide::rule::{identity_trace, Rule};
use shlide::syntax::{Entailment, Expr, Subst};

fn proof(e: &Entailment, reg: &Registry) -> Verdict {
    prove(e, reg, &Options::default()).unwrap()
}

fn golden_tree() -> (ProofTree, Registry) {
    let g = golden();
    match proof(&g.query, &g.registry) {
        Verdict::Valid(t) => (t, g.registry),
        v => panic!("golden: {v}"),
    }
}

fn sigma(pairs: &[(&str, &str)]) -> Subst {
    let mut s = Subst::new();
    for (k, v) in pairs {
        s.insert(k, Expr::var(v));
    }
    s
}

#[test]
fn golden_proof_shape() {
    let (t, reg) = golden_tree();
    assert_eq!(t.nodes.len(), 13);
    assert_eq!(t.backlinks.len(), 1);
    let b = &t.backlinks[0];
    assert_eq!((b.bud, b.companion), (12, 0));
    assert_eq!(b.sigma.to_string(), "[x/X#1, mi/m'#2]");
    assert_eq!(t.edge_into(1).unwrap().rules, vec![Rule::LInd]);
    assert_eq!(t.edge_into(3).unwrap().rules, vec![Rule::ExM]);
    assert_eq!(t.edge_into(9).unwrap().rules, vec![Rule::NeqStar, Rule::RInd]);
    assert!(t.max_unfold() <= 2);
    assert_eq!(check_cyclic_soundness(&t, &reg), Ok(()));
}

#[test]
fn empty_heaps_close_by_emp() {
    let (e, reg) = ent(LL, "emp /\\ x=x |- emp");
    let Verdict::Valid(t) = proof(&e, &reg) else { panic!("expected a proof") };
    assert_eq!(t.edge_into(1).unwrap().rules, vec![Rule::EqL]);
    assert_eq!(t.nodes[1].status, NodeStatus::ClosedValid(Rule::Emp));
}

#[test]
fn identical_sides_close_by_id_before_normalization() {
    let (e, reg) = ent(LL, "ll(x,y) |- ll(x,y)");
    let Verdict::Valid(t) = proof(&e, &reg) else { panic!("expected a proof") };
    assert_eq!(t.nodes.len(), 1);
    assert_eq!(t.nodes[0].status, NodeStatus::ClosedValid(Rule::Id));
}

#[test]
fn sort_mismatch_is_invalid_with_a_counter_model() {
    let (e, reg) = ent(TREE, "x->c1(null) |- tree(x,null)");
    match proof(&e, &reg) {
        Verdict::Invalid { case, witness: Some(m), .. } => {
            assert_eq!(case, StuckCase::Mismatch);
            assert_eq!(eval_exact(&m, &e.lhs, &reg), Ok(true));
            assert_eq!(eval_exact(&m, &e.rhs, &reg), Ok(false));
        }
        v => panic!("expected an invalid verdict with a witness, got {v:?}"),
    }
}

#[test]
fn partial_trees_report_next_rule_or_stuck_case() {
    let (e5, reg) = ent(LLS, "x->c4(null,ma) /\\ x!=null /\\ mi<=ma |- llb(x,null,mi)");
    assert_eq!(is_closed(&ProofTree::single(e5), &reg), Closure::Unknown(0, Rule::RInd));
    let (bad, reg) = ent(&format!("{LL}{LLS}"), "x->c1(y) /\\ x!=null /\\ 0<=a |- x->c4(y,a)");
    assert_eq!(is_closed(&ProofTree::single(bad), &reg), Closure::Invalid(0, StuckCase::Mismatch));
    let (t, reg) = golden_tree();
    assert_eq!(is_closed(&t, &reg), Closure::Valid);
}

#[test]
fn stuck_cases_are_distinguished() {
    let cases = [
        ("x->c1(y) /\\ x!=null |- emp", StuckCase::Unmatched),
        ("emp /\\ x!=y |- x->c1(y)", StuckCase::Unallocated),
        ("emp /\\ x!=y |- emp /\\ x=y", StuckCase::NoRule),
        ("x->c1(y) /\\ x!=null /\\ y!=z |- x->c1(z)", StuckCase::Mismatch),
    ];
    for (q, want) in cases {
        let (e, reg) = ent(LL, q);
        match proof(&e, &reg) {
            Verdict::Invalid { case, witness, .. } => {
                assert_eq!(case, want, "{q}");
                let m = witness.unwrap_or_else(|| panic!("{q}: no witness"));
                assert_eq!(eval_exact(&m, &e.lhs, &reg), Ok(true), "{q}");
                assert_eq!(eval_exact(&m, &e.rhs, &reg), Ok(false), "{q}");
            }
            v => panic!("{q}: {v}"),
        }
    }
}

#[test]
fn single_rule_applications() {
    let (t, reg) = golden_tree();
    let mut fresh = Fresh::starting(100);
    let e5 = &t.nodes[5].ent;
    let e6 = apply_rule(e5, Rule::RInd, &reg, &mut fresh).unwrap();
    assert_eq!(e6.len(), 1);
    assert_eq!(e6[0].to_string(), t.nodes[6].ent.to_string());
    let e10 = &t.nodes[10].ent;
    let out = apply_rule(e10, Rule::Star, &reg, &mut fresh).unwrap();
    assert_eq!(out, vec![t.nodes[11].ent.clone(), t.nodes[12].ent.clone()]);
    assert!(apply_rule(e5, Rule::Inconsistency, &reg, &mut fresh).is_err());
    assert!(apply_rule(e5, Rule::Emp, &reg, &mut fresh).is_err());
    let (bad, reg) = ent(LL, "emp /\\ x!=x |- ll(x,x)");
    assert_eq!(apply_rule(&bad, Rule::Inconsistency, &reg, &mut fresh), Ok(vec![]));
    let err = apply_rule(&bad, Rule::Star, &reg, &mut fresh).unwrap_err();
    assert_eq!(err.rule, Rule::Star);
}

/// The golden tree with node 12 reopened and its back-link removed.
fn reopened() -> (ProofTree, Registry) {
    let (mut t, reg) = golden_tree();
    t.backlinks.clear();
    t.nodes[12].status = NodeStatus::Open;
    (t, reg)
}

#[test]
fn link_back_finds_the_golden_companion() {
    let (t, reg) = reopened();
    let (c, s) = link_back(&t, 12, &reg).unwrap();
    assert_eq!(c, 0);
    assert_eq!(s, sigma(&[("X#1", "x"), ("m'#2", "mi")]));
}

#[test]
fn link_back_needs_an_unfolded_occurrence() {
    let (mut t, reg) = reopened();
    t.nodes[12].ent = t.nodes[12].ent.reset_unfold();
    assert_eq!(link_back(&t, 12, &reg), None);
}

#[test]
fn link_back_needs_progress() {
    // Companion with the same unfolding number as the bud.
    let (mut t, reg) = reopened();
    for n in [0, 1, 3, 9, 10] {
        let e = t.nodes[n].ent.clone();
        let mut e = e.reset_unfold();
        for a in e.lhs.spatial.iter_mut() {
            if a.is_pred() {
                *a = a.with_unfold(1);
            }
        }
        t.nodes[n].ent = e;
    }
    assert_eq!(link_back(&t, 12, &reg), None);
}

#[test]
fn golden_soundness_negatives() {
    let (t, reg) = golden_tree();
    assert_eq!(check_cyclic_soundness(&t, &reg), Ok(()));

    let mut no_mi = t.clone();
    no_mi.backlinks[0].sigma = sigma(&[("X#1", "x")]);
    assert!(matches!(check_cyclic_soundness(&no_mi, &reg), Err(SoundnessFailure::SigmaMismatch { .. })));

    let mut swapped = t.clone();
    swapped.backlinks[0].sigma = sigma(&[("X#1", "mi"), ("m'#2", "x")]);
    assert!(matches!(check_cyclic_soundness(&swapped, &reg), Err(SoundnessFailure::SigmaMismatch { .. })));

    let mut sideways = t.clone();
    sideways.backlinks[0].companion = 2;
    assert_eq!(check_cyclic_soundness(&sideways, &reg), Err(SoundnessFailure::NotAncestor { bud: 12, companion: 2 }));

    let mut flat = t.clone();
    for e in flat.edges.iter_mut() {
        for step in e.trace.iter_mut() {
            step.2 = false;
        }
    }
    assert_eq!(check_cyclic_soundness(&flat, &reg), Err(SoundnessFailure::NoProgress { bud: 12, companion: 0 }));

    let mut dangling = t.clone();
    dangling.backlinks.clear();
    assert_eq!(check_cyclic_soundness(&dangling, &reg), Err(SoundnessFailure::NotPreProof(12)));
}

#[test]
fn cycle_through_hypothesis_alone_has_no_progress() {
    let (e, reg) = ent(LL, "ll(x,y) /\\ x!=y /\\ x!=null |- ll(x,y) /\\ x!=y");
    let mut t = ProofTree::single(e.clone());
    let mut child = e.clone();
    child.rhs.pure = Default::default();
    let mut bud = child.clone();
    bud.rhs.pure = e.rhs.pure.clone();
    let c = t.add_child(0, child, vec![Rule::Hypothesis], identity_trace(1), Subst::new());
    let b = t.add_child(c, bud, vec![Rule::Hypothesis], identity_trace(1), Subst::new());
    t.nodes[0].status = NodeStatus::Inner;
    t.nodes[c].status = NodeStatus::Inner;
    t.nodes[b].status = NodeStatus::Bud { companion: 0, sigma: Subst::new() };
    t.backlinks.push(Backlink { companion: 0, bud: b, sigma: Subst::new() });
    assert_eq!(check_cyclic_soundness(&t, &reg), Err(SoundnessFailure::NoProgress { bud: b, companion: 0 }));
}

#[test]
fn two_independent_cycles() {
    let (e, reg) = ent(LL, "ll(x,y) * ll(y,null) * ll(a,c) * ll(c,null) |- ll(x,null) * ll(a,null)");
    let Verdict::Valid(t) = proof(&e, &reg) else { panic!("expected a proof") };
    assert!(t.backlinks.len() >= 2, "{} back-links", t.backlinks.len());
    assert_eq!(check_cyclic_soundness(&t, &reg), Ok(()));
    assert!(t.max_unfold() <= 2);
}

#[test]
fn resource_limit_is_reported() {
    let g = golden();
    let r = prove(&g.query, &g.registry, &Options { node_budget: 3 });
    assert!(matches!(r, Err(shlide::engine::ProveError::ResourceLimit(3))));
}

#[test]
fn unbound_right_variables_are_rejected() {
    let (mut e, reg) = ent(LL, "ll(x,y) |- ll(x,y)");
    e.rhs = e.rhs.subst(&sigma(&[("y", "z")]));
    assert!(matches!(prove(&e, &reg, &Options::default()), Err(shlide::engine::ProveError::UnboundRhs(_))));
}

#[test]
fn bundled_proofs_are_sound_deterministic_and_shallow() {
    for (name, p) in suite() {
        let v = proof(&p.query, &p.registry);
        assert_eq!(v, proof(&p.query, &p.registry), "{name}: nondeterministic");
        assert!(v.tree().max_unfold() <= 2, "{name}: unfolding number {}", v.tree().max_unfold());
        match &v {
            Verdict::Valid(t) => assert_eq!(check_cyclic_soundness(t, &p.registry), Ok(()), "{name}"),
            Verdict::Invalid { witness, .. } => {
                let m = witness.as_ref().unwrap_or_else(|| panic!("{name}: no witness"));
                assert_eq!(eval_exact(m, &p.query.lhs, &p.registry), Ok(true), "{name}");
                assert_eq!(eval_exact(m, &p.query.rhs, &p.registry), Ok(false), "{name}");
            }
        }
    }
}

#[test]
fn every_golden_node_is_bounded_valid() {
    let (t, reg) = golden_tree();
    let b = Bound { max_unfold: 3, locs: 4, ..Bound::default() };
    for n in &t.nodes {
        let v = oracle_entails(&n.ent, &reg, &b).unwrap();
        assert_eq!(v, OracleVerdict::BoundedValid, "node #{}: {}", n.id, n.ent);
    }
}

/// Random `ll` entailments whose right-hand variables occur on the left.
fn random_entailment(seed: u64) -> Option<(Entailment, Registry)> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    if rng.gen_bool(0.5) {
        return chain_entailment(&mut rng);
    }
    let vars = ["x", "y", "z"];
    let any = |rng: &mut rand::rngs::StdRng| if rng.gen_bool(0.2) { "null" } else { vars[rng.gen_range(0..3)] };
    let side = |rng: &mut rand::rngs::StdRng, n: usize| -> String {
        let atoms: Vec<String> = (0..n)
            .map(|_| {
                let r = vars[rng.gen_range(0..3)];
                let f = any(rng);
                if rng.gen_bool(0.3) {
                    format!("{r}->c1({f})")
                } else {
                    format!("ll({r},{f})")
                }
            })
            .collect();
        if atoms.is_empty() {
            "emp".to_string()
        } else {
            atoms.join(" * ")
        }
    };
    let n = rng.gen_range(1..=3);
    let mut lhs = side(&mut rng, n);
    if rng.gen_bool(0.5) {
        let (a, b) = (vars[rng.gen_range(0..3)], any(&mut rng));
        if a != b {
            lhs = format!("{lhs} /\\ {a}!={b}");
        }
    }
    let n = rng.gen_range(0..=2);
    let rhs = side(&mut rng, n);
    try_ent(LL, &format!("{lhs} |- {rhs}"))
}

/// A chain `v0 -> v1 -> .. -> null` of cells and segments on the left,
/// plain or sorted, and a random coarsening of it on the right, possibly
/// with a dropped or mis-ended segment.
fn chain_entailment(rng: &mut rand::rngs::StdRng) -> Option<(Entailment, Registry)> {
    use rand::Rng;
    let n = rng.gen_range(1..=4);
    let names: Vec<String> = (0..n).map(|i| format!("v{i}")).chain(["null".to_string()]).collect();
    let d: Vec<String> = (0..=n).map(|i| format!("d{i}")).collect();
    let sorted = rng.gen_bool(0.5);
    let lhs: Vec<String> = (0..n)
        .map(|i| match (sorted, rng.gen_bool(0.4)) {
            (false, true) => format!("{}->c1({})", names[i], names[i + 1]),
            (false, false) => format!("ll({},{})", names[i], names[i + 1]),
            (true, true) => format!("{}->c4({},{})", names[i], names[i + 1], d[i + 1]),
            (true, false) => format!("lls({},{},{},{})", names[i], names[i + 1], d[i], d[i + 1]),
        })
        .collect();
    let mut pure: Vec<String> = Vec::new();
    if sorted {
        for i in 0..n {
            if rng.gen_bool(0.7) {
                pure.push(format!("{}<={}", d[i], d[i + 1]));
            }
        }
    }
    let mut rhs = Vec::new();
    let mut i = 0;
    while i < n {
        let j = rng.gen_range(i + 1..=n);
        let end = if rng.gen_bool(0.1) { names[rng.gen_range(0..=n)].clone() } else { names[j].clone() };
        if !rng.gen_bool(0.05) {
            rhs.push(match (sorted, rng.gen_bool(0.5)) {
                (false, _) => format!("ll({},{end})", names[i]),
                (true, true) => format!("llb({},{end},{})", names[i], d[rng.gen_range(0..=i)]),
                (true, false) => format!("lls({},{end},{},{})", names[i], d[i], d[j]),
            });
        }
        i = j;
    }
    let rhs = if rhs.is_empty() { "emp".to_string() } else { rhs.join(" * ") };
    let mut lhs = lhs.join(" * ");
    if !pure.is_empty() {
        lhs = format!("{lhs} /\\ {}", pure.join(" /\\ "));
    }
    try_ent(if sorted { LLS } else { LL }, &format!("{lhs} |- {rhs}"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn verdicts_agree_with_the_oracle(seed in any::<u64>()) {
        let Some((e, reg)) = random_entailment(seed) else { return Ok(()) };
        let v = proof(&e, &reg);
        let b = Bound { max_unfold: 3, locs: 5, data_lo: -1, data_hi: 4 };
        let o = oracle_entails(&e, &reg, &b).unwrap();
        match &v {
            Verdict::Valid(t) => {
                prop_assert_eq!(o, OracleVerdict::BoundedValid, "{}", e);
                prop_assert_eq!(check_cyclic_soundness(t, &reg), Ok(()));
            }
            Verdict::Invalid { witness, .. } => {
                prop_assert!(matches!(o, OracleVerdict::Invalid(_)), "{}", e);
                let m = witness.as_ref().expect("witness");
                prop_assert_eq!(eval_exact(m, &e.lhs, &reg), Ok(true));
                prop_assert_eq!(eval_exact(m, &e.rhs, &reg), Ok(false));
            }
        }
        prop_assert!(v.tree().max_unfold() <= 2);
        prop_assert_eq!(&v, &proof(&e, &reg));
    }
}
