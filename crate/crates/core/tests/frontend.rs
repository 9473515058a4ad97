mod common;

use common::*;
use proptest::prelude::*;
use shlide::defs::ParamRole;
use shlide::engine::{prove, Options, Verdict};
use shlide::frontend::cli::{run_cli, EXIT_INPUT, EXIT_MISMATCH, EXIT_OK};
use shlide::frontend::{export_proof, parse, parse_native, parse_slcomp, FrontendError, InputFormat, ProofFormat};
use std::path::PathBuf;

fn proof_of(prelude: &str, query: &str) -> shlide::engine::ProofTree {
    let (e, reg) = ent(prelude, query);
    match prove(&e, &reg, &Options::default()).unwrap() {
        Verdict::Valid(t) => t,
        v => panic!("{query}: expected a proof, got {v}"),
    }
}

/// A scratch file under the system temp directory.
fn scratch(name: &str, text: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("shlide-frontend-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn cli(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["shlide"];
    full.extend_from_slice(args);
    let code = run_cli(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn suite_path(name: &str) -> String {
    suite_dir().join(name).to_string_lossy().to_string()
}

#[test]
fn native_examples() {
    let p = problem(LL, "emp |- emp");
    assert_eq!(p.registry.preds.len(), 1);
    let roles: Vec<ParamRole> = p.registry.preds[0].params.iter().map(|x| x.role).collect();
    assert_eq!(roles, vec![ParamRole::Root, ParamRole::Segment]);
    assert!(p.query.lhs.spatial.is_empty() && p.query.rhs.spatial.is_empty());

    let g = golden();
    assert_eq!(g.registry.preds.len(), 2);
    assert_eq!(g.query.to_string(), "lls(x,null,mi,ma) /\\ x!=null |- llb(x,null,mi)");
}

#[test]
fn native_syntax_errors_carry_positions() {
    match parse_native("data c1 { c1 next; }\ncheck emp |- ;\n") {
        Err(FrontendError::Syntax { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected a syntax error, got {other:?}"),
    }
    assert!(matches!(parse_native("data c1 { c1 next; }\n"), Err(FrontendError::Query(_))));
    assert!(parse_native("check emp |- nope(x,y);").is_err());
}

#[test]
fn bundled_native_files_round_trip() {
    let mut n = 0;
    for f in suite_files() {
        if InputFormat::from_path(&f) != InputFormat::Native {
            continue;
        }
        let text = std::fs::read_to_string(&f).unwrap();
        let p = parse_native(&text).unwrap_or_else(|e| panic!("{}: {e}", f.display()));
        let q = parse_native(&p.to_string()).unwrap_or_else(|e| panic!("{}: {e}\n{p}", f.display()));
        assert_eq!(p, q, "{}", f.display());
        n += 1;
    }
    assert!(n >= 30);
}

#[test]
fn slcomp_singly_linked_lists() {
    let text = std::fs::read_to_string(suite_dir().join("slcomp_ls_concat.smt2")).unwrap();
    let p = parse_slcomp(&text).unwrap();
    assert_eq!(p.registry.preds.len(), 1);
    let d = &p.registry.preds[0];
    assert_eq!(d.name, "ls");
    let roles: Vec<ParamRole> = d.params.iter().map(|x| x.role).collect();
    assert_eq!(roles, vec![ParamRole::Root, ParamRole::Segment]);
    assert_eq!(p.expect, Some(shlide::frontend::Expected::Valid));
    // The same list in native syntax proves the same query.
    let v = prove(&p.query, &p.registry, &Options::default()).unwrap();
    assert!(v.is_valid());
}

#[test]
fn slcomp_nested_lists() {
    let text = std::fs::read_to_string(suite_dir().join("slcomp_nll_fold.smt2")).unwrap();
    let p = parse_slcomp(&text).unwrap();
    let nll = p.registry.get("nll").unwrap();
    let roles: Vec<ParamRole> = nll.params.iter().map(|x| x.role).collect();
    assert_eq!(roles, vec![ParamRole::Root, ParamRole::Segment, ParamRole::Border]);
    assert_eq!(nll.body.len(), 3);
}

#[test]
fn slcomp_rejects_wand_and_unannotated_predicates() {
    let text = std::fs::read_to_string(suite_dir().join("slcomp_wand.smt2")).unwrap();
    match parse_slcomp(&text) {
        Err(FrontendError::UnsupportedConstruct(s)) => assert!(s.contains("wand"), "{s}"),
        other => panic!("expected an unsupported construct, got {other:?}"),
    }
    let text = std::fs::read_to_string(suite_dir().join("slcomp_ls_concat.smt2")).unwrap();
    let bare = text.replace(";; roles: ls root seg\n", "");
    assert_eq!(parse_slcomp(&bare), Err(FrontendError::RoleAnnotationMissing("ls".into())));
}

#[test]
fn every_bundled_file_parses_or_is_unsupported() {
    for f in suite_files() {
        let text = std::fs::read_to_string(&f).unwrap();
        match parse(&text, InputFormat::from_path(&f)) {
            Ok(_) | Err(FrontendError::UnsupportedConstruct(_)) => {}
            Err(e) => panic!("{}: {e}", f.display()),
        }
    }
}

#[test]
fn cli_golden_agrees_with_the_oracle() {
    let (code, out, _) = cli(&["--input", &suite_path("golden_lls_llb.shl"), "--expect", "valid", "--oracle-check"]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "VALID");
    assert_eq!(lines[1], "ORACLE-AGREES");
}

#[test]
fn cli_prints_a_counter_model() {
    let (code, out, _) = cli(&["--input", &suite_path("tree_sort_mismatch.shl"), "--expect", "invalid"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("INVALID\n"), "{out}");
    assert!(out.contains("stack:\n") && out.contains("heap:\n"), "{out}");
    assert!(out.contains("x = ℓ1"), "{out}");
}

#[test]
fn cli_exit_codes() {
    let bad = scratch("bad.shl", "data c1 { c1 next; }\ncheck emp |- \n");
    let (code, out, err) = cli(&["--input", bad.to_str().unwrap()]);
    assert_eq!(code, EXIT_INPUT);
    assert!(out.is_empty());
    assert!(!err.is_empty());

    let (code, out, _) = cli(&["--input", &suite_path("golden_lls_llb.shl"), "--expect", "invalid"]);
    assert_eq!(code, EXIT_MISMATCH);
    assert!(out.starts_with("VALID"));

    let (code, out, _) = cli(&["--input", &suite_path("golden_lls_llb.shl"), "--node-budget", "3"]);
    assert_eq!(code, shlide::frontend::cli::EXIT_RESOURCE);
    assert!(out.starts_with("UNKNOWN"));

    let (code, _, _) = cli(&["--input", &suite_path("ll_refl.shl"), "--expect", "annotated", "--quiet"]);
    assert_eq!(code, EXIT_OK);
}

#[test]
fn cli_writes_proofs() {
    let dir = scratch("placeholder", "");
    let target = dir.with_file_name("golden.dot");
    let (code, _, _) = cli(&[
        "--input",
        &suite_path("golden_lls_llb.shl"),
        "--proof-out",
        target.to_str().unwrap(),
        "--proof-format",
        "dot",
    ]);
    assert_eq!(code, EXIT_OK);
    let dot = std::fs::read_to_string(&target).unwrap();
    let g = golden();
    let v = prove(&g.query, &g.registry, &Options::default()).unwrap();
    assert_eq!(dot, export_proof(v.tree(), ProofFormat::Dot));
}

#[test]
fn dot_export_of_the_golden_proof() {
    let g = golden();
    let v = prove(&g.query, &g.registry, &Options::default()).unwrap();
    let dot = export_proof(v.tree(), ProofFormat::Dot);
    assert!(dot.starts_with("digraph proof {"));
    let nodes = dot.lines().filter(|l| l.contains("[label=\"#")).count();
    assert_eq!(nodes, 13);
    let dashed: Vec<&str> = dot.lines().filter(|l| l.contains("style=dashed")).collect();
    assert_eq!(dashed.len(), 1);
    assert!(dashed[0].contains("[x/X#1, mi/m'#2]"), "{}", dashed[0]);
    let solid = dot.lines().filter(|l| l.contains(" -> ") && !l.contains("dashed")).count();
    assert_eq!(solid, 12);
    let text = export_proof(v.tree(), ProofFormat::Text);
    assert!(text.contains("~~> companion#0 via [x/X#1, mi/m'#2]"), "{text}");
}

#[test]
fn dot_export_of_an_axiom() {
    let t = proof_of(LL, "x->c1(y) |- x->c1(y)");
    let dot = export_proof(&t, ProofFormat::Dot);
    assert_eq!(dot.lines().filter(|l| l.contains("[label=\"#")).count(), 1);
    assert_eq!(dot.lines().filter(|l| l.contains(" -> ")).count(), 0);
}

#[test]
fn dot_export_of_two_cycles() {
    let t = proof_of(LL, "ll(x,y) * ll(y,null) * ll(a,c) * ll(c,null) |- ll(x,null) * ll(a,null)");
    let dot = export_proof(&t, ProofFormat::Dot);
    assert_eq!(dot.lines().filter(|l| l.contains("style=dashed")).count(), t.backlinks.len());
    assert!(t.backlinks.len() >= 2);
}

#[test]
fn export_is_deterministic() {
    for (name, p) in suite() {
        let a = prove(&p.query, &p.registry, &Options::default());
        let b = prove(&p.query, &p.registry, &Options::default());
        let (Ok(a), Ok(b)) = (a, b) else { continue };
        for f in [ProofFormat::Text, ProofFormat::Dot] {
            assert_eq!(export_proof(a.tree(), f), export_proof(b.tree(), f), "{name}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn printed_problems_parse_back(seed in any::<u64>(), flip in any::<bool>()) {
        let (e, _) = random_lhs(seed);
        let (other, _) = random_lhs(seed.rotate_left(17));
        let prelude = if e.to_string().contains("c4") || e.to_string().contains("lls") { LLS } else { LL };
        let query = if flip { format!("{} |- {}", e.lhs, other.lhs) } else { format!("{} |- {}", e.lhs, e.lhs) };
        if let Some((q, r)) = try_ent(prelude, &query) {
            let p = shlide::frontend::ProblemFile { registry: r, query: q, expect: None };
            let back = parse_native(&p.to_string());
            prop_assert!(back.is_ok(), "{}\n{:?}", p, back);
            prop_assert_eq!(back.unwrap(), p);
        }
    }
}
