#![allow(dead_code)]

use shlide::defs::Registry;
use shlide::frontend::{parse, parse_native, InputFormat, ProblemFile};
use shlide::syntax::{Entailment, SymbolicHeap};
use std::path::PathBuf;

pub const LL: &str = "data c1 { c1 next; }
pred ll(root r, seg F) := emp /\\ r=F \\/ exists X. r->c1(X) * ll(X,F) /\\ r!=F;
";

pub const NLL: &str = "data c1 { c1 next; }
pred ll(root r, seg F) := emp /\\ r=F \\/ exists X. r->c1(X) * ll(X,F) /\\ r!=F;
data c3 { c3 next; c1 down; }
pred nll(root r, seg F, border B) := emp /\\ r=F \\/ exists X,Z. r->c3(X,Z) * ll(Z,B) * nll(X,F,B) /\\ r!=F;
";

pub const LLS: &str = "data c4 { c4 next; int val; }
pred lls(root r, seg F, src mi, tgt ma) :=
    emp /\\ r=F /\\ mi=ma
  \\/ exists X,m'. r->c4(X,m') * lls(X,F,m',ma) /\\ r!=F /\\ mi<=m';
pred llb(root r, seg F, trans b) :=
    emp /\\ r=F
  \\/ exists X,d. r->c4(X,d) * llb(X,F,b) /\\ r!=F /\\ b<=d;
";

pub const TREE: &str = "data c1 { c1 next; }
pred ll(root r, seg F) := emp /\\ r=F \\/ exists X. r->c1(X) * ll(X,F) /\\ r!=F;
data ct { ct left; ct right; }
pred tree(root r, seg B) := emp /\\ r=B \\/ exists L,R. r->ct(L,R) * tree(L,B) * tree(R,B) /\\ r!=B;
";

pub fn suite_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/suite"))
}

/// Bundled problems in file-name order.
pub fn suite_files() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(suite_dir()).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

pub fn name_of(p: &std::path::Path) -> String {
    p.file_stem().unwrap().to_string_lossy().to_string()
}

/// Parsed bundled problems, skipping files outside the supported subset.
pub fn suite() -> Vec<(String, ProblemFile)> {
    suite_files()
        .into_iter()
        .filter_map(|f| {
            let text = std::fs::read_to_string(&f).unwrap();
            parse(&text, InputFormat::from_path(&f)).ok().map(|p| (name_of(&f), p))
        })
        .collect()
}

pub fn golden() -> ProblemFile {
    let text = std::fs::read_to_string(suite_dir().join("golden_lls_llb.shl")).unwrap();
    parse_native(&text).unwrap()
}

/// Parses `query` (without `check`) against a prelude.
pub fn problem(prelude: &str, query: &str) -> ProblemFile {
    parse_native(&format!("{prelude}\ncheck {query};\n")).unwrap_or_else(|e| panic!("{query}: {e}"))
}

pub fn ent(prelude: &str, query: &str) -> (Entailment, Registry) {
    let p = problem(prelude, query);
    (p.query, p.registry)
}

/// As [`ent`], but `None` when the query is rejected.
pub fn try_ent(prelude: &str, query: &str) -> Option<(Entailment, Registry)> {
    parse_native(&format!("{prelude}\ncheck {query};\n")).ok().map(|p| (p.query, p.registry))
}

/// A left-hand side on its own.
pub fn heap(prelude: &str, text: &str) -> (SymbolicHeap, Registry) {
    let (e, r) = ent(prelude, &format!("{text} |- emp"));
    (e.lhs, r)
}

/// A random left-hand side over `ll` and `lls`, drawn from `seed`.
pub fn random_lhs(seed: u64) -> (Entailment, Registry) {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let ptrs = ["x", "y", "z", "null"];
    let ints = ["a", "b", "0", "2"];
    let p = |rng: &mut rand::rngs::StdRng| ptrs[rng.gen_range(0..ptrs.len())];
    let root = |rng: &mut rand::rngs::StdRng| ptrs[rng.gen_range(0..ptrs.len() - 1)];
    let pair = |rng: &mut rand::rngs::StdRng, dom: &[&'static str]| {
        let a = rng.gen_range(0..dom.len());
        let b = (a + rng.gen_range(1..dom.len())) % dom.len();
        (dom[a], dom[b])
    };
    let i = |rng: &mut rand::rngs::StdRng| ints[rng.gen_range(0..ints.len())];
    let sorted = rng.gen_bool(0.5);
    let mut spatial = Vec::new();
    for _ in 0..rng.gen_range(0..=3) {
        let (r, f) = (root(&mut rng), p(&mut rng));
        spatial.push(match (sorted, rng.gen_range(0..3)) {
            (false, 0) => format!("{r}->c1({f})"),
            (false, _) => format!("ll({r},{f})"),
            (true, 0) => format!("{r}->c4({f},{})", i(&mut rng)),
            (true, _) => format!("lls({r},{f},{},{})", i(&mut rng), i(&mut rng)),
        });
    }
    let mut pure = Vec::new();
    for _ in 0..rng.gen_range(0..=3) {
        pure.push(match (sorted, rng.gen_range(0..4)) {
            (true, 0) => {
                let (a, b) = pair(&mut rng, &ints);
                format!("{a}<={b}")
            }
            (_, 0) | (_, 1) => {
                let (a, b) = pair(&mut rng, &ptrs);
                format!("{a}={b}")
            }
            _ => {
                let (a, b) = pair(&mut rng, &ptrs);
                format!("{a}!={b}")
            }
        });
    }
    if spatial.is_empty() {
        spatial.push("emp".to_string());
    }
    let mut text = spatial.join(" * ");
    if !pure.is_empty() {
        text = format!("{text} /\\ {}", pure.join(" /\\ "));
    }
    let prelude = if sorted { LLS } else { LL };
    ent(prelude, &format!("{text} |- emp"))
}

/// Checks that the branches of `normalize_tracked` together have exactly the
/// models of the input within `b`, once each branch is conjoined with the
/// equalities it eliminated. Returns the number of models compared.
pub fn check_normalization(e: &Entailment, reg: &Registry, b: &shlide::oracle::Bound) -> Result<usize, String> {
    use shlide::normalize::normalize_tracked;
    use shlide::oracle::models;
    use shlide::syntax::{Expr, PureAtom, VarSort};
    let sorts = reg.infer_sorts(e)?;
    let hint: std::collections::BTreeMap<String, VarSort> =
        e.lhs.free_vars().into_iter().map(|v| (v.clone(), sorts.get(&v).copied().unwrap_or(VarSort::Ptr))).collect();
    let branches: Vec<SymbolicHeap> = normalize_tracked(e, reg)
        .into_iter()
        .map(|br| {
            let mut h = br.ent.lhs.clone();
            for (v, val) in br.elim.iter() {
                h.pure.push(match hint.get(v) {
                    Some(VarSort::Int) => PureAtom::arith_eq(Expr::var(v), val.clone()),
                    _ => PureAtom::ptr_eq(Expr::var(v), val.clone()),
                });
            }
            h
        })
        .collect();
    let mut count = 0usize;
    let mut failure: Option<String> = None;
    models(&e.lhs, &hint, &[], reg, b, |m| {
        count += 1;
        covered(m, &e.lhs, &branches, reg, &mut failure)
    })
    .map_err(|x| x.to_string())?;
    for br in &branches {
        if failure.is_some() {
            break;
        }
        models(br, &hint, &[], reg, b, |m| {
            count += 1;
            covered(m, br, std::slice::from_ref(&e.lhs), reg, &mut failure)
        })
        .map_err(|x| x.to_string())?;
    }
    match failure {
        Some(f) => Err(format!("{e}: {f}")),
        None => Ok(count),
    }
}

/// Whether some target holds in `m`; records why not in `failure`.
fn covered(
    m: &shlide::oracle::HeapModel,
    source: &SymbolicHeap,
    targets: &[SymbolicHeap],
    reg: &Registry,
    failure: &mut Option<String>,
) -> bool {
    for t in targets {
        match shlide::oracle::eval_exact(m, t, reg) {
            Ok(true) => return true,
            Ok(false) => {}
            Err(err) => {
                *failure = Some(format!("{t}: {err}"));
                return false;
            }
        }
    }
    *failure = Some(format!("model of {source} lost:\n{m}"));
    false
}
