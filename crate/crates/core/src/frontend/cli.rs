//! Command-line driver.
//!
//! Exit codes: 0 verdict produced (and matching `--expect` when given),
//! 1 verdict mismatch, 2 parse or well-formedness error, 3 resource limit,
//! 4 oracle disagreement. In batch mode the most severe outcome wins, in the
//! order 4, 1, 2, 3, 0.

use super::export::{export_proof, ProofFormat};
use super::{parse, Expected, FrontendError, InputFormat, ProblemFile};
use crate::engine::{prove, Options, ProveError, Verdict};
use crate::oracle::{oracle_entails, Bound, OracleVerdict};
use clap::{Parser, ValueEnum};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_MISMATCH: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_ORACLE: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ExpectArg {
    Valid,
    Invalid,
    /// Use each file's own `expect` or `:status` annotation.
    Annotated,
}

#[derive(Debug, Parser)]
#[command(name = "shlide", version, about = "Cyclic-proof entailment checker for symbolic heaps")]
pub struct Args {
    /// Problem file, or a directory to check every file in.
    #[arg(long)]
    pub input: PathBuf,
    /// Input format; by default `.smt2` is SMT-LIB and anything else native.
    #[arg(long, value_enum)]
    pub format: Option<InputFormat>,
    /// Where to write the proof tree (a directory in batch mode).
    #[arg(long)]
    pub proof_out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub proof_format: ProofFormat,
    /// Cross-check the verdict with the bounded model oracle.
    #[arg(long)]
    pub oracle_check: bool,
    /// Oracle unfolding depth.
    #[arg(long, default_value_t = 4)]
    pub oracle_depth: u32,
    /// Oracle location count.
    #[arg(long, default_value_t = 6)]
    pub oracle_locs: u32,
    #[arg(long, default_value_t = 100_000)]
    pub node_budget: usize,
    #[arg(long, value_enum)]
    pub expect: Option<ExpectArg>,
    /// Print only the verdict line.
    #[arg(long)]
    pub quiet: bool,
}

/// Higher is more severe.
fn severity(code: i32) -> u8 {
    match code {
        EXIT_ORACLE => 4,
        EXIT_MISMATCH => 3,
        EXIT_INPUT => 2,
        EXIT_RESOURCE => 1,
        _ => 0,
    }
}

pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(args) {
        Ok(a) => a,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return EXIT_INPUT;
            }
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    if args.input.is_dir() {
        run_batch(&args, out, err)
    } else {
        let proof_out = args.proof_out.clone();
        run_file(&args, &args.input, proof_out.as_deref(), false, out, err)
    }
}

fn run_batch(args: &Args, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let mut files: Vec<PathBuf> = match std::fs::read_dir(&args.input) {
        Ok(rd) => rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_file()).collect(),
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", args.input.display());
            return EXIT_INPUT;
        }
    };
    files.sort();
    if let Some(dir) = &args.proof_out {
        if let Err(e) = std::fs::create_dir_all(dir) {
            let _ = writeln!(err, "{}: {e}", dir.display());
            return EXIT_INPUT;
        }
    }
    let ext = match args.proof_format {
        ProofFormat::Text => "txt",
        ProofFormat::Dot => "dot",
    };
    let (mut worst, mut mismatches, mut checked, mut skipped) = (EXIT_OK, 0usize, 0usize, 0usize);
    for f in &files {
        let proof = args.proof_out.as_ref().map(|d| {
            let stem = f.file_stem().map(|s| s.to_string_lossy().to_string()).unwrap_or_default();
            d.join(format!("{stem}.{ext}"))
        });
        let code = run_file(args, f, proof.as_deref(), true, out, err);
        match code {
            -1 => skipped += 1,
            c => {
                checked += 1;
                if c == EXIT_MISMATCH {
                    mismatches += 1;
                }
                if severity(c) > severity(worst) {
                    worst = c;
                }
            }
        }
    }
    let _ = writeln!(out, "files: {checked} checked, {skipped} unsupported, {mismatches} mismatches");
    worst
}

fn expected_for(args: &Args, p: &ProblemFile) -> Option<Expected> {
    match args.expect? {
        ExpectArg::Valid => Some(Expected::Valid),
        ExpectArg::Invalid => Some(Expected::Invalid),
        ExpectArg::Annotated => p.expect,
    }
}

/// Checks one file. In batch mode each output line is prefixed by the path,
/// and files outside the supported subset return -1.
fn run_file(
    args: &Args,
    path: &Path,
    proof_out: Option<&Path>,
    batch: bool,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let tag = if batch { format!(" {}", path.display()) } else { String::new() };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", path.display());
            return EXIT_INPUT;
        }
    };
    let format = args.format.unwrap_or_else(|| InputFormat::from_path(path));
    let problem = match parse(&text, format) {
        Ok(p) => p,
        Err(e @ FrontendError::UnsupportedConstruct(_)) if batch => {
            let _ = writeln!(out, "UNSUPPORTED{tag}: {e}");
            return -1;
        }
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", path.display());
            if batch {
                let _ = writeln!(out, "ERROR{tag}");
            }
            return EXIT_INPUT;
        }
    };
    let verdict = match prove(&problem.query, &problem.registry, &Options { node_budget: args.node_budget }) {
        Ok(v) => v,
        Err(e @ ProveError::ResourceLimit(_)) => {
            let _ = writeln!(err, "{}: {e}", path.display());
            let _ = writeln!(out, "UNKNOWN{tag}");
            return EXIT_RESOURCE;
        }
        Err(e) => {
            let _ = writeln!(err, "{}: {e}", path.display());
            if batch {
                let _ = writeln!(out, "ERROR{tag}");
            }
            return EXIT_INPUT;
        }
    };
    let _ = writeln!(out, "{verdict}{tag}");
    let mut code = EXIT_OK;
    if args.oracle_check {
        let bound = Bound { max_unfold: args.oracle_depth, locs: args.oracle_locs, ..Bound::default() };
        let agrees = match oracle_entails(&problem.query, &problem.registry, &bound) {
            Ok(OracleVerdict::BoundedValid) => verdict.is_valid(),
            Ok(OracleVerdict::Invalid(_)) => !verdict.is_valid(),
            Err(e) => {
                let _ = writeln!(err, "{}: oracle: {e}", path.display());
                false
            }
        };
        if agrees {
            let _ = writeln!(out, "ORACLE-AGREES{tag}");
        } else {
            let _ = writeln!(out, "ORACLE-DISAGREES{tag}");
            code = EXIT_ORACLE;
        }
    }
    if !args.quiet && !batch {
        match &verdict {
            Verdict::Valid(t) => {
                let _ = writeln!(out, "proof: {} nodes, {} back-links", t.nodes.len(), t.backlinks.len());
            }
            Verdict::Invalid { node, case, witness, .. } => {
                let _ = writeln!(out, "stuck at node #{node}: {case}");
                match witness {
                    Some(m) => {
                        let _ = write!(out, "{m}");
                    }
                    None => {
                        let _ = writeln!(out, "no counter-model found within the oracle bound");
                    }
                }
            }
        }
    }
    if let Some(p) = proof_out {
        if let Err(e) = std::fs::write(p, export_proof(verdict.tree(), args.proof_format)) {
            let _ = writeln!(err, "{}: {e}", p.display());
            return EXIT_INPUT;
        }
    }
    if code == EXIT_OK {
        if let Some(exp) = expected_for(args, &problem) {
            if (exp == Expected::Valid) != verdict.is_valid() {
                let _ = writeln!(err, "{}: expected {exp:?}, got {verdict}", path.display());
                code = EXIT_MISMATCH;
            }
        }
    }
    code
}
