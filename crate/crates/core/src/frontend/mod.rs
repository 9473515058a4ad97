//! Input formats, proof export and the command-line driver.

pub mod cli;
pub mod export;
pub mod native;
pub mod slcomp;

use crate::defs::{DefError, Registry};
use crate::syntax::Entailment;
use std::path::Path;
use thiserror::Error;

pub use export::{export_proof, ProofFormat};
pub use native::parse_native;
pub use slcomp::parse_slcomp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum InputFormat {
    Native,
    Slcomp,
}

impl InputFormat {
    /// `.smt2` files are SMT-LIB; everything else is native.
    pub fn from_path(p: &Path) -> InputFormat {
        match p.extension().and_then(|e| e.to_str()) {
            Some("smt2") | Some("smt") => InputFormat::Slcomp,
            _ => InputFormat::Native,
        }
    }
}

pub fn parse(text: &str, format: InputFormat) -> Result<ProblemFile, FrontendError> {
    match format {
        InputFormat::Native => parse_native(text),
        InputFormat::Slcomp => parse_slcomp(text),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expected {
    Valid,
    Invalid,
}

/// Sorts, definitions and one entailment query.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemFile {
    pub registry: Registry,
    pub query: Entailment,
    pub expect: Option<Expected>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrontendError {
    #[error("{line}:{col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("{0}")]
    Definition(#[from] DefError),
    #[error("{0}")]
    Sort(String),
    #[error("unsupported construct: {0}")]
    UnsupportedConstruct(String),
    #[error("missing role annotation for `{0}`")]
    RoleAnnotationMissing(String),
    #[error("{0}")]
    Query(String),
}
