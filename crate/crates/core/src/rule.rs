//! Rule labels and single rule applications.

use crate::syntax::{Entailment, Subst};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Subst,
    ExM,
    EqL,
    LBase,
    NeqNull,
    NeqStar,
    Id,
    Emp,
    Inconsistency,
    EqR,
    Hypothesis,
    RBase,
    Star,
    Frame,
    RInd,
    LInd,
}

impl Rule {
    pub const ALL: [Rule; 16] = [
        Rule::Subst,
        Rule::ExM,
        Rule::EqL,
        Rule::LBase,
        Rule::NeqNull,
        Rule::NeqStar,
        Rule::Id,
        Rule::Emp,
        Rule::Inconsistency,
        Rule::EqR,
        Rule::Hypothesis,
        Rule::RBase,
        Rule::Star,
        Rule::Frame,
        Rule::RInd,
        Rule::LInd,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Rule::Subst => "Subst",
            Rule::ExM => "ExM",
            Rule::EqL => "=L",
            Rule::LBase => "LBase",
            Rule::NeqNull => "NeqNull",
            Rule::NeqStar => "NeqStar",
            Rule::Id => "Id",
            Rule::Emp => "Emp",
            Rule::Inconsistency => "Inconsistency",
            Rule::EqR => "=R",
            Rule::Hypothesis => "Hypothesis",
            Rule::RBase => "RBase",
            Rule::Star => "Star",
            Rule::Frame => "Frame",
            Rule::RInd => "RInd",
            Rule::LInd => "LInd",
        }
    }

    pub fn from_label(s: &str) -> Option<Rule> {
        Rule::ALL.iter().copied().find(|r| r.label() == s)
    }

    pub fn is_normalization(self) -> bool {
        matches!(self, Rule::Subst | Rule::ExM | Rule::EqL | Rule::LBase | Rule::NeqNull | Rule::NeqStar)
    }

    pub fn is_axiom(self) -> bool {
        matches!(self, Rule::Id | Rule::Emp | Rule::Inconsistency)
    }

    /// Rules that unfold a left-hand predicate occurrence.
    pub fn unfolds_left(self) -> bool {
        matches!(self, Rule::LInd | Rule::Frame)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Correspondence of left-hand spatial atoms across one rule application:
/// `(parent index, child index, progressing)`.
pub type Trace = Vec<(usize, usize, bool)>;

pub fn identity_trace(n: usize) -> Trace {
    (0..n).map(|i| (i, i, false)).collect()
}

/// Identity except that parent atom `removed` disappears.
pub fn removal_trace(n: usize, removed: &[usize]) -> Trace {
    let mut out = Vec::new();
    let mut j = 0;
    for i in 0..n {
        if removed.contains(&i) {
            continue;
        }
        out.push((i, j, false));
        j += 1;
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Premise {
    pub ent: Entailment,
    pub trace: Trace,
    /// Variables eliminated by the step, with their replacements.
    pub bind: Subst,
}

/// One rule instance: the rule and its premises (empty for axioms).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Step {
    pub rule: Rule,
    pub premises: Vec<Premise>,
}

impl Step {
    pub fn axiom(rule: Rule) -> Step {
        Step { rule, premises: Vec::new() }
    }

    pub fn single(rule: Rule, ent: Entailment, trace: Trace) -> Step {
        Step { rule, premises: vec![Premise { ent, trace, bind: Subst::new() }] }
    }

    pub fn binding(rule: Rule, ent: Entailment, trace: Trace, bind: Subst) -> Step {
        Step { rule, premises: vec![Premise { ent, trace, bind }] }
    }
}
