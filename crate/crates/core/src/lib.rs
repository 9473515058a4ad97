//! Entailment checking for symbolic heaps with compositional inductive
//! predicates, by cyclic proof search with exclude-the-middle case splits.

pub mod defs;
pub mod engine;
pub mod frontend;
pub mod normalize;
pub mod oracle;
pub mod pure;
pub mod rule;
pub mod syntax;
