//! Cyclic proof search: leaf selection, rule choice, back-links and verdicts.

pub mod backlink;
pub mod reduce;
pub mod soundness;
pub mod witness;

use crate::defs::{DefError, Fresh, Registry};
use crate::oracle::HeapModel;
use crate::rule::{Rule, Trace};
use crate::syntax::{Entailment, Subst};
use std::fmt;
use thiserror::Error;

pub use backlink::link_back;
pub use reduce::{apply_rule, classify, Decision, SideConditionFailed, StuckCase};
pub use soundness::{check_cyclic_soundness, SoundnessFailure};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeStatus {
    Open,
    /// Expanded by a rule; see the outgoing edges.
    Inner,
    ClosedValid(Rule),
    ClosedInvalid(StuckCase),
    Bud {
        companion: usize,
        sigma: Subst,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofNode {
    pub id: usize,
    pub ent: Entailment,
    pub status: NodeStatus,
    pub parent: Option<usize>,
    /// Root variables eliminated on the path from the root, with their images here.
    pub elim: Subst,
}

/// One rule edge. Merged steps keep every rule they apply.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub parent: usize,
    pub child: usize,
    pub rules: Vec<Rule>,
    /// Left-hand atom correspondence from parent to child.
    pub trace: Trace,
}

impl Edge {
    pub fn label(&self) -> String {
        self.rules.iter().map(|r| r.label()).collect::<Vec<_>>().join("+")
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Backlink {
    pub companion: usize,
    pub bud: usize,
    /// Bud variables to companion variables.
    pub sigma: Subst,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProofTree {
    pub nodes: Vec<ProofNode>,
    pub edges: Vec<Edge>,
    pub backlinks: Vec<Backlink>,
    pub root: usize,
}

impl ProofTree {
    /// A tree with a single open node.
    pub fn single(e: Entailment) -> ProofTree {
        ProofTree {
            nodes: vec![ProofNode { id: 0, ent: e, status: NodeStatus::Open, parent: None, elim: Subst::new() }],
            edges: Vec::new(),
            backlinks: Vec::new(),
            root: 0,
        }
    }

    pub fn node(&self, id: usize) -> &ProofNode {
        &self.nodes[id]
    }

    pub fn children(&self, id: usize) -> Vec<usize> {
        self.edges.iter().filter(|e| e.parent == id).map(|e| e.child).collect()
    }

    pub fn edge_into(&self, id: usize) -> Option<&Edge> {
        self.edges.iter().find(|e| e.child == id)
    }

    /// Strict ancestors, nearest first.
    pub fn ancestors(&self, id: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut cur = self.nodes[id].parent;
        while let Some(p) = cur {
            out.push(p);
            cur = self.nodes[p].parent;
        }
        out
    }

    /// Edges from `from` down to its descendant `to`, top first.
    pub fn path(&self, from: usize, to: usize) -> Option<Vec<&Edge>> {
        let mut out = Vec::new();
        let mut cur = to;
        while cur != from {
            let e = self.edge_into(cur)?;
            out.push(e);
            cur = e.parent;
        }
        out.reverse();
        Some(out)
    }

    /// Open leaves in leftmost-deepest order.
    pub fn open_leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            if self.nodes[n].status == NodeStatus::Open {
                out.push(n);
            }
            let mut ch = self.children(n);
            ch.reverse();
            stack.extend(ch);
        }
        out
    }

    /// Largest unfolding number on any left-hand side.
    pub fn max_unfold(&self) -> u32 {
        self.nodes.iter().flat_map(|n| n.ent.lhs.spatial.iter().filter_map(|a| a.unfold_number())).max().unwrap_or(0)
    }

    /// Adds an open child of `parent` reached by `rules`.
    pub fn add_child(&mut self, parent: usize, ent: Entailment, rules: Vec<Rule>, trace: Trace, elim: Subst) -> usize {
        let id = self.nodes.len();
        self.nodes.push(ProofNode { id, ent, status: NodeStatus::Open, parent: Some(parent), elim });
        self.edges.push(Edge { parent, child: id, rules, trace });
        id
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Valid(ProofTree),
    Invalid { tree: ProofTree, node: usize, case: StuckCase, witness: Option<HeapModel> },
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid(_))
    }

    pub fn tree(&self) -> &ProofTree {
        match self {
            Verdict::Valid(t) => t,
            Verdict::Invalid { tree, .. } => tree,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Valid(_) => write!(f, "VALID"),
            Verdict::Invalid { .. } => write!(f, "INVALID"),
        }
    }
}

/// Outcome of inspecting a partial tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Closure {
    Valid,
    Invalid(usize, StuckCase),
    Unknown(usize, Rule),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProveError {
    #[error("unsupported fragment: {0}")]
    UnsupportedFragment(#[from] DefError),
    #[error("right-hand side variables not bound on the left: {0}")]
    UnboundRhs(String),
    #[error("node budget of {0} exhausted")]
    ResourceLimit(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Options {
    pub node_budget: usize,
}

impl Default for Options {
    fn default() -> Options {
        Options { node_budget: 100_000 }
    }
}

/// Inspects the first open leaf, or reports the tree's final status.
pub fn is_closed(t: &ProofTree, reg: &Registry) -> Closure {
    if let Some(leaf) = t.open_leaves().first() {
        let mut fresh = Fresh::starting(1_000_000);
        return match classify(&t.nodes[*leaf].ent, reg, &mut fresh) {
            Decision::Axiom(r) => Closure::Unknown(*leaf, r),
            Decision::Apply(s) => Closure::Unknown(*leaf, s.rule),
            Decision::Stuck(c) => Closure::Invalid(*leaf, c),
        };
    }
    match t.nodes.iter().find_map(|n| match n.status {
        NodeStatus::ClosedInvalid(c) => Some((n.id, c)),
        _ => None,
    }) {
        Some((id, c)) => Closure::Invalid(id, c),
        None => Closure::Valid,
    }
}

fn merges(r: Rule) -> bool {
    matches!(r, Rule::NeqNull | Rule::NeqStar | Rule::RBase)
}

fn compose(a: &Trace, b: &Trace) -> Trace {
    let mut out = Vec::new();
    for &(i, j, p) in a {
        for &(j2, k, q) in b {
            if j == j2 {
                out.push((i, k, p || q));
            }
        }
    }
    out
}

/// Searches for a cyclic proof of `e`. The rule choice is deterministic and the
/// search stops at the first leaf that is stuck.
pub fn prove(e: &Entailment, reg: &Registry, opts: &Options) -> Result<Verdict, ProveError> {
    let mut reg = reg.clone();
    if !reg.is_validated() {
        reg.validate()?;
    }
    if !e.rhs_vars_covered() {
        let l = e.lhs.free_vars();
        let extra: Vec<String> = e.rhs.free_vars().into_iter().filter(|v| !l.contains(v)).collect();
        return Err(ProveError::UnboundRhs(extra.join(", ")));
    }
    let root = e.reset_unfold();
    let mut t = ProofTree::single(root.clone());
    let mut fresh = Fresh::new();
    let mut stack = vec![0usize];
    while let Some(id) = stack.pop() {
        if t.nodes.len() > opts.node_budget {
            return Err(ProveError::ResourceLimit(opts.node_budget));
        }
        if let Some((companion, sigma)) = link_back(&t, id, &reg) {
            t.backlinks.push(Backlink { companion, bud: id, sigma: sigma.clone() });
            t.nodes[id].status = NodeStatus::Bud { companion, sigma };
            continue;
        }
        let mut rules = Vec::new();
        let mut trace: Option<Trace> = None;
        let mut elim = t.nodes[id].elim.clone();
        let mut d = classify(&t.nodes[id].ent, &reg, &mut fresh);
        // Fold silent steps into the edge of the step that follows them.
        while let Decision::Apply(s) = &d {
            if !merges(s.rule) || s.premises.len() != 1 {
                break;
            }
            let p = &s.premises[0];
            let mut f2 = fresh.clone();
            let next = classify(&p.ent, &reg, &mut f2);
            if !matches!(&next, Decision::Apply(n) if !n.premises.is_empty()) {
                break;
            }
            rules.push(s.rule);
            trace = Some(match trace {
                None => p.trace.clone(),
                Some(t0) => compose(&t0, &p.trace),
            });
            elim = elim.then(&p.bind);
            fresh = f2;
            d = next;
        }
        match d {
            Decision::Axiom(r) if rules.is_empty() => t.nodes[id].status = NodeStatus::ClosedValid(r),
            Decision::Stuck(c) if rules.is_empty() => {
                t.nodes[id].status = NodeStatus::ClosedInvalid(c);
                let witness = witness::counter_model(&t, id, &root, &reg);
                return Ok(Verdict::Invalid { tree: t, node: id, case: c, witness });
            }
            Decision::Axiom(_) | Decision::Stuck(_) => unreachable!("merging only precedes rule steps"),
            Decision::Apply(s) => {
                t.nodes[id].status = NodeStatus::Inner;
                rules.push(s.rule);
                let mut kids = Vec::new();
                for p in s.premises {
                    let tr = match &trace {
                        None => p.trace.clone(),
                        Some(t0) => compose(t0, &p.trace),
                    };
                    let el = elim.then(&p.bind);
                    kids.push(t.add_child(id, p.ent, rules.clone(), tr, el));
                }
                for k in kids.into_iter().rev() {
                    stack.push(k);
                }
            }
        }
    }
    Ok(Verdict::Valid(t))
}
