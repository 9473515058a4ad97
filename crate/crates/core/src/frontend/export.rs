//! Proof rendering as an indented text listing or a Graphviz digraph.

use crate::engine::{NodeStatus, ProofTree};
use std::fmt::Write;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum ProofFormat {
    Text,
    Dot,
}

pub fn export_proof(t: &ProofTree, format: ProofFormat) -> String {
    match format {
        ProofFormat::Text => to_text(t),
        ProofFormat::Dot => to_dot(t),
    }
}

fn annotation(t: &ProofTree, id: usize) -> String {
    match &t.nodes[id].status {
        NodeStatus::Open => "open".to_string(),
        NodeStatus::Inner => {
            let labels: Vec<String> = t.edges.iter().filter(|e| e.parent == id).map(|e| e.label()).collect();
            format!("by {}", labels.first().cloned().unwrap_or_default())
        }
        NodeStatus::ClosedValid(r) => format!("by {r}"),
        NodeStatus::ClosedInvalid(c) => format!("INVALID ({c})"),
        NodeStatus::Bud { companion, sigma } => format!("~~> companion#{companion} via {sigma}"),
    }
}

fn to_text(t: &ProofTree) -> String {
    let mut out = String::new();
    let mut stack = vec![(t.root, 0usize)];
    while let Some((id, depth)) = stack.pop() {
        let _ = writeln!(out, "{}#{} {}  {}", "  ".repeat(depth), id, t.nodes[id].ent, annotation(t, id));
        for c in t.children(id).into_iter().rev() {
            stack.push((c, depth + 1));
        }
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn to_dot(t: &ProofTree) -> String {
    let mut out = String::from("digraph proof {\n  node [shape=box, fontname=\"monospace\"];\n");
    for n in &t.nodes {
        let extra = match &n.status {
            NodeStatus::ClosedValid(r) => format!("\\n[{r}]"),
            NodeStatus::ClosedInvalid(c) => format!("\\n[INVALID {}]", c.tag()),
            _ => String::new(),
        };
        let _ = writeln!(out, "  n{} [label=\"#{}: {}{}\"];", n.id, n.id, escape(&n.ent.to_string()), extra);
    }
    for e in &t.edges {
        let _ = writeln!(out, "  n{} -> n{} [label=\"{}\"];", e.parent, e.child, escape(&e.label()));
    }
    for b in &t.backlinks {
        let _ = writeln!(
            out,
            "  n{} -> n{} [style=dashed, label=\"{}\"];",
            b.bud,
            b.companion,
            escape(&b.sigma.to_string())
        );
    }
    out.push_str("}\n");
    out
}
