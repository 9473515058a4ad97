//! Counter-models for invalid verdicts, checked against the root entailment.

use super::ProofTree;
use crate::defs::{Fresh, Registry};
use crate::oracle::{bad_model, base_of, eval_exact, oracle_entails, Bound, HeapModel, OracleVerdict, Value};
use crate::syntax::{Entailment, Expr, VarSort};
use num_bigint::BigInt;
use std::collections::BTreeMap;

/// The bad model of the stuck leaf's base, framed and mapped back to the root
/// variables. Falls back to bounded enumeration when that model does not
/// refute the root.
pub fn counter_model(t: &ProofTree, leaf: usize, root: &Entailment, reg: &Registry) -> Option<HeapModel> {
    from_bad_model(t, leaf, root, reg).or_else(|| match oracle_entails(root, reg, &Bound::default()) {
        Ok(OracleVerdict::Invalid(m)) => Some(m),
        _ => None,
    })
}

fn from_bad_model(t: &ProofTree, leaf: usize, root: &Entailment, reg: &Registry) -> Option<HeapModel> {
    let node = &t.nodes[leaf];
    let e = &node.ent;
    let mut spatial = e.frame.clone();
    spatial.extend(e.lhs.spatial.iter().cloned());
    let mut fresh = Fresh::starting(1_000_000);
    let mut base = base_of(&spatial, reg, &mut fresh).ok()?;
    base.pure.extend(&e.lhs.pure);
    let m = bad_model(&base, reg).ok()?;
    let sorts = reg.infer_sorts(root).ok()?;
    let mut next = m
        .heap
        .keys()
        .chain(m.stack.values().filter_map(|v| match v {
            Value::Loc(l) => Some(l),
            _ => None,
        }))
        .max()
        .copied()
        .unwrap_or(0)
        + 1;
    let mut stack = BTreeMap::new();
    for v in root.free_vars() {
        let img = node.elim.get(&v).cloned().unwrap_or_else(|| Expr::var(&v));
        let val = match &img {
            Expr::Null => Some(Value::Null),
            Expr::Int(k) => Some(Value::Int(k.clone())),
            Expr::Var(w) => m.stack.get(w).cloned(),
        };
        let val = val.unwrap_or_else(|| match sorts.get(&v) {
            Some(VarSort::Int) => Value::Int(BigInt::from(0)),
            _ => {
                next += 1;
                Value::Loc(next - 1)
            }
        });
        stack.insert(v, val);
    }
    let cm = HeapModel { stack, heap: m.heap };
    let holds = eval_exact(&cm, &root.lhs, reg).ok()?;
    let refuted = !eval_exact(&cm, &root.rhs, reg).ok()?;
    (holds && refuted).then_some(cm)
}
