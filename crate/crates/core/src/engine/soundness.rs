//! Global soundness of a pre-proof: every back-link must close a cycle along
//! which some left-hand predicate occurrence is unfolded.

use super::backlink::{instance, theta_of};
use super::{NodeStatus, ProofTree};
use crate::defs::Registry;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SoundnessFailure {
    #[error("node {0} is an open or invalid leaf")]
    NotPreProof(usize),
    #[error("back-link {bud} ~~> {companion}: companion is not a strict ancestor")]
    NotAncestor { bud: usize, companion: usize },
    #[error("back-link {bud} ~~> {companion}: the bud is not an instance of the companion under {sigma}")]
    SigmaMismatch { bud: usize, companion: usize, sigma: String },
    #[error("back-link {bud} ~~> {companion}: no progressing trace on the cycle")]
    NoProgress { bud: usize, companion: usize },
}

pub fn check_cyclic_soundness(t: &ProofTree, reg: &Registry) -> Result<(), SoundnessFailure> {
    for n in &t.nodes {
        match n.status {
            NodeStatus::Open | NodeStatus::ClosedInvalid(_) => return Err(SoundnessFailure::NotPreProof(n.id)),
            NodeStatus::Bud { .. } if !t.backlinks.iter().any(|b| b.bud == n.id) => {
                return Err(SoundnessFailure::NotPreProof(n.id));
            }
            _ => {}
        }
    }
    for b in &t.backlinks {
        let (bud, companion) = (b.bud, b.companion);
        if bud >= t.nodes.len() || companion >= t.nodes.len() || !t.ancestors(bud).contains(&companion) {
            return Err(SoundnessFailure::NotAncestor { bud, companion });
        }
        let comp = &t.nodes[companion].ent;
        let theta = theta_of(&b.sigma, comp);
        let Some(pairs) = instance(comp, &t.nodes[bud].ent, &theta, reg) else {
            return Err(SoundnessFailure::SigmaMismatch { bud, companion, sigma: b.sigma.to_string() });
        };
        let path = t.path(companion, bud).ok_or(SoundnessFailure::NotAncestor { bud, companion })?;
        let progressing = pairs.iter().any(|&(i, j)| {
            let mut pos = Some(i);
            let mut prog = false;
            for e in &path {
                pos = pos.and_then(|p| {
                    e.trace.iter().find(|(a, _, _)| *a == p).map(|&(_, c, q)| {
                        prog |= q;
                        c
                    })
                });
            }
            pos == Some(j) && prog
        });
        if !progressing {
            return Err(SoundnessFailure::NoProgress { bud, companion });
        }
    }
    Ok(())
}
