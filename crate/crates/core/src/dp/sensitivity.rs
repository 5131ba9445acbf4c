//! Hierarchy-aware sensitivities of a node set.
//!
//! The radius term measures how far the Poincaré norm of the released node can
//! move when one node of the set is swapped for another; the angle term does
//! the same for the cosine between two nodes of the set, mapped through the
//! scalar Poincaré norm after clipping away from ±1.

use crate::embed::EmbeddingTable;
use crate::error::{Error, Result};
use crate::hyp;

use super::SensitivityPair;

/// Default clip `τ`: `|cos|` is capped at `1 − τ` before the norm is applied.
pub const DEFAULT_CLIP_TAU: f64 = 1e-3;

fn dedup(nodes: &[usize]) -> Vec<usize> {
    let mut v = nodes.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// `max_u Norm(e_u) − min_u Norm(e_u)` over `nodes`.
pub fn inter_hierarchy_sensitivity(table: &EmbeddingTable, nodes: &[usize]) -> Result<f64> {
    if nodes.is_empty() {
        return Err(Error::Empty("node set"));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &u in nodes {
        let r = hyp::poincare_norm(table.point(u)?);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(hi - lo)
}

/// Largest clipped angle norm over unordered pairs of distinct nodes.
pub fn intra_hierarchy_sensitivity(table: &EmbeddingTable, nodes: &[usize], clip_tau: f64) -> Result<f64> {
    if !(clip_tau > 0.0 && clip_tau < 1.0) {
        return Err(Error::param(format!("clip tau {clip_tau} outside (0, 1)")));
    }
    let nodes = dedup(nodes);
    if nodes.len() < 2 {
        return Err(Error::Empty("node set with at least two nodes"));
    }
    let c = table.curvature().value();
    let cap = 1.0 - clip_tau;
    let points: Vec<&[f64]> = nodes
        .iter()
        .map(|&u| table.point(u).map(|p| p.coords()))
        .collect::<Result<_>>()?;
    let mut best = 0.0f64;
    'outer: for i in 0..points.len() {
        for j in i + 1..points.len() {
            let a = hyp::angle_raw(points[i], points[j])?.abs().min(cap);
            best = best.max(a);
            if best >= cap {
                break 'outer;
            }
        }
    }
    Ok(hyp::scalar_poincare_norm(best, c))
}

/// Both sensitivities of the same node set.
pub fn hierarchy_sensitivities(table: &EmbeddingTable, nodes: &[usize], clip_tau: f64) -> Result<SensitivityPair> {
    SensitivityPair::new(
        inter_hierarchy_sensitivity(table, nodes)?,
        intra_hierarchy_sensitivity(table, nodes, clip_tau)?,
    )
}
