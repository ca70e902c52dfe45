//! Multiset structure estimates of clusters and the poset-like scale they
//! live on.
//!
//! A cluster's structure estimate counts its members per ordinal type, padded
//! with an extra "empty" type so that every cluster of a solution shares the
//! same total (the solution's maximal cluster size). Estimates with `k`
//! components summing to `n` form the scale `P^{k,n}`, ordered by prefix-sum
//! dominance; one Hasse step moves a single unit between adjacent levels.
//! The proximity between two estimates is the minimal number of Hasse steps,
//! which equals the L1 distance of their prefix sums.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{ClusteringSolution, Instance};

/// Per-type member counts of a cluster, the last component being the count
/// of "empty" padding elements.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultisetEstimate {
    counts: Vec<u32>,
}

impl MultisetEstimate {
    pub fn new(counts: Vec<u32>) -> Self {
        MultisetEstimate { counts }
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Number of components (type count including the empty type).
    pub fn arity(&self) -> usize {
        self.counts.len()
    }

    /// Sum of all components; equal across the estimates of one solution.
    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    /// Raises the empty-type component so the total becomes `new_total`,
    /// moving the estimate onto a larger scale. `None` when `new_total` is
    /// below the current total.
    pub fn repadded(&self, new_total: u32) -> Option<Self> {
        let total = self.total();
        if new_total < total {
            return None;
        }
        let mut counts = self.counts.clone();
        *counts.last_mut().expect("estimate has at least one component") += new_total - total;
        Some(MultisetEstimate { counts })
    }
}

impl fmt::Display for MultisetEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, c) in self.counts.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Errors from comparing estimates that do not live on the same scale.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EstimateError {
    #[error("estimates have different component counts ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("estimates have different totals ({0} vs {1})")]
    TotalMismatch(u32, u32),
}

fn check_same_scale(a: &MultisetEstimate, b: &MultisetEstimate) -> Result<(), EstimateError> {
    if a.arity() != b.arity() {
        return Err(EstimateError::DimensionMismatch(a.arity(), b.arity()));
    }
    let (ta, tb) = (a.total(), b.total());
    if ta != tb {
        return Err(EstimateError::TotalMismatch(ta, tb));
    }
    Ok(())
}

/// Minimal number of Hasse steps between two estimates on the same scale:
/// the L1 distance of their prefix sums.
pub fn proximity(a: &MultisetEstimate, b: &MultisetEstimate) -> Result<u32, EstimateError> {
    check_same_scale(a, b)?;
    let mut steps = 0u32;
    let mut pa = 0i64;
    let mut pb = 0i64;
    for (&ca, &cb) in a.counts.iter().zip(&b.counts) {
        pa += i64::from(ca);
        pb += i64::from(cb);
        steps += pa.abs_diff(pb) as u32;
    }
    Ok(steps)
}

/// Outcome of comparing two estimates under prefix-sum dominance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    Greater,
    Less,
    Equal,
    Incomparable,
}

/// Compares two estimates on the same scale: `a` dominates `b` iff every
/// prefix sum of `a` is at least the corresponding prefix sum of `b`.
pub fn dominance_compare(
    a: &MultisetEstimate,
    b: &MultisetEstimate,
) -> Result<Dominance, EstimateError> {
    check_same_scale(a, b)?;
    let mut ge = true;
    let mut le = true;
    let mut pa = 0u64;
    let mut pb = 0u64;
    for (&ca, &cb) in a.counts.iter().zip(&b.counts) {
        pa += u64::from(ca);
        pb += u64::from(cb);
        if pa < pb {
            ge = false;
        }
        if pa > pb {
            le = false;
        }
    }
    Ok(match (ge, le) {
        (true, true) => Dominance::Equal,
        (true, false) => Dominance::Greater,
        (false, true) => Dominance::Less,
        (false, false) => Dominance::Incomparable,
    })
}

/// Structure estimate of one cluster of a solution: per-type member counts
/// padded with the empty type up to the solution's maximal cluster size.
pub fn structure_estimate(
    inst: &Instance,
    sol: &ClusteringSolution,
    cluster_index: usize,
) -> MultisetEstimate {
    let max_size = sol.max_cluster_size() as u32;
    estimate_for(inst, sol.cluster(cluster_index), max_size)
}

/// Structure estimates of every cluster, sharing the solution's scale.
pub fn structure_estimates(inst: &Instance, sol: &ClusteringSolution) -> Vec<MultisetEstimate> {
    let max_size = sol.max_cluster_size() as u32;
    (0..sol.lambda())
        .map(|i| estimate_for(inst, sol.cluster(i), max_size))
        .collect()
}

fn estimate_for(
    inst: &Instance,
    members: &[crate::instance::ElementId],
    max_size: u32,
) -> MultisetEstimate {
    let mut counts = vec![0u32; inst.type_count() + 1];
    for &id in members {
        counts[inst.type_of(id) - 1] += 1;
    }
    counts[inst.type_count()] = max_size - members.len() as u32;
    MultisetEstimate { counts }
}

/// One node of an enumerated scale: the estimate and the indices of its
/// Hasse neighbors (one unit moved between adjacent levels).
#[derive(Debug, Clone, PartialEq)]
pub struct ScaleNode {
    pub estimate: MultisetEstimate,
    pub neighbors: Vec<usize>,
}

/// Enumerates the whole scale `P^{arity,total}`: all estimates with `arity`
/// components summing to `total`, in lexicographically descending order
/// (the maximum point `(total,0,...,0)` first), each with its Hasse
/// neighbors.
pub fn enumerate_scale(arity: usize, total: u32) -> Vec<ScaleNode> {
    assert!(arity >= 1, "scale needs at least one component");
    let mut estimates: Vec<Vec<u32>> = Vec::new();
    let mut current = vec![0u32; arity];
    fill_descending(&mut estimates, &mut current, 0, total);

    let index: HashMap<Vec<u32>, usize> = estimates
        .iter()
        .enumerate()
        .map(|(i, e)| (e.clone(), i))
        .collect();
    let mut nodes = Vec::with_capacity(estimates.len());
    for counts in &estimates {
        let mut neighbors = Vec::new();
        let mut scratch = counts.clone();
        for level in 0..arity.saturating_sub(1) {
            // one unit down: level -> level+1
            if scratch[level] > 0 {
                scratch[level] -= 1;
                scratch[level + 1] += 1;
                neighbors.push(index[&scratch]);
                scratch[level] += 1;
                scratch[level + 1] -= 1;
            }
            // one unit up: level+1 -> level
            if scratch[level + 1] > 0 {
                scratch[level + 1] -= 1;
                scratch[level] += 1;
                neighbors.push(index[&scratch]);
                scratch[level] -= 1;
                scratch[level + 1] += 1;
            }
        }
        neighbors.sort_unstable();
        nodes.push(ScaleNode {
            estimate: MultisetEstimate {
                counts: counts.clone(),
            },
            neighbors,
        });
    }
    nodes
}

fn fill_descending(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, pos: usize, remaining: u32) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        return;
    }
    for value in (0..=remaining).rev() {
        current[pos] = value;
        fill_descending(out, current, pos + 1, remaining - value);
    }
}

/// Renders an enumerated scale as an undirected DOT graph.
pub fn scale_dot(nodes: &[ScaleNode]) -> String {
    let mut out = String::from("graph scale {\n  rankdir=TB;\n  node [shape=oval];\n");
    for (i, node) in nodes.iter().enumerate() {
        out.push_str(&format!("  n{i} [label=\"{}\"];\n", node.estimate));
    }
    for (i, node) in nodes.iter().enumerate() {
        for &j in &node.neighbors {
            if i < j {
                out.push_str(&format!("  n{i} -- n{j};\n"));
            }
        }
    }
    out.push_str("}\n");
    out
}
