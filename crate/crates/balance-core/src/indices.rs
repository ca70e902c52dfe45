//! Cluster summaries and the eight balance/unbalance indices.
//!
//! Method 1 ("diff") indices are the difference between the maximal and
//! minimal cluster value of a parameter; Method 2 ("ref") indices are the
//! maximal absolute deviation of a cluster value from a specified reference
//! cluster parameter. The four parameters are cluster cardinality, total
//! member weight, total intra-cluster edge weight, and the multiset
//! structure estimate (whose index is a Hasse step count).
//!
//! The structure diff index is the proximity diameter: the maximum pairwise
//! proximity among the solution's cluster estimates. It equals the proximity
//! of the lattice maximum and minimum whenever those exist.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{ClusteringSolution, Instance};
use crate::lattice::{proximity, structure_estimates, MultisetEstimate};

/// Aggregate parameters of one cluster.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterSummary {
    pub size: usize,
    pub total_weight: f64,
    pub intra_edge_weight: f64,
    pub estimate: MultisetEstimate,
}

/// Reference cluster parameters for the Method-2 indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceParams {
    pub size: f64,
    pub weight: f64,
    pub edge_weight: f64,
    pub estimate: MultisetEstimate,
}

impl ReferenceParams {
    pub fn from_json(text: &str) -> Result<Self, ReferenceError> {
        let r: ReferenceParams =
            serde_json::from_str(text).map_err(|e| ReferenceError::Json(e.to_string()))?;
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<(), ReferenceError> {
        for (name, v) in [
            ("size", self.size),
            ("weight", self.weight),
            ("edge_weight", self.edge_weight),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(ReferenceError::InvalidValue {
                    field: name,
                    value: v,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReferenceError {
    #[error("malformed reference document: {0}")]
    Json(String),
    #[error("reference {field} must be finite and non-negative, got {value}")]
    InvalidValue { field: &'static str, value: f64 },
    #[error("reference estimate total {got} does not match the solution's maximal cluster size {expected}")]
    EstimateTotalMismatch { expected: u32, got: u32 },
}

/// Method-1 indices: max minus min of a cluster parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffIndices {
    pub card: u64,
    pub weight: f64,
    pub edge: f64,
    #[serde(rename = "struct")]
    pub structure: u64,
}

/// Method-2 indices: max absolute deviation from the reference parameter.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefIndices {
    pub card: f64,
    pub weight: f64,
    pub edge: f64,
    #[serde(rename = "struct")]
    pub structure: u64,
}

/// The balance indices of one solution; the Method-2 half is present only
/// when reference parameters were supplied.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndexReport {
    pub diff: DiffIndices,
    #[serde(rename = "ref", skip_serializing_if = "Option::is_none")]
    pub by_ref: Option<RefIndices>,
}

/// Summaries of every cluster, sharing the solution's estimate scale.
pub fn summarize_clusters(inst: &Instance, sol: &ClusteringSolution) -> Vec<ClusterSummary> {
    let estimates = structure_estimates(inst, sol);
    let assign = sol.assignment();
    let lambda = sol.lambda();
    let mut weights = vec![0.0f64; lambda];
    for e in inst.elements() {
        weights[assign[e.id.0]] += e.weight;
    }
    let mut intra = vec![0.0f64; lambda];
    for (a, b, w) in inst.graph().edges() {
        if assign[a.0] == assign[b.0] {
            intra[assign[a.0]] += w;
        }
    }
    estimates
        .into_iter()
        .enumerate()
        .map(|(i, estimate)| ClusterSummary {
            size: sol.cluster(i).len(),
            total_weight: weights[i],
            intra_edge_weight: intra[i],
            estimate,
        })
        .collect()
}

/// Summary of a single cluster (0-based index).
pub fn summarize_cluster(
    inst: &Instance,
    sol: &ClusteringSolution,
    cluster_index: usize,
) -> ClusterSummary {
    summarize_clusters(inst, sol)
        .into_iter()
        .nth(cluster_index)
        .expect("cluster index in range")
}

fn max_pairwise_proximity(estimates: &[MultisetEstimate]) -> u64 {
    let mut best = 0u64;
    for i in 0..estimates.len() {
        for j in (i + 1)..estimates.len() {
            let d = proximity(&estimates[i], &estimates[j])
                .expect("estimates of one solution share a scale");
            best = best.max(u64::from(d));
        }
    }
    best
}

fn diff_from_summaries(summaries: &[ClusterSummary]) -> DiffIndices {
    let sizes = summaries.iter().map(|s| s.size);
    let card = (sizes.clone().max().unwrap_or(0) - sizes.min().unwrap_or(0)) as u64;
    let weight = fold_diff(summaries.iter().map(|s| s.total_weight));
    let edge = fold_diff(summaries.iter().map(|s| s.intra_edge_weight));
    let estimates: Vec<MultisetEstimate> =
        summaries.iter().map(|s| s.estimate.clone()).collect();
    DiffIndices {
        card,
        weight,
        edge,
        structure: max_pairwise_proximity(&estimates),
    }
}

fn fold_diff(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    let min = values.fold(f64::INFINITY, f64::min);
    if max.is_finite() && min.is_finite() {
        max - min
    } else {
        0.0
    }
}

/// Method-1 indices of a solution.
pub fn method1_indices(inst: &Instance, sol: &ClusteringSolution) -> DiffIndices {
    diff_from_summaries(&summarize_clusters(inst, sol))
}

/// Method-2 indices of a solution against reference parameters. The
/// reference estimate must live on the solution's scale.
pub fn method2_indices(
    inst: &Instance,
    sol: &ClusteringSolution,
    reference: &ReferenceParams,
) -> Result<RefIndices, ReferenceError> {
    reference.validate()?;
    let summaries = summarize_clusters(inst, sol);
    ref_from_summaries(&summaries, sol.max_cluster_size() as u32, reference)
}

fn ref_from_summaries(
    summaries: &[ClusterSummary],
    max_size: u32,
    reference: &ReferenceParams,
) -> Result<RefIndices, ReferenceError> {
    if reference.estimate.total() != max_size {
        return Err(ReferenceError::EstimateTotalMismatch {
            expected: max_size,
            got: reference.estimate.total(),
        });
    }
    let card = summaries
        .iter()
        .map(|s| (s.size as f64 - reference.size).abs())
        .fold(0.0, f64::max);
    let weight = summaries
        .iter()
        .map(|s| (s.total_weight - reference.weight).abs())
        .fold(0.0, f64::max);
    let edge = summaries
        .iter()
        .map(|s| (s.intra_edge_weight - reference.edge_weight).abs())
        .fold(0.0, f64::max);
    let structure = summaries
        .iter()
        .map(|s| {
            proximity(&s.estimate, &reference.estimate)
                .map(u64::from)
                .expect("totals checked above")
        })
        .max()
        .unwrap_or(0);
    Ok(RefIndices {
        card,
        weight,
        edge,
        structure,
    })
}

/// Both index halves at once; the Method-2 half only when a reference is
/// supplied.
pub fn index_report(
    inst: &Instance,
    sol: &ClusteringSolution,
    reference: Option<&ReferenceParams>,
) -> Result<IndexReport, ReferenceError> {
    let summaries = summarize_clusters(inst, sol);
    let diff = diff_from_summaries(&summaries);
    let by_ref = match reference {
        Some(r) => {
            r.validate()?;
            Some(ref_from_summaries(
                &summaries,
                sol.max_cluster_size() as u32,
                r,
            )?)
        }
        None => None,
    };
    Ok(IndexReport { diff, by_ref })
}

/// Pairwise proximity matrix of the solution's cluster estimates.
pub fn proximity_matrix(inst: &Instance, sol: &ClusteringSolution) -> Vec<Vec<u32>> {
    let estimates = structure_estimates(inst, sol);
    let lambda = estimates.len();
    let mut matrix = vec![vec![0u32; lambda]; lambda];
    for i in 0..lambda {
        for j in (i + 1)..lambda {
            let d = proximity(&estimates[i], &estimates[j])
                .expect("estimates of one solution share a scale");
            matrix[i][j] = d;
            matrix[j][i] = d;
        }
    }
    matrix
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{parse_instance, validate_solution};

    /// Five elements in two clusters, with one cross edge and one inner edge.
    fn tiny() -> Instance {
        parse_instance(
            r#"{
                "type_count": 2,
                "elements": [
                    {"id": 1, "weight": 1.0, "type": 1},
                    {"id": 2, "weight": 2.0, "type": 2},
                    {"id": 3, "weight": 3.0, "type": 2},
                    {"id": 4, "weight": 4.0, "type": 1},
                    {"id": 5, "weight": 5.0, "type": 2}
                ],
                "edges": [[1, 2, 1.5], [2, 3, 2.5], [3, 4, 4.0]]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn summaries_and_diff_indices() {
        let inst = tiny();
        let sol = validate_solution(&inst, &[vec![1, 2, 3], vec![4, 5]]).unwrap();
        let summaries = summarize_clusters(&inst, &sol);
        assert_eq!(summaries[0].size, 3);
        assert_eq!(summaries[0].total_weight, 6.0);
        assert_eq!(summaries[0].intra_edge_weight, 4.0);
        assert_eq!(summaries[0].estimate.counts(), &[1, 2, 0]);
        assert_eq!(summaries[1].size, 2);
        assert_eq!(summaries[1].total_weight, 9.0);
        assert_eq!(summaries[1].intra_edge_weight, 0.0);
        assert_eq!(summaries[1].estimate.counts(), &[1, 1, 1]);

        let diff = method1_indices(&inst, &sol);
        assert_eq!(diff.card, 1);
        assert!((diff.weight - 3.0).abs() < 1e-9);
        assert!((diff.edge - 4.0).abs() < 1e-9);
        assert_eq!(diff.structure, 1);
    }

    #[test]
    fn single_cluster_indices_are_zero() {
        let inst = tiny();
        let sol = validate_solution(&inst, &[vec![1, 2, 3, 4, 5]]).unwrap();
        let diff = method1_indices(&inst, &sol);
        assert_eq!(diff.card, 0);
        assert_eq!(diff.weight, 0.0);
        assert_eq!(diff.edge, 0.0);
        assert_eq!(diff.structure, 0);
    }

    #[test]
    fn reference_indices_zero_on_uniform_match() {
        let inst = parse_instance(
            r#"{
                "type_count": 1,
                "elements": [
                    {"id": 1, "weight": 1.0, "type": 1},
                    {"id": 2, "weight": 1.0, "type": 1},
                    {"id": 3, "weight": 1.0, "type": 1},
                    {"id": 4, "weight": 1.0, "type": 1}
                ]
            }"#,
        )
        .unwrap();
        let sol = validate_solution(&inst, &[vec![1, 2], vec![3, 4]]).unwrap();
        let reference = ReferenceParams {
            size: 2.0,
            weight: 2.0,
            edge_weight: 0.0,
            estimate: MultisetEstimate::new(vec![2, 0]),
        };
        let r = method2_indices(&inst, &sol, &reference).unwrap();
        assert_eq!(r.card, 0.0);
        assert_eq!(r.weight, 0.0);
        assert_eq!(r.edge, 0.0);
        assert_eq!(r.structure, 0);
    }

    #[test]
    fn reference_estimate_total_mismatch_is_rejected() {
        let inst = tiny();
        let sol = validate_solution(&inst, &[vec![1, 2, 3], vec![4, 5]]).unwrap();
        let reference = ReferenceParams {
            size: 2.0,
            weight: 2.0,
            edge_weight: 0.0,
            estimate: MultisetEstimate::new(vec![2, 0, 0]),
        };
        assert_eq!(
            method2_indices(&inst, &sol, &reference).unwrap_err(),
            ReferenceError::EstimateTotalMismatch {
                expected: 3,
                got: 2
            }
        );
    }

    #[test]
    fn weight_scaling_scales_weight_index_only() {
        let inst = tiny();
        let tripled = parse_instance(
            r#"{
                "type_count": 2,
                "elements": [
                    {"id": 1, "weight": 3.0, "type": 1},
                    {"id": 2, "weight": 6.0, "type": 2},
                    {"id": 3, "weight": 9.0, "type": 2},
                    {"id": 4, "weight": 12.0, "type": 1},
                    {"id": 5, "weight": 15.0, "type": 2}
                ],
                "edges": [[1, 2, 1.5], [2, 3, 2.5], [3, 4, 4.0]]
            }"#,
        )
        .unwrap();
        let sol = validate_solution(&inst, &[vec![1, 2, 3], vec![4, 5]]).unwrap();
        let base = method1_indices(&inst, &sol);
        let scaled = method1_indices(&tripled, &sol);
        assert!((scaled.weight - 3.0 * base.weight).abs() < 1e-9);
        assert_eq!(scaled.card, base.card);
        assert_eq!(scaled.edge, base.edge);
        assert_eq!(scaled.structure, base.structure);
    }

    #[test]
    fn proximity_matrix_is_symmetric_with_zero_diagonal() {
        let inst = tiny();
        let sol = validate_solution(&inst, &[vec![1, 4], vec![2, 3], vec![5]]).unwrap();
        let m = proximity_matrix(&inst, &sol);
        for i in 0..3 {
            assert_eq!(m[i][i], 0);
            for j in 0..3 {
                assert_eq!(m[i][j], m[j][i]);
            }
        }
    }
}
