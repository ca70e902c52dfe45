//! Optimization of balance indices over clustering solutions.
//!
//! Problems are expressed as a [`ProblemSpec`]: one or more objective terms
//! (an index, an aggregation method, and a direction), scalar index bounds,
//! cluster-count and cluster-size bounds, optional reference parameters, and
//! an optional per-criterion skill floor. Single-objective problems are
//! solved exactly by canonical enumeration; multi-objective problems by
//! enumeration plus Pareto filtering; instances beyond the enumeration cap
//! fall back to [`local_search_improve`].
//!
//! Enumeration may be split across workers by RGS prefix. Per-block results
//! are merged in prefix order, so the outcome is identical for any worker
//! count.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::indices::{summarize_clusters, ReferenceParams};
use crate::instance::{ClusteringSolution, Instance};
use crate::lattice::proximity;
use crate::partitions::{count_partitions, enumerate_prefixes, PartitionBounds, PartitionGen};

/// Default guard on the number of partitions a solver may enumerate.
pub const DEFAULT_ENUMERATION_CAP: u64 = 10_000_000;

/// Tolerance used when checking scalar index bounds.
const BOUND_EPS: f64 = 1e-9;

/// Which balance index a term refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IndexKind {
    Card,
    Weight,
    Edge,
    Struct,
}

/// How the per-cluster parameter is aggregated into a scalar.
///
/// `Diff` is max minus min, `Ref` the maximal absolute deviation from the
/// reference parameter; `Min`/`Max` expose the worst/best cluster value
/// directly (used e.g. to maximize the worst intra-cluster compatibility).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    Diff,
    Ref,
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Min,
    Max,
}

/// One objective term of a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveTerm {
    pub index: IndexKind,
    pub method: Aggregate,
    pub direction: Direction,
}

impl fmt::Display for ObjectiveTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dir = match self.direction {
            Direction::Min => "min",
            Direction::Max => "max",
        };
        let idx = match self.index {
            IndexKind::Card => "card",
            IndexKind::Weight => "weight",
            IndexKind::Edge => "edge",
            IndexKind::Struct => "struct",
        };
        let agg = match self.method {
            Aggregate::Diff => "diff",
            Aggregate::Ref => "ref",
            Aggregate::Min => "min",
            Aggregate::Max => "max",
        };
        write!(f, "{dir} {idx} {agg}")
    }
}

/// A scalar upper bound on an index value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintBound {
    pub index: IndexKind,
    pub method: Aggregate,
    pub max: f64,
}

/// A full problem statement over one instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub objectives: Vec<ObjectiveTerm>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub constraints: Vec<ConstraintBound>,
    /// Fixed cluster count.
    #[serde(default, rename = "lambda", skip_serializing_if = "Option::is_none")]
    pub cluster_count: Option<usize>,
    /// Upper bound on the cluster count.
    #[serde(default, rename = "lambda_max", skip_serializing_if = "Option::is_none")]
    pub cluster_count_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_min: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub size_max: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceParams>,
    /// Minimal per-criterion grade each cluster's skill vector must reach;
    /// requires the instance to carry a criteria block.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skill_floor: Option<Vec<u8>>,
}

impl ProblemSpec {
    pub fn from_json(text: &str) -> Result<Self, SpecError> {
        serde_json::from_str(text).map_err(|e| SpecError::Json(e.to_string()))
    }

    /// Single-objective spec without constraints, as a convenience.
    pub fn single(index: IndexKind, method: Aggregate, direction: Direction) -> Self {
        ProblemSpec {
            objectives: vec![ObjectiveTerm {
                index,
                method,
                direction,
            }],
            constraints: Vec::new(),
            cluster_count: None,
            cluster_count_max: None,
            size_min: None,
            size_max: None,
            reference: None,
            skill_floor: None,
        }
    }

    pub fn validate(&self, inst: &Instance) -> Result<(), SpecError> {
        if self.objectives.is_empty() {
            return Err(SpecError::EmptyObjectives);
        }
        let uses_ref = self
            .objectives
            .iter()
            .map(|t| t.method)
            .chain(self.constraints.iter().map(|c| c.method))
            .any(|m| m == Aggregate::Ref);
        if uses_ref && self.reference.is_none() {
            return Err(SpecError::MissingReference);
        }
        let bad_struct_agg = self
            .objectives
            .iter()
            .map(|t| (t.index, t.method))
            .chain(self.constraints.iter().map(|c| (c.index, c.method)))
            .any(|(i, m)| i == IndexKind::Struct && matches!(m, Aggregate::Min | Aggregate::Max));
        if bad_struct_agg {
            return Err(SpecError::StructAggregate);
        }
        for c in &self.constraints {
            if !c.max.is_finite() || c.max < 0.0 {
                return Err(SpecError::NegativeBound(c.max));
            }
        }
        let smin = self.size_min.unwrap_or(1);
        let smax = self.size_max.unwrap_or(usize::MAX);
        if smin < 1 || smin > smax {
            return Err(SpecError::BadSizeRange);
        }
        match (self.cluster_count, self.cluster_count_max) {
            (Some(l), _) if l < 1 => return Err(SpecError::BadClusterCount),
            (Some(l), Some(l0)) if l > l0 => return Err(SpecError::BadClusterCount),
            (_, Some(l0)) if l0 < 1 => return Err(SpecError::BadClusterCount),
            _ => {}
        }
        if let Some(r) = &self.reference {
            r.validate().map_err(|e| SpecError::Reference(e.to_string()))?;
        }
        if let Some(floor) = &self.skill_floor {
            let criteria = inst.criteria().ok_or(SpecError::MissingCriteria)?;
            if floor.len() != criteria[0].len() || floor.iter().any(|&g| g > 3) {
                return Err(SpecError::BadSkillFloor);
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpecError {
    #[error("malformed problem spec: {0}")]
    Json(String),
    #[error("a problem needs at least one objective")]
    EmptyObjectives,
    #[error("a ref-method term requires reference parameters")]
    MissingReference,
    #[error("the struct index has no min/max aggregate; use diff or ref")]
    StructAggregate,
    #[error("constraint bound {0} must be finite and non-negative")]
    NegativeBound(f64),
    #[error("size bounds must satisfy 1 <= size_min <= size_max")]
    BadSizeRange,
    #[error("cluster-count bounds must be positive and consistent")]
    BadClusterCount,
    #[error("invalid reference parameters: {0}")]
    Reference(String),
    #[error("a skill floor requires the instance to carry a criteria block")]
    MissingCriteria,
    #[error("this problem requires the instance to carry a compatibility block")]
    MissingCompatibility,
    #[error("skill floor must have one grade in 0..=3 per criterion")]
    BadSkillFloor,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolveError {
    #[error("{0}")]
    Spec(#[from] SpecError),
    #[error("estimated partition count {estimate} exceeds the enumeration cap {cap}; raise the cap or use local search")]
    CapExceeded { estimate: u128, cap: u64 },
    #[error("exact solving needs exactly one objective, the spec has {0}")]
    SingleObjectiveRequired(usize),
    #[error("Pareto solving needs at least two objectives, the spec has {0}")]
    MultiObjectiveRequired(usize),
    #[error("start solution is infeasible: {0}")]
    InfeasibleStart(String),
}

/// Options shared by the enumeration-based solvers.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub cap: u64,
    pub workers: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            cap: DEFAULT_ENUMERATION_CAP,
            workers: 1,
        }
    }
}

/// Enumeration statistics of a solver run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SolveStats {
    pub enumerated: u64,
    pub feasible: u64,
}

/// Result of an exact single-objective solve.
#[derive(Debug, Clone, PartialEq)]
pub enum ExactOutcome {
    Optimal {
        solution: ClusteringSolution,
        value: f64,
    },
    Infeasible,
}

/// One point of a Pareto front: a solution and its raw objective values,
/// ordered as in the spec.
#[derive(Debug, Clone, PartialEq)]
pub struct ParetoPoint {
    pub solution: ClusteringSolution,
    pub objectives: Vec<f64>,
}

/// Feasibility verdict with human-readable violations.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<String>,
}

// ---------------------------------------------------------------------------
// Engine-internal problem form
// ---------------------------------------------------------------------------

/// Where a per-cluster value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Source {
    /// Cluster cardinality.
    Size,
    /// Total member weight.
    Weight,
    /// Intra-cluster edge weight over the instance graph.
    Edge,
    /// Intra-cluster compatibility total over the compatibility matrix.
    Compat,
    /// The cluster's maximal grade on one criterion column.
    Skill(usize),
    /// The structure estimate (aggregated by proximity).
    Struct,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct EngineTerm {
    pub source: Source,
    pub agg: Aggregate,
    pub maximize: bool,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct EngineBound {
    pub source: Source,
    pub agg: Aggregate,
    pub max: f64,
}

/// Fully resolved problem for the enumeration engine.
#[derive(Debug, Clone)]
pub(crate) struct EngineSpec {
    pub terms: Vec<EngineTerm>,
    pub bounds: Vec<EngineBound>,
    pub reference: Option<ReferenceParams>,
    pub skill_floor: Option<Vec<u8>>,
    pub forbid_zero_pairs: bool,
}

fn source_of(kind: IndexKind) -> Source {
    match kind {
        IndexKind::Card => Source::Size,
        IndexKind::Weight => Source::Weight,
        IndexKind::Edge => Source::Edge,
        IndexKind::Struct => Source::Struct,
    }
}

impl EngineSpec {
    fn from_problem(spec: &ProblemSpec) -> Self {
        EngineSpec {
            terms: spec
                .objectives
                .iter()
                .map(|t| EngineTerm {
                    source: source_of(t.index),
                    agg: t.method,
                    maximize: t.direction == Direction::Max,
                })
                .collect(),
            bounds: spec
                .constraints
                .iter()
                .map(|c| EngineBound {
                    source: source_of(c.index),
                    agg: c.method,
                    max: c.max,
                })
                .collect(),
            reference: spec.reference.clone(),
            skill_floor: spec.skill_floor.clone(),
            forbid_zero_pairs: false,
        }
    }
}

// ---------------------------------------------------------------------------
// Candidate evaluator
// ---------------------------------------------------------------------------

/// Per-candidate evaluator compiled from an engine spec. Works directly on
/// label arrays and block sizes so that enumeration never allocates.
pub(crate) struct Evaluator<'a> {
    spec: EngineSpec,
    weights: Vec<f64>,
    etypes: Vec<usize>,
    edge_list: Vec<(usize, usize, f64)>,
    compat_list: Vec<(usize, usize, f64)>,
    zero_pairs: Vec<(usize, usize)>,
    criteria: Option<&'a Vec<Vec<u8>>>,
    type_count: usize,
    needs_weight: bool,
    needs_edge: bool,
    needs_compat: bool,
    needs_struct: bool,
    needs_skill: bool,
}

/// Reusable per-worker buffers.
#[derive(Default, Clone)]
pub(crate) struct Scratch {
    weight_sums: Vec<f64>,
    edge_sums: Vec<f64>,
    compat_sums: Vec<f64>,
    type_counts: Vec<u32>,
    skills: Vec<u8>,
    /// Objective values of the last feasible candidate.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub(crate) enum EngineError {
    #[error("this problem requires the instance to carry a compatibility block")]
    MissingCompatibility,
    #[error("this problem requires the instance to carry a criteria block")]
    MissingCriteria,
    #[error("reference parameters are required")]
    MissingReference,
}

impl<'a> Evaluator<'a> {
    pub fn new(inst: &'a Instance, spec: EngineSpec) -> Result<Self, EngineError> {
        let sources = || {
            spec.terms
                .iter()
                .map(|t| t.source)
                .chain(spec.bounds.iter().map(|b| b.source))
        };
        let needs_weight = sources().any(|s| s == Source::Weight);
        let needs_edge = sources().any(|s| s == Source::Edge);
        let needs_compat = sources().any(|s| s == Source::Compat);
        let needs_struct = sources().any(|s| s == Source::Struct);
        let needs_skill =
            sources().any(|s| matches!(s, Source::Skill(_))) || spec.skill_floor.is_some();

        let uses_ref = spec
            .terms
            .iter()
            .map(|t| t.agg)
            .chain(spec.bounds.iter().map(|b| b.agg))
            .any(|a| a == Aggregate::Ref);
        if uses_ref && spec.reference.is_none() {
            return Err(EngineError::MissingReference);
        }

        let criteria = if needs_skill {
            Some(inst.criteria().ok_or(EngineError::MissingCriteria)?)
        } else {
            None
        };

        let mut compat_list = Vec::new();
        let mut zero_pairs = Vec::new();
        if needs_compat || spec.forbid_zero_pairs {
            let matrix = inst
                .compatibility()
                .ok_or(EngineError::MissingCompatibility)?;
            for a in 0..matrix.len() {
                for b in (a + 1)..matrix.len() {
                    if matrix[a][b] > 0 {
                        compat_list.push((a, b, f64::from(matrix[a][b])));
                    } else {
                        zero_pairs.push((a, b));
                    }
                }
            }
        }
        if !spec.forbid_zero_pairs {
            zero_pairs.clear();
        }

        Ok(Evaluator {
            weights: inst.elements().iter().map(|e| e.weight).collect(),
            etypes: inst.elements().iter().map(|e| e.element_type - 1).collect(),
            edge_list: inst
                .graph()
                .edges()
                .filter(|&(_, _, w)| w != 0.0)
                .map(|(a, b, w)| (a.0, b.0, w))
                .collect(),
            compat_list,
            zero_pairs,
            criteria,
            type_count: inst.type_count(),
            needs_weight,
            needs_edge,
            needs_compat,
            needs_struct,
            needs_skill,
            spec,
        })
    }

    pub fn maximize_flags(&self) -> Vec<bool> {
        self.spec.terms.iter().map(|t| t.maximize).collect()
    }

    /// Evaluates one candidate. Returns false when infeasible; on success
    /// the objective values are left in `scratch.values`.
    pub fn evaluate(&self, rgs: &[usize], sizes: &[u32], scratch: &mut Scratch) -> bool {
        let lambda = sizes.len();

        for &(a, b) in &self.zero_pairs {
            if rgs[a] == rgs[b] {
                return false;
            }
        }

        // Cardinality bounds first: they need no per-cluster sums.
        for bound in &self.spec.bounds {
            if bound.source == Source::Size {
                let value = self.aggregate_sizes(sizes, bound.agg);
                if value > bound.max + BOUND_EPS {
                    return false;
                }
            }
        }

        if self.needs_weight {
            fill_sums(&mut scratch.weight_sums, lambda);
            for (elem, &label) in rgs.iter().enumerate() {
                scratch.weight_sums[label] += self.weights[elem];
            }
        }
        if self.needs_edge {
            fill_sums(&mut scratch.edge_sums, lambda);
            for &(a, b, w) in &self.edge_list {
                if rgs[a] == rgs[b] {
                    scratch.edge_sums[rgs[a]] += w;
                }
            }
        }
        if self.needs_compat {
            fill_sums(&mut scratch.compat_sums, lambda);
            for &(a, b, w) in &self.compat_list {
                if rgs[a] == rgs[b] {
                    scratch.compat_sums[rgs[a]] += w;
                }
            }
        }
        if self.needs_skill {
            let criteria = self.criteria.expect("criteria checked at build time");
            let m = criteria[0].len();
            scratch.skills.clear();
            scratch.skills.resize(lambda * m, 0);
            for (elem, &label) in rgs.iter().enumerate() {
                for (c, &grade) in criteria[elem].iter().enumerate() {
                    let cell = &mut scratch.skills[label * m + c];
                    *cell = (*cell).max(grade);
                }
            }
            if let Some(floor) = &self.spec.skill_floor {
                for block in 0..lambda {
                    for (c, &need) in floor.iter().enumerate() {
                        if scratch.skills[block * m + c] < need {
                            return false;
                        }
                    }
                }
            }
        }
        if self.needs_struct && !self.fill_struct_prefixes(rgs, sizes, scratch) {
            return false;
        }

        for bound in &self.spec.bounds {
            if bound.source == Source::Size {
                continue;
            }
            let value = match self.term_value(bound.source, bound.agg, sizes, scratch) {
                Some(v) => v,
                None => return false,
            };
            if value > bound.max + BOUND_EPS {
                return false;
            }
        }

        scratch.values.clear();
        for term in &self.spec.terms {
            match self.term_value(term.source, term.agg, sizes, scratch) {
                Some(v) => scratch.values.push(v),
                None => return false,
            }
        }
        true
    }

    fn aggregate_sizes(&self, sizes: &[u32], agg: Aggregate) -> f64 {
        let max = f64::from(*sizes.iter().max().unwrap_or(&0));
        let min = f64::from(*sizes.iter().min().unwrap_or(&0));
        match agg {
            Aggregate::Diff => max - min,
            Aggregate::Max => max,
            Aggregate::Min => min,
            Aggregate::Ref => {
                let r = self.spec.reference.as_ref().expect("checked").size;
                sizes
                    .iter()
                    .map(|&s| (f64::from(s) - r).abs())
                    .fold(0.0, f64::max)
            }
        }
    }

    fn aggregate_slice(values: &[f64], agg: Aggregate, reference: f64) -> f64 {
        match agg {
            Aggregate::Diff => {
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                max - min
            }
            Aggregate::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            Aggregate::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
            Aggregate::Ref => values
                .iter()
                .map(|v| (v - reference).abs())
                .fold(0.0, f64::max),
        }
    }

    fn term_value(
        &self,
        source: Source,
        agg: Aggregate,
        sizes: &[u32],
        scratch: &mut Scratch,
    ) -> Option<f64> {
        let reference = self.spec.reference.as_ref();
        match source {
            Source::Size => Some(self.aggregate_sizes(sizes, agg)),
            Source::Weight => Some(Self::aggregate_slice(
                &scratch.weight_sums,
                agg,
                reference.map_or(0.0, |r| r.weight),
            )),
            Source::Edge => Some(Self::aggregate_slice(
                &scratch.edge_sums,
                agg,
                reference.map_or(0.0, |r| r.edge_weight),
            )),
            Source::Compat => Some(Self::aggregate_slice(&scratch.compat_sums, agg, 0.0)),
            Source::Skill(c) => {
                let criteria = self.criteria.expect("criteria checked at build time");
                let m = criteria[0].len();
                let lambda = sizes.len();
                let per_block: Vec<f64> = (0..lambda)
                    .map(|b| f64::from(scratch.skills[b * m + c]))
                    .collect();
                Some(Self::aggregate_slice(&per_block, agg, 0.0))
            }
            Source::Struct => self.struct_value(agg, sizes, scratch),
        }
    }

    /// Builds per-block prefix-sum rows of the structure estimates into
    /// `scratch.type_counts`. With a ref-struct term, blocks are re-padded
    /// onto the reference scale; a solution whose maximal cluster size
    /// exceeds the reference total has no valid re-padding and is
    /// infeasible.
    fn fill_struct_prefixes(&self, rgs: &[usize], sizes: &[u32], scratch: &mut Scratch) -> bool {
        let lambda = sizes.len();
        let k = self.type_count + 1;
        let max_size = *sizes.iter().max().unwrap_or(&0);
        let uses_ref = self
            .spec
            .terms
            .iter()
            .map(|t| (t.source, t.agg))
            .chain(self.spec.bounds.iter().map(|b| (b.source, b.agg)))
            .any(|(s, a)| s == Source::Struct && a == Aggregate::Ref);
        let pad_total = if uses_ref {
            let total = self.spec.reference.as_ref().expect("checked").estimate.total();
            if max_size > total {
                return false;
            }
            total
        } else {
            max_size
        };
        scratch.type_counts.clear();
        scratch.type_counts.resize(lambda * k, 0);
        for (elem, &label) in rgs.iter().enumerate() {
            scratch.type_counts[label * k + self.etypes[elem]] += 1;
        }
        for block in 0..lambda {
            scratch.type_counts[block * k + k - 1] = pad_total - sizes[block];
            // prefix sums in place
            for col in 1..k {
                scratch.type_counts[block * k + col] += scratch.type_counts[block * k + col - 1];
            }
        }
        true
    }

    fn struct_value(&self, agg: Aggregate, sizes: &[u32], scratch: &mut Scratch) -> Option<f64> {
        let lambda = sizes.len();
        let k = self.type_count + 1;
        let rows = &scratch.type_counts;
        match agg {
            Aggregate::Diff => {
                let mut best = 0u64;
                for i in 0..lambda {
                    for j in (i + 1)..lambda {
                        let mut d = 0u64;
                        for col in 0..k {
                            d += u64::from(rows[i * k + col].abs_diff(rows[j * k + col]));
                        }
                        best = best.max(d);
                    }
                }
                Some(best as f64)
            }
            Aggregate::Ref => {
                let est = &self.spec.reference.as_ref().expect("checked").estimate;
                let mut ref_prefix = Vec::with_capacity(k);
                let mut acc = 0u32;
                for &c in est.counts() {
                    acc += c;
                    ref_prefix.push(acc);
                }
                if ref_prefix.len() != k {
                    return None;
                }
                let mut worst = 0u64;
                for i in 0..lambda {
                    let mut d = 0u64;
                    for col in 0..k {
                        d += u64::from(rows[i * k + col].abs_diff(ref_prefix[col]));
                    }
                    worst = worst.max(d);
                }
                Some(worst as f64)
            }
            Aggregate::Min | Aggregate::Max => None,
        }
    }
}

fn fill_sums(buffer: &mut Vec<f64>, lambda: usize) {
    buffer.clear();
    buffer.resize(lambda, 0.0);
}

// ---------------------------------------------------------------------------
// Enumeration engine
// ---------------------------------------------------------------------------

trait Fold: Clone + Send + Sync {
    fn push(&mut self, rgs: &[usize], values: &[f64]);
    fn merge(&mut self, other: Self);
}

/// Keeps the best candidate of a single normalized objective; ties keep the
/// earliest candidate in canonical order.
#[derive(Clone)]
struct BestFold {
    maximize: bool,
    best: Option<(f64, Vec<usize>)>,
}

impl Fold for BestFold {
    fn push(&mut self, rgs: &[usize], values: &[f64]) {
        let norm = if self.maximize { -values[0] } else { values[0] };
        match &self.best {
            Some((incumbent, _)) if norm >= *incumbent => {}
            _ => self.best = Some((norm, rgs.to_vec())),
        }
    }

    fn merge(&mut self, other: Self) {
        if let Some((norm, rgs)) = other.best {
            match &self.best {
                Some((incumbent, _)) if norm >= *incumbent => {}
                _ => self.best = Some((norm, rgs)),
            }
        }
    }
}

#[derive(Clone)]
struct ArchiveEntry {
    norm: Vec<f64>,
    raw: Vec<f64>,
    rgs: Vec<usize>,
}

/// Maintains the nondominated set of normalized objective vectors, one
/// representative (earliest in canonical order) per distinct vector.
#[derive(Clone)]
struct ArchiveFold {
    maximize: Vec<bool>,
    entries: Vec<ArchiveEntry>,
}

fn le_componentwise(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

impl ArchiveFold {
    fn insert(&mut self, entry: ArchiveEntry) {
        if self
            .entries
            .iter()
            .any(|e| le_componentwise(&e.norm, &entry.norm))
        {
            // Dominated by or equal to an archived vector.
            return;
        }
        self.entries
            .retain(|e| !le_componentwise(&entry.norm, &e.norm));
        self.entries.push(entry);
    }
}

impl Fold for ArchiveFold {
    fn push(&mut self, rgs: &[usize], values: &[f64]) {
        let norm: Vec<f64> = values
            .iter()
            .zip(&self.maximize)
            .map(|(&v, &max)| if max { -v } else { v })
            .collect();
        self.insert(ArchiveEntry {
            norm,
            raw: values.to_vec(),
            rgs: rgs.to_vec(),
        });
    }

    fn merge(&mut self, other: Self) {
        for entry in other.entries {
            self.insert(entry);
        }
    }
}

fn run_block<F: Fold>(
    gen: &mut PartitionGen,
    eval: &Evaluator<'_>,
    fold: &mut F,
    stats: &mut SolveStats,
) {
    let mut scratch = Scratch::default();
    while gen.advance() {
        stats.enumerated += 1;
        if eval.evaluate(gen.rgs(), gen.sizes(), &mut scratch) {
            stats.feasible += 1;
            fold.push(gen.rgs(), &scratch.values);
        }
    }
}

fn run_engine<F: Fold>(
    bounds: PartitionBounds,
    eval: &Evaluator<'_>,
    workers: usize,
    init: F,
) -> (F, SolveStats) {
    let zero = SolveStats {
        enumerated: 0,
        feasible: 0,
    };
    if workers <= 1 {
        let mut fold = init;
        let mut stats = zero;
        let mut gen = PartitionGen::new(bounds);
        run_block(&mut gen, eval, &mut fold, &mut stats);
        return (fold, stats);
    }

    // Split by RGS prefix; merge per-block results in prefix order so the
    // outcome is independent of the worker count.
    let mut depth = 2usize;
    let mut prefixes = enumerate_prefixes(bounds, depth);
    while prefixes.len() < workers * 4 && depth < bounds.n.min(12) {
        depth += 1;
        prefixes = enumerate_prefixes(bounds, depth);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("worker pool");
    let results: Vec<(F, SolveStats)> = pool.install(|| {
        prefixes
            .par_iter()
            .map(|prefix| {
                let mut fold = init.clone();
                let mut stats = zero;
                if let Some(mut gen) = PartitionGen::with_prefix(bounds, prefix) {
                    run_block(&mut gen, eval, &mut fold, &mut stats);
                }
                (fold, stats)
            })
            .collect()
    });
    let mut fold = init;
    let mut stats = zero;
    for (block_fold, block_stats) in results {
        fold.merge(block_fold);
        stats.enumerated += block_stats.enumerated;
        stats.feasible += block_stats.feasible;
    }
    (fold, stats)
}

fn derive_bounds(n: usize, spec: &ProblemSpec) -> PartitionBounds {
    let (lmin, lmax) = match (spec.cluster_count, spec.cluster_count_max) {
        (Some(l), _) => (l, l),
        (None, Some(l0)) => (1, l0),
        (None, None) => (1, n),
    };
    let smin = spec.size_min.unwrap_or(1);
    let smax = spec.size_max.unwrap_or(n);
    PartitionBounds::new(n, lmin..=lmax, smin..=smax)
}

pub(crate) fn guard_cap(bounds: PartitionBounds, cap: u64) -> Result<(), SolveError> {
    let estimate = count_partitions(
        bounds.n,
        bounds.lambda_min..=bounds.lambda_max,
        bounds.size_min..=bounds.size_max,
    );
    if estimate > u128::from(cap) {
        return Err(SolveError::CapExceeded { estimate, cap });
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Public solvers
// ---------------------------------------------------------------------------

/// Exact single-objective solve by canonical enumeration. Ties are broken by
/// canonical (RGS lexicographic) order of the solution encoding.
pub fn solve_exact(
    inst: &Instance,
    spec: &ProblemSpec,
    opts: &SolveOptions,
) -> Result<(ExactOutcome, SolveStats), SolveError> {
    spec.validate(inst)?;
    if spec.objectives.len() != 1 {
        return Err(SolveError::SingleObjectiveRequired(spec.objectives.len()));
    }
    let bounds = derive_bounds(inst.n(), spec);
    guard_cap(bounds, opts.cap)?;
    let eval = Evaluator::new(inst, EngineSpec::from_problem(spec)).map_err(engine_to_spec)?;
    let maximize = spec.objectives[0].direction == Direction::Max;
    let (fold, stats) = run_engine(
        bounds,
        &eval,
        opts.workers.max(1),
        BestFold {
            maximize,
            best: None,
        },
    );
    let outcome = match fold.best {
        Some((norm, rgs)) => ExactOutcome::Optimal {
            solution: ClusteringSolution::from_assignment(&rgs),
            value: if maximize { -norm } else { norm },
        },
        None => ExactOutcome::Infeasible,
    };
    Ok((outcome, stats))
}

/// Multi-objective solve: the Pareto front of feasible solutions, one
/// canonical representative per distinct nondominated objective vector,
/// sorted by normalized objective vector.
pub fn solve_pareto(
    inst: &Instance,
    spec: &ProblemSpec,
    opts: &SolveOptions,
) -> Result<(Vec<ParetoPoint>, SolveStats), SolveError> {
    spec.validate(inst)?;
    if spec.objectives.len() < 2 {
        return Err(SolveError::MultiObjectiveRequired(spec.objectives.len()));
    }
    let bounds = derive_bounds(inst.n(), spec);
    guard_cap(bounds, opts.cap)?;
    let eval = Evaluator::new(inst, EngineSpec::from_problem(spec)).map_err(engine_to_spec)?;
    Ok(engine_pareto_run(bounds, &eval, opts.workers.max(1)))
}

/// Pareto run over a prepared evaluator; shared with the team module.
pub(crate) fn engine_pareto_run(
    bounds: PartitionBounds,
    eval: &Evaluator<'_>,
    workers: usize,
) -> (Vec<ParetoPoint>, SolveStats) {
    let (mut fold, stats) = run_engine(
        bounds,
        eval,
        workers,
        ArchiveFold {
            maximize: eval.maximize_flags(),
            entries: Vec::new(),
        },
    );
    fold.entries.sort_by(|a, b| {
        a.norm
            .partial_cmp(&b.norm)
            .expect("objective values are finite")
    });
    let front = fold
        .entries
        .into_iter()
        .map(|e| ParetoPoint {
            solution: ClusteringSolution::from_assignment(&e.rgs),
            objectives: e.raw,
        })
        .collect();
    (front, stats)
}

fn engine_to_spec(err: EngineError) -> SolveError {
    match err {
        EngineError::MissingCriteria => SolveError::Spec(SpecError::MissingCriteria),
        EngineError::MissingReference => SolveError::Spec(SpecError::MissingReference),
        EngineError::MissingCompatibility => SolveError::Spec(SpecError::MissingCompatibility),
    }
}

/// Checks a solution against a spec's constraints and bounds, reporting
/// every violation.
pub fn check_feasible(
    inst: &Instance,
    sol: &ClusteringSolution,
    spec: &ProblemSpec,
) -> Result<FeasibilityReport, SpecError> {
    spec.validate(inst)?;
    let mut violations = Vec::new();
    if let Some(l) = spec.cluster_count {
        if sol.lambda() != l {
            violations.push(format!("cluster count {} differs from fixed {}", sol.lambda(), l));
        }
    }
    if let Some(l0) = spec.cluster_count_max {
        if sol.lambda() > l0 {
            violations.push(format!("cluster count {} exceeds bound {}", sol.lambda(), l0));
        }
    }
    for (i, &size) in sol.sizes().iter().enumerate() {
        if let Some(smin) = spec.size_min {
            if size < smin {
                violations.push(format!("cluster {} size {} below minimum {}", i + 1, size, smin));
            }
        }
        if let Some(smax) = spec.size_max {
            if size > smax {
                violations.push(format!("cluster {} size {} above maximum {}", i + 1, size, smax));
            }
        }
    }
    if let Some(floor) = &spec.skill_floor {
        let criteria = inst.criteria().expect("validated above");
        for (i, cluster) in sol.clusters().iter().enumerate() {
            for (c, &need) in floor.iter().enumerate() {
                let have = cluster
                    .iter()
                    .map(|id| criteria[id.0][c])
                    .max()
                    .unwrap_or(0);
                if have < need {
                    violations.push(format!(
                        "cluster {} skill {} grade {} below floor {}",
                        i + 1,
                        c + 1,
                        have,
                        need
                    ));
                }
            }
        }
    }
    for constraint in &spec.constraints {
        match index_value(inst, sol, constraint.index, constraint.method, spec.reference.as_ref()) {
            Some(value) => {
                if value > constraint.max + BOUND_EPS {
                    violations.push(format!(
                        "{:?} {:?} index {} violates bound {}",
                        constraint.index, constraint.method, value, constraint.max
                    ));
                }
            }
            None => violations.push(format!(
                "{:?} {:?} index is not comparable to the reference scale",
                constraint.index, constraint.method
            )),
        }
    }
    Ok(FeasibilityReport {
        feasible: violations.is_empty(),
        violations,
    })
}

/// Scalar value of one index of a solution; `None` when a ref-struct value
/// cannot be compared because the solution's scale exceeds the reference's.
///
/// This path is built on the cluster summaries and is deliberately separate
/// from the enumeration evaluator.
pub fn index_value(
    inst: &Instance,
    sol: &ClusteringSolution,
    index: IndexKind,
    method: Aggregate,
    reference: Option<&ReferenceParams>,
) -> Option<f64> {
    let summaries = summarize_clusters(inst, sol);
    let values: Vec<f64> = match index {
        IndexKind::Card => summaries.iter().map(|s| s.size as f64).collect(),
        IndexKind::Weight => summaries.iter().map(|s| s.total_weight).collect(),
        IndexKind::Edge => summaries.iter().map(|s| s.intra_edge_weight).collect(),
        IndexKind::Struct => {
            return struct_index_value(&summaries, sol, method, reference);
        }
    };
    let ref_scalar = reference.map(|r| match index {
        IndexKind::Card => r.size,
        IndexKind::Weight => r.weight,
        IndexKind::Edge => r.edge_weight,
        IndexKind::Struct => unreachable!(),
    });
    Some(match method {
        Aggregate::Diff => {
            values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                - values.iter().copied().fold(f64::INFINITY, f64::min)
        }
        Aggregate::Max => values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        Aggregate::Min => values.iter().copied().fold(f64::INFINITY, f64::min),
        Aggregate::Ref => {
            let r = ref_scalar?;
            values.iter().map(|v| (v - r).abs()).fold(0.0, f64::max)
        }
    })
}

fn struct_index_value(
    summaries: &[crate::indices::ClusterSummary],
    sol: &ClusteringSolution,
    method: Aggregate,
    reference: Option<&ReferenceParams>,
) -> Option<f64> {
    match method {
        Aggregate::Diff => {
            let mut best = 0u32;
            for i in 0..summaries.len() {
                for j in (i + 1)..summaries.len() {
                    let d = proximity(&summaries[i].estimate, &summaries[j].estimate)
                        .expect("shared scale");
                    best = best.max(d);
                }
            }
            Some(f64::from(best))
        }
        Aggregate::Ref => {
            let r = reference?;
            let total = r.estimate.total();
            if (sol.max_cluster_size() as u32) > total {
                return None;
            }
            let mut worst = 0u32;
            for s in summaries {
                let padded = s.estimate.repadded(total).expect("total checked");
                worst = worst.max(proximity(&padded, &r.estimate).expect("same scale"));
            }
            Some(f64::from(worst))
        }
        Aggregate::Min | Aggregate::Max => None,
    }
}

// ---------------------------------------------------------------------------
// Local search
// ---------------------------------------------------------------------------

/// Result of a local-search improvement run.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchOutcome {
    pub solution: ClusteringSolution,
    pub objective: f64,
    /// Objective after the start and after each applied move; never
    /// increasing.
    pub trace: Vec<f64>,
    pub evaluations: u64,
}

/// First-improvement local search over relocate-one-element and
/// swap-two-elements moves, in deterministic scan order: relocations by
/// ascending element id then ascending target cluster, then swaps by
/// ascending element pair. Stops at a local optimum or when `budget` move
/// evaluations are spent.
pub fn local_search_improve(
    inst: &Instance,
    start: &ClusteringSolution,
    spec: &ProblemSpec,
    budget: u64,
) -> Result<LocalSearchOutcome, SolveError> {
    spec.validate(inst)?;
    if spec.objectives.len() != 1 {
        return Err(SolveError::SingleObjectiveRequired(spec.objectives.len()));
    }
    let bounds = derive_bounds(inst.n(), spec);
    let eval = Evaluator::new(inst, EngineSpec::from_problem(spec)).map_err(engine_to_spec)?;
    let maximize = spec.objectives[0].direction == Direction::Max;
    let mut scratch = Scratch::default();

    let mut assign = start.assignment();
    let (mut norm, mut raw) = match probe(&eval, &bounds, &assign, maximize, &mut scratch) {
        Some(v) => v,
        None => {
            return Err(SolveError::InfeasibleStart(
                "start violates the spec's constraints or bounds".into(),
            ))
        }
    };
    let mut trace = vec![raw];
    let mut evaluations = 0u64;
    let n = assign.len();

    'outer: loop {
        let lambda = assign.iter().max().map_or(0, |&l| l + 1);
        // Relocations.
        for elem in 0..n {
            for target in 0..lambda {
                if assign[elem] == target {
                    continue;
                }
                if evaluations >= budget {
                    break 'outer;
                }
                evaluations += 1;
                let mut candidate = assign.clone();
                candidate[elem] = target;
                let candidate = renumber(&candidate);
                if let Some((cand_norm, cand_raw)) =
                    probe(&eval, &bounds, &candidate, maximize, &mut scratch)
                {
                    if cand_norm < norm {
                        assign = candidate;
                        norm = cand_norm;
                        raw = cand_raw;
                        trace.push(raw);
                        continue 'outer;
                    }
                }
            }
        }
        // Swaps.
        for a in 0..n {
            for b in (a + 1)..n {
                if assign[a] == assign[b] {
                    continue;
                }
                if evaluations >= budget {
                    break 'outer;
                }
                evaluations += 1;
                let mut candidate = assign.clone();
                candidate.swap(a, b);
                let candidate = renumber(&candidate);
                if let Some((cand_norm, cand_raw)) =
                    probe(&eval, &bounds, &candidate, maximize, &mut scratch)
                {
                    if cand_norm < norm {
                        assign = candidate;
                        norm = cand_norm;
                        raw = cand_raw;
                        trace.push(raw);
                        continue 'outer;
                    }
                }
            }
        }
        break;
    }

    Ok(LocalSearchOutcome {
        solution: ClusteringSolution::from_assignment(&assign),
        objective: raw,
        trace,
        evaluations,
    })
}

/// Relabels by first occurrence so labels form a canonical RGS.
fn renumber(assign: &[usize]) -> Vec<usize> {
    let mut map: Vec<Option<usize>> = vec![None; assign.len() + 1];
    let mut next = 0usize;
    assign
        .iter()
        .map(|&label| {
            *map[label].get_or_insert_with(|| {
                let v = next;
                next += 1;
                v
            })
        })
        .collect()
}

fn probe(
    eval: &Evaluator<'_>,
    bounds: &PartitionBounds,
    assign: &[usize],
    maximize: bool,
    scratch: &mut Scratch,
) -> Option<(f64, f64)> {
    let lambda = assign.iter().max().map_or(0, |&l| l + 1);
    let mut sizes = vec![0u32; lambda];
    for &label in assign {
        sizes[label] += 1;
    }
    if lambda < bounds.lambda_min || lambda > bounds.lambda_max {
        return None;
    }
    if sizes
        .iter()
        .any(|&s| (s as usize) < bounds.size_min || (s as usize) > bounds.size_max)
    {
        return None;
    }
    if !eval.evaluate(assign, &sizes, scratch) {
        return None;
    }
    let raw = scratch.values[0];
    Some((if maximize { -raw } else { raw }, raw))
}
