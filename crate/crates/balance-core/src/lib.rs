//! Balanced clustering: indices, solvers, and team formation.
//!
//! The crate models element sets with weights, ordinal types, and a
//! symmetric relation graph; evaluates clustering solutions with eight
//! balance/unbalance indices (difference and reference-deviation variants
//! over cardinality, weight, intra-cluster edge weight, and multiset
//! structure estimates); and solves constrained and multicriteria balanced
//! clustering problems by exact enumeration, Pareto filtering, local search,
//! and a kernel-extension team heuristic.

pub mod indices;
pub mod instance;
pub mod lattice;
pub mod optimize;
pub mod partitions;
pub mod team;

pub use indices::{
    index_report, method1_indices, method2_indices, proximity_matrix, summarize_cluster,
    summarize_clusters, ClusterSummary, DiffIndices, IndexReport, RefIndices, ReferenceParams,
};
pub use instance::{
    parse_instance, validate_solution, ClusteringSolution, Element, ElementId, Erratum, Instance,
    ParseError, SolutionError, WeightedGraph,
};
pub use lattice::{
    dominance_compare, enumerate_scale, proximity, scale_dot, structure_estimate,
    structure_estimates, Dominance, EstimateError, MultisetEstimate, ScaleNode,
};
pub use optimize::{
    check_feasible, index_value, local_search_improve, solve_exact, solve_pareto, Aggregate,
    ConstraintBound, Direction, ExactOutcome, FeasibilityReport, IndexKind, LocalSearchOutcome,
    ObjectiveTerm, ParetoPoint, ProblemSpec, SolveError, SolveOptions, SolveStats, SpecError,
    DEFAULT_ENUMERATION_CAP,
};
pub use partitions::{count_partitions, enumerate_partitions, PartitionBounds, PartitionIter};
pub use team::{
    cluster_count_estimate, evaluate_teams, kernel_heuristic, select_kernels, team_compat,
    team_exact, team_pareto, team_skill, skill_meets_floor, CompatibilityRelation, CriteriaMatrix,
    KernelRun, TeamError, TeamReport, TeamSpec, TeamSummary,
};
