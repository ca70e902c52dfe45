//! Multi-skill team formation over a compatibility relation.
//!
//! Elements carry ordinal grades (scale 0..=3) on a set of criteria; a
//! team's skill vector is the componentwise maximum of its members' rows. A
//! symmetric compatibility relation grades every pair, grade 0 meaning
//! incompatibility; a team's compatibility total is the sum over its
//! unordered member pairs.
//!
//! The kernel-extension heuristic seeds one team per cluster with a
//! Pareto-best "leader" element and grows the currently smallest team by the
//! most compatible unassigned element. Exact and Pareto solving reuse the
//! enumeration engine with team objectives (minimize the cardinality balance
//! index, maximize the worst team compatibility, optionally Pareto-maximize
//! the worst team skill vector).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::instance::{ClusteringSolution, ElementId, Instance};
use crate::optimize::{
    engine_pareto_run, guard_cap, Aggregate, EngineBound, EngineSpec, EngineTerm, Evaluator,
    ParetoPoint, SolveError, SolveOptions, SolveStats, Source,
};
use crate::partitions::PartitionBounds;

/// Per-element ordinal grades on the assessment criteria.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriteriaMatrix {
    grades: Vec<Vec<u8>>,
}

impl CriteriaMatrix {
    /// Extracts and checks the criteria block of an instance. Every element
    /// must have at least one positive grade.
    pub fn from_instance(inst: &Instance) -> Result<Self, TeamError> {
        let rows = inst.criteria().ok_or(TeamError::MissingCriteria)?;
        for (row, grades) in rows.iter().enumerate() {
            if grades.iter().all(|&g| g == 0) {
                return Err(TeamError::AllZeroRow { element: row + 1 });
            }
        }
        Ok(CriteriaMatrix {
            grades: rows.clone(),
        })
    }

    /// Number of criteria.
    pub fn criteria_count(&self) -> usize {
        self.grades[0].len()
    }

    pub fn grade(&self, element: ElementId, criterion: usize) -> u8 {
        self.grades[element.0][criterion]
    }

    pub fn row(&self, element: ElementId) -> &[u8] {
        &self.grades[element.0]
    }
}

/// Symmetric pairwise compatibility grades; 0 means incompatibility.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompatibilityRelation {
    grades: Vec<Vec<u8>>,
}

impl CompatibilityRelation {
    pub fn from_instance(inst: &Instance) -> Result<Self, TeamError> {
        let matrix = inst.compatibility().ok_or(TeamError::MissingCompatibility)?;
        Ok(CompatibilityRelation {
            grades: matrix.clone(),
        })
    }

    pub fn grade(&self, a: ElementId, b: ElementId) -> u8 {
        self.grades[a.0][b.0]
    }
}

/// Requirements on the teams of a solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TeamSpec {
    pub size_min: usize,
    pub size_max: usize,
    /// Minimal per-criterion grade every team's skill vector must reach.
    pub skill_floor: Vec<u8>,
    /// Forbid placing two elements with compatibility grade 0 in one team.
    #[serde(default = "default_true")]
    pub forbid_zero_pairs: bool,
    /// 1-based criteria used to pick kernels, in choice order.
    pub kernel_criteria: Vec<usize>,
}

fn default_true() -> bool {
    true
}

impl TeamSpec {
    pub fn from_json(text: &str) -> Result<Self, TeamError> {
        serde_json::from_str(text).map_err(|e| TeamError::Json(e.to_string()))
    }

    pub fn validate(&self, cm: &CriteriaMatrix) -> Result<(), TeamError> {
        if self.size_min < 1 || self.size_min > self.size_max {
            return Err(TeamError::BadSizeRange);
        }
        let m = cm.criteria_count();
        if self.skill_floor.len() != m || self.skill_floor.iter().any(|&g| g > 3) {
            return Err(TeamError::BadSkillFloor);
        }
        if self.kernel_criteria.is_empty()
            || self.kernel_criteria.iter().any(|&c| c < 1 || c > m)
        {
            return Err(TeamError::BadKernelCriteria);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TeamError {
    #[error("malformed team spec: {0}")]
    Json(String),
    #[error("instance has no criteria block")]
    MissingCriteria,
    #[error("instance has no compatibility block")]
    MissingCompatibility,
    #[error("element {element} has no positive criteria grade")]
    AllZeroRow { element: usize },
    #[error("team sizes must satisfy 1 <= size_min <= size_max")]
    BadSizeRange,
    #[error("skill floor must carry one grade in 0..=3 per criterion")]
    BadSkillFloor,
    #[error("kernel criteria must be non-empty 1-based criterion numbers")]
    BadKernelCriteria,
    #[error("no cluster count fits {n} elements with sizes in [{size_min},{size_max}]")]
    NoFeasibleClusterCount {
        n: usize,
        size_min: usize,
        size_max: usize,
    },
    #[error("heuristic found no feasible assignment: {0}")]
    HeuristicInfeasible(String),
}

/// Componentwise maximum of the members' criteria rows.
pub fn team_skill(cm: &CriteriaMatrix, team: &[ElementId]) -> Vec<u8> {
    let mut skill = vec![0u8; cm.criteria_count()];
    for &member in team {
        for (c, &grade) in cm.row(member).iter().enumerate() {
            skill[c] = skill[c].max(grade);
        }
    }
    skill
}

/// Sum of compatibility grades over the team's unordered member pairs.
pub fn team_compat(cr: &CompatibilityRelation, team: &[ElementId]) -> u32 {
    let mut total = 0u32;
    for (i, &a) in team.iter().enumerate() {
        for &b in &team[i + 1..] {
            total += u32::from(cr.grade(a, b));
        }
    }
    total
}

/// Componentwise vector dominance: every grade of `skill` reaches the floor.
pub fn skill_meets_floor(skill: &[u8], floor: &[u8]) -> bool {
    skill.iter().zip(floor).all(|(s, f)| s >= f)
}

/// Outcome of a kernel-extension heuristic run.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelRun {
    pub solution: ClusteringSolution,
    /// Kernel elements in ascending id order, one per team.
    pub kernels: Vec<ElementId>,
    pub lambda: usize,
}

/// Approximate cluster count: round `n / size_max`, then adjust until a
/// count exists whose capacity covers `n`.
pub fn cluster_count_estimate(
    n: usize,
    size_min: usize,
    size_max: usize,
) -> Result<usize, TeamError> {
    let feasible = |l: usize| l >= 1 && l * size_min <= n && l * size_max >= n;
    let mut lambda = ((n as f64 / size_max as f64).round() as usize).max(1);
    while lambda * size_max < n {
        lambda += 1;
    }
    while lambda > 1 && lambda * size_min > n {
        lambda -= 1;
    }
    if feasible(lambda) {
        Ok(lambda)
    } else {
        Err(TeamError::NoFeasibleClusterCount {
            n,
            size_min,
            size_max,
        })
    }
}

/// Kernel elements: the Pareto-maximal elements on the kernel criteria,
/// trimmed or extended to exactly `lambda` by grade sum (ties to the
/// smallest id), returned in ascending id order.
pub fn select_kernels(cm: &CriteriaMatrix, spec: &TeamSpec, n: usize, lambda: usize) -> Vec<ElementId> {
    let criteria: Vec<usize> = spec.kernel_criteria.iter().map(|&c| c - 1).collect();
    let grades = |e: usize| -> Vec<u8> {
        criteria.iter().map(|&c| cm.grade(ElementId(e), c)).collect()
    };
    let dominated = |e: usize| -> bool {
        let ge = grades(e);
        (0..n).any(|f| {
            if f == e {
                return false;
            }
            let gf = grades(f);
            gf.iter().zip(&ge).all(|(x, y)| x >= y) && gf.iter().zip(&ge).any(|(x, y)| x > y)
        })
    };
    let grade_sum = |e: usize| -> u32 { grades(e).iter().map(|&g| u32::from(g)).sum() };

    let mut kernels: Vec<usize> = (0..n).filter(|&e| !dominated(e)).collect();
    if kernels.len() > lambda {
        kernels.sort_by_key(|&e| (std::cmp::Reverse(grade_sum(e)), e));
        kernels.truncate(lambda);
    } else if kernels.len() < lambda {
        let mut rest: Vec<usize> = (0..n).filter(|e| !kernels.contains(e)).collect();
        rest.sort_by_key(|&e| (std::cmp::Reverse(grade_sum(e)), e));
        kernels.extend(rest.into_iter().take(lambda - kernels.len()));
    }
    kernels.sort_unstable();
    kernels.into_iter().map(ElementId).collect()
}

/// Kernel-extension heuristic.
///
/// Stage 1 estimates the cluster count, stage 2 takes the spec's kernel
/// criteria, stage 3 selects kernels, and stage 4 repeatedly extends a
/// currently smallest team by the unassigned element with the highest total
/// compatibility to it (ties to the smallest element id, then the smallest
/// team index), skipping placements that would create a zero-compatibility
/// pair or overfill a team. Restricting growth to the smallest teams keeps
/// the cardinality index low by construction. The assembled solution is then
/// checked against the size bounds and the skill floor.
pub fn kernel_heuristic(
    inst: &Instance,
    cm: &CriteriaMatrix,
    cr: &CompatibilityRelation,
    spec: &TeamSpec,
) -> Result<KernelRun, TeamError> {
    spec.validate(cm)?;
    let n = inst.n();
    let lambda = cluster_count_estimate(n, spec.size_min, spec.size_max)?;
    let kernels = select_kernels(cm, spec, n, lambda);

    let mut teams: Vec<Vec<ElementId>> = kernels.iter().map(|&k| vec![k]).collect();
    let mut assigned = vec![false; n];
    for k in &kernels {
        assigned[k.0] = true;
    }
    let mut unassigned_left = n - lambda;

    while unassigned_left > 0 {
        let open: Vec<usize> = (0..lambda)
            .filter(|&t| teams[t].len() < spec.size_max)
            .collect();
        if open.is_empty() {
            return Err(TeamError::HeuristicInfeasible(
                "all teams are full but elements remain".into(),
            ));
        }
        let min_size = open.iter().map(|&t| teams[t].len()).min().unwrap();
        let smallest: Vec<usize> = open
            .iter()
            .copied()
            .filter(|&t| teams[t].len() == min_size)
            .collect();

        let pick = best_placement(cr, &teams, &assigned, &smallest, spec.forbid_zero_pairs)
            .or_else(|| best_placement(cr, &teams, &assigned, &open, spec.forbid_zero_pairs));
        match pick {
            Some((element, team)) => {
                teams[team].push(element);
                assigned[element.0] = true;
                unassigned_left -= 1;
            }
            None => {
                return Err(TeamError::HeuristicInfeasible(
                    "no compatible placement for the remaining elements".into(),
                ))
            }
        }
    }

    for (t, team) in teams.iter().enumerate() {
        if team.len() < spec.size_min {
            return Err(TeamError::HeuristicInfeasible(format!(
                "team {} ended below the minimum size {}",
                t + 1,
                spec.size_min
            )));
        }
        let skill = team_skill(cm, team);
        if !skill_meets_floor(&skill, &spec.skill_floor) {
            return Err(TeamError::HeuristicInfeasible(format!(
                "team {} misses the skill floor",
                t + 1
            )));
        }
    }

    let mut assign = vec![0usize; n];
    for (t, team) in teams.iter().enumerate() {
        for &member in team {
            assign[member.0] = t;
        }
    }
    Ok(KernelRun {
        solution: ClusteringSolution::from_assignment(&assign),
        kernels,
        lambda,
    })
}

/// Highest-compatibility placement of an unassigned element into one of the
/// eligible teams; ties prefer the smallest element id, then the smallest
/// team index.
fn best_placement(
    cr: &CompatibilityRelation,
    teams: &[Vec<ElementId>],
    assigned: &[bool],
    eligible: &[usize],
    forbid_zero_pairs: bool,
) -> Option<(ElementId, usize)> {
    let mut best: Option<(u32, ElementId, usize)> = None;
    for element in (0..assigned.len()).filter(|&e| !assigned[e]).map(ElementId) {
        for &team in eligible {
            if forbid_zero_pairs && teams[team].iter().any(|&m| cr.grade(element, m) == 0) {
                continue;
            }
            let compat: u32 = teams[team]
                .iter()
                .map(|&m| u32::from(cr.grade(element, m)))
                .sum();
            if best.is_none_or(|(c, _, _)| compat > c) {
                best = Some((compat, element, team));
            }
        }
    }
    best.map(|(_, element, team)| (element, team))
}

/// Per-team evaluation of a solution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeamSummary {
    pub members: Vec<usize>,
    pub size: usize,
    pub skill: Vec<u8>,
    pub compat: u32,
    pub skill_ok: bool,
    pub size_ok: bool,
    pub zero_pair_free: bool,
}

/// Solution-level team report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TeamReport {
    pub teams: Vec<TeamSummary>,
    /// Cardinality balance: max team size minus min team size.
    pub card_diff: u64,
    /// Compatibility balance: max team compat minus min team compat.
    pub compat_diff: u64,
    pub min_compat: u32,
    pub feasible: bool,
}

/// Evaluates a solution's teams against a spec: per-team skill vector and
/// compatibility total, cardinality and compatibility balance, feasibility.
pub fn evaluate_teams(
    cm: &CriteriaMatrix,
    cr: &CompatibilityRelation,
    sol: &ClusteringSolution,
    spec: &TeamSpec,
) -> TeamReport {
    let mut teams = Vec::with_capacity(sol.lambda());
    for cluster in sol.clusters() {
        let skill = team_skill(cm, cluster);
        let compat = team_compat(cr, cluster);
        let zero_pair_free = cluster.iter().enumerate().all(|(i, &a)| {
            cluster[i + 1..].iter().all(|&b| cr.grade(a, b) > 0)
        });
        teams.push(TeamSummary {
            members: cluster.iter().map(|id| id.external()).collect(),
            size: cluster.len(),
            skill_ok: skill_meets_floor(&skill, &spec.skill_floor),
            size_ok: (spec.size_min..=spec.size_max).contains(&cluster.len()),
            skill,
            compat,
            zero_pair_free,
        });
    }
    let sizes: Vec<usize> = teams.iter().map(|t| t.size).collect();
    let compats: Vec<u32> = teams.iter().map(|t| t.compat).collect();
    let card_diff =
        (sizes.iter().max().unwrap_or(&0) - sizes.iter().min().unwrap_or(&0)) as u64;
    let compat_diff =
        u64::from(compats.iter().max().unwrap_or(&0) - compats.iter().min().unwrap_or(&0));
    let feasible = teams.iter().all(|t| {
        t.skill_ok && t.size_ok && (!spec.forbid_zero_pairs || t.zero_pair_free)
    });
    TeamReport {
        card_diff,
        compat_diff,
        min_compat: compats.iter().copied().min().unwrap_or(0),
        feasible,
        teams,
    }
}

fn team_engine_spec(
    spec: &TeamSpec,
    criteria_count: usize,
    include_skill_objectives: bool,
) -> EngineSpec {
    let mut terms = vec![EngineTerm {
        source: Source::Size,
        agg: Aggregate::Diff,
        maximize: false,
    }];
    if include_skill_objectives {
        for c in 0..criteria_count {
            terms.push(EngineTerm {
                source: Source::Skill(c),
                agg: Aggregate::Min,
                maximize: true,
            });
        }
    }
    terms.push(EngineTerm {
        source: Source::Compat,
        agg: Aggregate::Min,
        maximize: true,
    });
    EngineSpec {
        terms,
        bounds: Vec::<EngineBound>::new(),
        reference: None,
        skill_floor: Some(spec.skill_floor.clone()),
        forbid_zero_pairs: spec.forbid_zero_pairs,
    }
}

fn team_bounds(n: usize, spec: &TeamSpec) -> PartitionBounds {
    PartitionBounds::new(n, 1..=n, spec.size_min..=spec.size_max)
}

/// Pareto front over team objectives: minimize the cardinality balance,
/// maximize the worst team compatibility, and optionally Pareto-maximize
/// each component of the worst team skill vector. Objective vectors are
/// reported in that order.
pub fn team_pareto(
    inst: &Instance,
    cm: &CriteriaMatrix,
    cr: &CompatibilityRelation,
    spec: &TeamSpec,
    include_skill_objectives: bool,
    opts: &SolveOptions,
) -> Result<(Vec<ParetoPoint>, SolveStats), SolveError> {
    let _ = cr; // the engine reads the compatibility block off the instance
    let bounds = team_bounds(inst.n(), spec);
    guard_cap(bounds, opts.cap)?;
    let espec = team_engine_spec(spec, cm.criteria_count(), include_skill_objectives);
    let eval = Evaluator::new(inst, espec).map_err(|e| match e {
        crate::optimize::EngineError::MissingCompatibility => {
            SolveError::Spec(crate::optimize::SpecError::MissingCompatibility)
        }
        crate::optimize::EngineError::MissingCriteria => {
            SolveError::Spec(crate::optimize::SpecError::MissingCriteria)
        }
        crate::optimize::EngineError::MissingReference => {
            SolveError::Spec(crate::optimize::SpecError::MissingReference)
        }
    })?;
    Ok(engine_pareto_run(bounds, &eval, opts.workers.max(1)))
}

/// Best team solution under the lexicographic order (cardinality balance
/// ascending, then worst team compatibility descending); `None` when no
/// feasible solution exists.
pub fn team_exact(
    inst: &Instance,
    cm: &CriteriaMatrix,
    cr: &CompatibilityRelation,
    spec: &TeamSpec,
    opts: &SolveOptions,
) -> Result<(Option<ParetoPoint>, SolveStats), SolveError> {
    let (front, stats) = team_pareto(inst, cm, cr, spec, false, opts)?;
    // The front is sorted by normalized vector, so its first point is the
    // lexicographic optimum.
    Ok((front.into_iter().next(), stats))
}
