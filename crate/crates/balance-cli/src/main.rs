//! `balclust`: balance indices and solvers for clustering solutions.
//!
//! Subcommands: `evaluate` (index report for a named solution), `solve`
//! (exact single-objective search), `pareto` (multi-objective front), `team`
//! (team formation: heuristic, exact, or Pareto), and `lattice` (the scale
//! of structure estimates as DOT/text).
//!
//! Exit codes: 0 success, 1 input error, 2 infeasible, 3 enumeration cap
//! exceeded.

mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use balance_core::{
    enumerate_scale, index_report, kernel_heuristic, parse_instance, proximity_matrix, scale_dot,
    solve_exact, solve_pareto, summarize_clusters, team_exact, team_pareto, CompatibilityRelation,
    CriteriaMatrix, ExactOutcome, Instance, ProblemSpec, ReferenceParams, SolveError,
    SolveOptions, TeamError, TeamSpec, DEFAULT_ENUMERATION_CAP,
};

use report::{
    EvaluateReport, FrontPoint, InstanceMeta, ParetoReport, SolveReport, TeamRunReport,
};

#[derive(Parser)]
#[command(
    name = "balclust",
    version,
    about = "Balance indices and solvers for clustering solutions"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Emit the report as JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Worker threads for enumeration; the output is identical for any
    /// worker count.
    #[arg(long, global = true, default_value_t = 1)]
    workers: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a named solution of an instance document.
    Evaluate {
        instance: PathBuf,
        /// Name of a solution from the document's solutions block.
        #[arg(long)]
        solution: String,
        /// Reference parameters file enabling the reference-deviation
        /// indices.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// Solve a single-objective problem exactly by enumeration.
    Solve {
        instance: PathBuf,
        spec: PathBuf,
        /// Reference parameters file (overrides the spec's reference).
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Enumeration guard override.
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Enumerate the Pareto front of a multi-objective problem.
    Pareto {
        instance: PathBuf,
        spec: PathBuf,
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Form teams over a compatibility relation.
    Team {
        instance: PathBuf,
        /// Team spec file (sizes, skill floor, kernel criteria).
        #[arg(long)]
        spec: PathBuf,
        /// Run the kernel-extension heuristic.
        #[arg(long, conflicts_with_all = ["exact", "pareto"])]
        heuristic: bool,
        /// Exact lexicographic solve (cardinality balance, then worst
        /// compatibility).
        #[arg(long, conflicts_with = "pareto")]
        exact: bool,
        /// Pareto front over the team objectives.
        #[arg(long)]
        pareto: bool,
        /// Include the worst-team skill vector among the Pareto objectives.
        #[arg(long)]
        skill_objective: bool,
        #[arg(long)]
        cap: Option<u64>,
    },
    /// Emit the scale of estimates with `types` components summing to
    /// `size`.
    Lattice {
        #[arg(long)]
        types: usize,
        #[arg(long)]
        size: u32,
        /// Output format: dot or text.
        #[arg(long, default_value = "dot")]
        format: String,
    },
}

enum CliError {
    Input(String),
    Infeasible(String),
    CapExceeded(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Input(_) => 1,
            CliError::Infeasible(_) => 2,
            CliError::CapExceeded(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Infeasible(m) | CliError::CapExceeded(m) => m,
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

fn solve_err(e: SolveError) -> CliError {
    match e {
        SolveError::CapExceeded { .. } => CliError::CapExceeded(e.to_string()),
        other => CliError::Input(other.to_string()),
    }
}

struct Output {
    text: String,
    code: u8,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{}", out.text);
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<(Instance, InstanceMeta), CliError> {
    let text = read_file(path)?;
    let inst = parse_instance(&text).map_err(input_err)?;
    let meta = InstanceMeta::new(&path.display().to_string(), text.as_bytes(), &inst);
    Ok((inst, meta))
}

fn load_reference(path: &Option<PathBuf>) -> Result<Option<ReferenceParams>, CliError> {
    match path {
        None => Ok(None),
        Some(p) => {
            let text = read_file(p)?;
            Ok(Some(ReferenceParams::from_json(&text).map_err(input_err)?))
        }
    }
}

fn render<T: serde::Serialize>(json: bool, value: &T, text: String) -> String {
    if json {
        let mut s = serde_json::to_string_pretty(value).expect("report serializes");
        s.push('\n');
        s
    } else {
        text
    }
}

fn run(cli: Cli) -> Result<Output, CliError> {
    let workers = cli.workers.max(1);
    match cli.command {
        Command::Evaluate {
            instance,
            solution,
            reference,
        } => {
            let (inst, meta) = load_instance(&instance)?;
            let sol = inst
                .solution(&solution)
                .ok_or_else(|| {
                    CliError::Input(format!(
                        "unknown solution '{solution}'; available: {}",
                        inst.solution_names().collect::<Vec<_>>().join(", ")
                    ))
                })?
                .clone();
            let reference = load_reference(&reference)?;
            let indices = index_report(&inst, &sol, reference.as_ref()).map_err(input_err)?;
            let summaries = summarize_clusters(&inst, &sol);
            let proximity = proximity_matrix(&inst, &sol);
            let report =
                EvaluateReport::build(meta, &solution, summaries, &sol, proximity, indices, &inst);
            let text = report.text();
            Ok(Output {
                text: render(cli.json, &report, text),
                code: 0,
            })
        }

        Command::Solve {
            instance,
            spec,
            reference,
            cap,
        } => {
            let (inst, meta) = load_instance(&instance)?;
            let mut spec = ProblemSpec::from_json(&read_file(&spec)?).map_err(input_err)?;
            if let Some(r) = load_reference(&reference)? {
                spec.reference = Some(r);
            }
            let opts = SolveOptions {
                cap: cap.unwrap_or(DEFAULT_ENUMERATION_CAP),
                workers,
            };
            let started = Instant::now();
            let (outcome, stats) = solve_exact(&inst, &spec, &opts).map_err(solve_err)?;
            eprintln!("solved in {:.3}s", started.elapsed().as_secs_f64());
            let objective = spec.objectives[0].to_string();
            let (report, code) = match outcome {
                ExactOutcome::Optimal { solution, value } => (
                    SolveReport {
                        instance: meta,
                        objective,
                        status: "optimal".into(),
                        value: Some(value),
                        solution: Some(solution.to_external()),
                        stats,
                    },
                    0,
                ),
                ExactOutcome::Infeasible => (
                    SolveReport {
                        instance: meta,
                        objective,
                        status: "infeasible".into(),
                        value: None,
                        solution: None,
                        stats,
                    },
                    2,
                ),
            };
            let text = report.text();
            Ok(Output {
                text: render(cli.json, &report, text),
                code,
            })
        }

        Command::Pareto {
            instance,
            spec,
            reference,
            cap,
        } => {
            let (inst, meta) = load_instance(&instance)?;
            let mut spec = ProblemSpec::from_json(&read_file(&spec)?).map_err(input_err)?;
            if let Some(r) = load_reference(&reference)? {
                spec.reference = Some(r);
            }
            let opts = SolveOptions {
                cap: cap.unwrap_or(DEFAULT_ENUMERATION_CAP),
                workers,
            };
            let started = Instant::now();
            let (front, stats) = solve_pareto(&inst, &spec, &opts).map_err(solve_err)?;
            eprintln!("solved in {:.3}s", started.elapsed().as_secs_f64());
            let objectives = spec.objectives.iter().map(|t| t.to_string()).collect();
            let code = if front.is_empty() { 2 } else { 0 };
            let report = ParetoReport::build(meta, objectives, front, stats);
            let text = report.text();
            Ok(Output {
                text: render(cli.json, &report, text),
                code,
            })
        }

        Command::Team {
            instance,
            spec,
            heuristic,
            exact,
            pareto,
            skill_objective,
            cap,
        } => {
            let (inst, meta) = load_instance(&instance)?;
            let spec = TeamSpec::from_json(&read_file(&spec)?).map_err(input_err)?;
            let cm = CriteriaMatrix::from_instance(&inst).map_err(input_err)?;
            let cr = CompatibilityRelation::from_instance(&inst).map_err(input_err)?;
            spec.validate(&cm).map_err(input_err)?;
            let opts = SolveOptions {
                cap: cap.unwrap_or(DEFAULT_ENUMERATION_CAP),
                workers,
            };
            if !(heuristic || exact || pareto) {
                return Err(CliError::Input(
                    "choose one of --heuristic, --exact, --pareto".into(),
                ));
            }

            let (report, code) = if heuristic {
                match kernel_heuristic(&inst, &cm, &cr, &spec) {
                    Ok(run) => {
                        let team_report =
                            balance_core::evaluate_teams(&cm, &cr, &run.solution, &spec);
                        let feasible = team_report.feasible;
                        (
                            TeamRunReport {
                                instance: meta,
                                mode: "heuristic".into(),
                                status: if feasible { "feasible" } else { "infeasible" }.into(),
                                kernels: Some(
                                    run.kernels.iter().map(|k| k.external()).collect(),
                                ),
                                report: Some(team_report),
                                solution: Some(run.solution.to_external()),
                                front: None,
                                stats: None,
                            },
                            if feasible { 0 } else { 2 },
                        )
                    }
                    Err(TeamError::HeuristicInfeasible(reason)) => {
                        return Err(CliError::Infeasible(format!(
                            "heuristic found no feasible assignment: {reason}"
                        )))
                    }
                    Err(e) => return Err(input_err(e)),
                }
            } else if exact {
                let started = Instant::now();
                let (best, stats) =
                    team_exact(&inst, &cm, &cr, &spec, &opts).map_err(solve_err)?;
                eprintln!("solved in {:.3}s", started.elapsed().as_secs_f64());
                match best {
                    Some(point) => {
                        let team_report =
                            balance_core::evaluate_teams(&cm, &cr, &point.solution, &spec);
                        (
                            TeamRunReport {
                                instance: meta,
                                mode: "exact".into(),
                                status: "optimal".into(),
                                kernels: None,
                                report: Some(team_report),
                                solution: Some(point.solution.to_external()),
                                front: None,
                                stats: Some(stats),
                            },
                            0,
                        )
                    }
                    None => (
                        TeamRunReport {
                            instance: meta,
                            mode: "exact".into(),
                            status: "infeasible".into(),
                            kernels: None,
                            report: None,
                            solution: None,
                            front: None,
                            stats: Some(stats),
                        },
                        2,
                    ),
                }
            } else {
                let started = Instant::now();
                let (front, stats) =
                    team_pareto(&inst, &cm, &cr, &spec, skill_objective, &opts)
                        .map_err(solve_err)?;
                eprintln!("solved in {:.3}s", started.elapsed().as_secs_f64());
                let code = if front.is_empty() { 2 } else { 0 };
                (
                    TeamRunReport {
                        instance: meta,
                        mode: "pareto".into(),
                        status: if code == 0 { "optimal" } else { "infeasible" }.into(),
                        kernels: None,
                        report: None,
                        solution: None,
                        front: Some(
                            front
                                .into_iter()
                                .map(|p| FrontPoint {
                                    objectives: p.objectives,
                                    solution: p.solution.to_external(),
                                })
                                .collect(),
                        ),
                        stats: Some(stats),
                    },
                    code,
                )
            };
            let text = report.text();
            Ok(Output {
                text: render(cli.json, &report, text),
                code,
            })
        }

        Command::Lattice {
            types,
            size,
            format,
        } => {
            if types < 1 {
                return Err(CliError::Input("--types must be at least 1".into()));
            }
            let nodes = enumerate_scale(types, size);
            let text = match format.as_str() {
                "dot" => scale_dot(&nodes),
                "text" => {
                    let mut out = format!("scale with {} estimates\n", nodes.len());
                    for (i, node) in nodes.iter().enumerate() {
                        out.push_str(&format!(
                            "{}: {} -> {}\n",
                            i,
                            node.estimate,
                            node.neighbors
                                .iter()
                                .map(usize::to_string)
                                .collect::<Vec<_>>()
                                .join(",")
                        ));
                    }
                    out
                }
                other => {
                    return Err(CliError::Input(format!(
                        "unknown format '{other}'; use dot or text"
                    )))
                }
            };
            if cli.json {
                #[derive(serde::Serialize)]
                struct LatticeReport {
                    nodes: Vec<Vec<u32>>,
                    edges: Vec<(usize, usize)>,
                }
                let mut edges = Vec::new();
                for (i, node) in nodes.iter().enumerate() {
                    for &j in &node.neighbors {
                        if i < j {
                            edges.push((i, j));
                        }
                    }
                }
                let report = LatticeReport {
                    nodes: nodes
                        .iter()
                        .map(|n| n.estimate.counts().to_vec())
                        .collect(),
                    edges,
                };
                let mut s = serde_json::to_string_pretty(&report).expect("serializes");
                s.push('\n');
                return Ok(Output { text: s, code: 0 });
            }
            Ok(Output { text, code: 0 })
        }
    }
}
