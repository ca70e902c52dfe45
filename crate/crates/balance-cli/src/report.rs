//! Run reports: JSON-serializable structures and text renderings.
//!
//! Text tables mirror the cluster-parameter and index tables of the source
//! data to ease visual diffing. The JSON form is byte-identical across
//! identical invocations; timing therefore goes to stderr, never into a
//! report.

use balance_core::{
    ClusteringSolution, ClusterSummary, IndexReport, Instance, ParetoPoint, SolveStats,
    TeamReport,
};
use serde::Serialize;

#[derive(Serialize)]
pub struct InstanceMeta {
    pub path: String,
    pub digest: String,
    pub n: usize,
    pub type_count: usize,
}

impl InstanceMeta {
    pub fn new(path: &str, bytes: &[u8], inst: &Instance) -> Self {
        use sha2::{Digest, Sha256};
        let mut hasher = Sha256::new();
        hasher.update(bytes);
        let digest = hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect::<String>();
        InstanceMeta {
            path: path.to_string(),
            digest: format!("sha256:{digest}"),
            n: inst.n(),
            type_count: inst.type_count(),
        }
    }
}

/// Compact, trailing-zero-free rendering for table cells.
pub fn num(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

fn pad(s: &str, width: usize) -> String {
    format!("{s:<width$}")
}

fn render_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(String::len).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let line = |cells: &[String], widths: &[usize]| -> String {
        cells
            .iter()
            .zip(widths)
            .map(|(c, &w)| pad(c, w))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    out.push_str(&line(header, &widths));
    out.push('\n');
    for row in rows {
        out.push_str(&line(row, &widths));
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
pub struct ClusterRow {
    pub name: String,
    pub members: Vec<usize>,
    pub size: usize,
    pub weight: f64,
    pub intra_edge_weight: f64,
    pub estimate: Vec<u32>,
}

#[derive(Serialize)]
pub struct EvaluateReport {
    pub instance: InstanceMeta,
    pub solution: String,
    pub clusters: Vec<ClusterRow>,
    pub proximity: Vec<Vec<u32>>,
    pub indices: IndexReport,
    pub notes: Vec<String>,
}

impl EvaluateReport {
    pub fn build(
        meta: InstanceMeta,
        name: &str,
        summaries: Vec<ClusterSummary>,
        sol: &ClusteringSolution,
        proximity: Vec<Vec<u32>>,
        indices: IndexReport,
        inst: &Instance,
    ) -> Self {
        let clusters: Vec<ClusterRow> = summaries
            .into_iter()
            .enumerate()
            .map(|(i, s)| ClusterRow {
                name: format!("X{}", i + 1),
                members: sol.cluster(i).iter().map(|id| id.external()).collect(),
                size: s.size,
                weight: s.total_weight,
                intra_edge_weight: s.intra_edge_weight,
                estimate: s.estimate.counts().to_vec(),
            })
            .collect();
        let notes = errata_notes(inst, name, &clusters, &proximity, &indices);
        EvaluateReport {
            instance: meta,
            solution: name.to_string(),
            clusters,
            proximity,
            indices,
            notes,
        }
    }

    pub fn text(&self) -> String {
        let mut out = format!(
            "instance {}  n={} types={}\ndigest {}\nsolution {} ({} clusters)\n\n",
            self.instance.path,
            self.instance.n,
            self.instance.type_count,
            self.instance.digest,
            self.solution,
            self.clusters.len()
        );
        let header = ["cluster", "members", "size", "weight", "intra_edge", "estimate"]
            .map(String::from)
            .to_vec();
        let rows: Vec<Vec<String>> = self
            .clusters
            .iter()
            .map(|c| {
                vec![
                    c.name.clone(),
                    c.members
                        .iter()
                        .map(usize::to_string)
                        .collect::<Vec<_>>()
                        .join(","),
                    c.size.to_string(),
                    num(c.weight),
                    num(c.intra_edge_weight),
                    estimate_str(&c.estimate),
                ]
            })
            .collect();
        out.push_str(&render_table(&header, &rows));

        out.push_str("\nproximity between cluster structures\n");
        let header: Vec<String> = std::iter::once(String::new())
            .chain((1..=self.clusters.len()).map(|i| format!("X{i}")))
            .collect();
        let rows: Vec<Vec<String>> = self
            .proximity
            .iter()
            .enumerate()
            .map(|(i, row)| {
                std::iter::once(format!("X{}", i + 1))
                    .chain(row.iter().map(u32::to_string))
                    .collect()
            })
            .collect();
        out.push_str(&render_table(&header, &rows));

        out.push_str("\nindex   diff");
        if self.indices.by_ref.is_some() {
            out.push_str("  ref");
        }
        out.push('\n');
        let diff = &self.indices.diff;
        let by_ref = self.indices.by_ref.as_ref();
        let lines = [
            ("card", diff.card.to_string(), by_ref.map(|r| num(r.card))),
            ("weight", num(diff.weight), by_ref.map(|r| num(r.weight))),
            ("edge", num(diff.edge), by_ref.map(|r| num(r.edge))),
            (
                "struct",
                diff.structure.to_string(),
                by_ref.map(|r| r.structure.to_string()),
            ),
        ];
        for (name, d, r) in lines {
            out.push_str(&pad(name, 7));
            out.push(' ');
            match r {
                Some(r) => out.push_str(&format!("{}  {}\n", pad(&d, 4), r)),
                None => out.push_str(&format!("{d}\n")),
            }
        }
        for note in &self.notes {
            out.push_str(&format!("\nnote: {note}"));
        }
        if !self.notes.is_empty() {
            out.push('\n');
        }
        out
    }
}

fn estimate_str(counts: &[u32]) -> String {
    format!(
        "({})",
        counts
            .iter()
            .map(u32::to_string)
            .collect::<Vec<_>>()
            .join(",")
    )
}

/// Emits a note for every fixture erratum whose published value differs
/// from the computed one.
fn errata_notes(
    inst: &Instance,
    solution: &str,
    clusters: &[ClusterRow],
    proximity: &[Vec<u32>],
    indices: &IndexReport,
) -> Vec<String> {
    let mut notes = Vec::new();
    for e in inst.errata_for(solution) {
        let (computed, location): (Option<f64>, String) = match e.field.as_str() {
            "intra_edge_weight" => match e.cluster {
                Some(c) if c >= 1 && c <= clusters.len() => (
                    Some(clusters[c - 1].intra_edge_weight),
                    format!(" of X{c}"),
                ),
                _ => (None, String::new()),
            },
            "weight" => match e.cluster {
                Some(c) if c >= 1 && c <= clusters.len() => {
                    (Some(clusters[c - 1].weight), format!(" of X{c}"))
                }
                _ => (None, String::new()),
            },
            "edge_diff" => (Some(indices.diff.edge), String::new()),
            "weight_diff" => (Some(indices.diff.weight), String::new()),
            "edge_ref" => (
                indices.by_ref.as_ref().map(|r| r.edge),
                String::new(),
            ),
            "weight_ref" => (
                indices.by_ref.as_ref().map(|r| r.weight),
                String::new(),
            ),
            "proximity" => match e.pair {
                Some((a, b)) if a >= 1 && b >= 1 && a <= proximity.len() && b <= proximity.len() => {
                    (
                        Some(f64::from(proximity[a - 1][b - 1])),
                        format!(" of (X{a},X{b})"),
                    )
                }
                _ => (None, String::new()),
            },
            _ => (None, String::new()),
        };
        if let Some(value) = computed {
            if (value - e.printed).abs() > 1e-9 {
                notes.push(format!(
                    "{}{} computed {}; published table prints {}",
                    e.field,
                    location,
                    num(value),
                    num(e.printed)
                ));
            }
        }
    }
    notes
}

#[derive(Serialize)]
pub struct SolveReport {
    pub instance: InstanceMeta,
    pub objective: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<Vec<Vec<usize>>>,
    pub stats: SolveStats,
}

impl SolveReport {
    pub fn text(&self) -> String {
        let mut out = format!(
            "instance {}\ndigest {}\nobjective {}\nstatus {}\n",
            self.instance.path, self.instance.digest, self.objective, self.status
        );
        if let Some(v) = self.value {
            out.push_str(&format!("value {}\n", num(v)));
        }
        if let Some(sol) = &self.solution {
            out.push_str(&format!("clusters {}\n", clusters_str(sol)));
        }
        out.push_str(&format!(
            "enumerated {} partitions, {} feasible\n",
            self.stats.enumerated, self.stats.feasible
        ));
        out
    }
}

pub fn clusters_str(clusters: &[Vec<usize>]) -> String {
    clusters
        .iter()
        .map(|c| {
            format!(
                "{{{}}}",
                c.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
            )
        })
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Serialize)]
pub struct FrontPoint {
    pub objectives: Vec<f64>,
    pub solution: Vec<Vec<usize>>,
}

#[derive(Serialize)]
pub struct ParetoReport {
    pub instance: InstanceMeta,
    pub objectives: Vec<String>,
    pub status: String,
    pub front: Vec<FrontPoint>,
    pub stats: SolveStats,
}

impl ParetoReport {
    pub fn build(
        instance: InstanceMeta,
        objectives: Vec<String>,
        front: Vec<ParetoPoint>,
        stats: SolveStats,
    ) -> Self {
        let status = if front.is_empty() {
            "infeasible"
        } else {
            "optimal"
        };
        ParetoReport {
            instance,
            objectives,
            status: status.to_string(),
            front: front
                .into_iter()
                .map(|p| FrontPoint {
                    objectives: p.objectives,
                    solution: p.solution.to_external(),
                })
                .collect(),
            stats,
        }
    }

    pub fn text(&self) -> String {
        let mut out = format!(
            "instance {}\ndigest {}\nobjectives {}\nstatus {}\nfront size {}\n",
            self.instance.path,
            self.instance.digest,
            self.objectives.join(", "),
            self.status,
            self.front.len()
        );
        for (i, p) in self.front.iter().enumerate() {
            out.push_str(&format!(
                "point {}: ({})  {}\n",
                i + 1,
                p.objectives
                    .iter()
                    .map(|&v| num(v))
                    .collect::<Vec<_>>()
                    .join(", "),
                clusters_str(&p.solution)
            ));
        }
        out.push_str(&format!(
            "enumerated {} partitions, {} feasible\n",
            self.stats.enumerated, self.stats.feasible
        ));
        out
    }
}

#[derive(Serialize)]
pub struct TeamRunReport {
    pub instance: InstanceMeta,
    pub mode: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernels: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<TeamReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solution: Option<Vec<Vec<usize>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub front: Option<Vec<FrontPoint>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stats: Option<SolveStats>,
}

impl TeamRunReport {
    pub fn text(&self) -> String {
        let mut out = format!(
            "instance {}\ndigest {}\nmode {}\nstatus {}\n",
            self.instance.path, self.instance.digest, self.mode, self.status
        );
        if let Some(kernels) = &self.kernels {
            out.push_str(&format!(
                "kernels {}\n",
                kernels
                    .iter()
                    .map(usize::to_string)
                    .collect::<Vec<_>>()
                    .join(",")
            ));
        }
        if let Some(report) = &self.report {
            let header = ["team", "members", "size", "skill", "compat"]
                .map(String::from)
                .to_vec();
            let rows: Vec<Vec<String>> = report
                .teams
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    vec![
                        format!("X{}", i + 1),
                        t.members
                            .iter()
                            .map(usize::to_string)
                            .collect::<Vec<_>>()
                            .join(","),
                        t.size.to_string(),
                        format!(
                            "({})",
                            t.skill
                                .iter()
                                .map(u8::to_string)
                                .collect::<Vec<_>>()
                                .join(",")
                        ),
                        t.compat.to_string(),
                    ]
                })
                .collect();
            out.push('\n');
            out.push_str(&render_table(&header, &rows));
            out.push_str(&format!(
                "\ncard_diff {}  compat_diff {}  min_compat {}\nfeasible {}\n",
                report.card_diff, report.compat_diff, report.min_compat, report.feasible
            ));
        }
        if let Some(front) = &self.front {
            out.push_str(&format!("front size {}\n", front.len()));
            for (i, p) in front.iter().enumerate() {
                out.push_str(&format!(
                    "point {}: ({})  {}\n",
                    i + 1,
                    p.objectives
                        .iter()
                        .map(|&v| num(v))
                        .collect::<Vec<_>>()
                        .join(", "),
                    clusters_str(&p.solution)
                ));
            }
        }
        if let Some(stats) = &self.stats {
            out.push_str(&format!(
                "enumerated {} partitions, {} feasible\n",
                stats.enumerated, stats.feasible
            ));
        }
        out
    }
}
