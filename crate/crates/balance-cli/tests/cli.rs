//! End-to-end tests of the `balclust` binary: report contents, exit codes,
//! and byte-identical output across worker counts.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "fixtures", name]
        .iter()
        .collect();
    path.display().to_string()
}

fn balclust(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_balclust"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 output")
}

#[test]
fn evaluate_reports_reference_indices() {
    let out = balclust(&[
        "evaluate",
        &fixture("fig10.json"),
        "--solution",
        "xprime",
        "--reference",
        &fixture("ref_xprime.json"),
        "--json",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["indices"]["diff"]["card"], 1);
    assert!((report["indices"]["ref"]["weight"].as_f64().unwrap() - 4.7).abs() < 1e-9);
    assert!((report["indices"]["ref"]["edge"].as_f64().unwrap() - 7.3).abs() < 1e-9);
    assert_eq!(report["indices"]["ref"]["struct"], 2);
    // errata notes fire for the known divergent cells
    let notes = report["notes"].as_array().unwrap();
    assert!(notes.iter().any(|n| n.as_str().unwrap().contains("15.4")));
}

#[test]
fn evaluate_covers_the_seven_cluster_example() {
    let out = balclust(&[
        "evaluate",
        &fixture("fig4.json"),
        "--solution",
        "fig4",
        "--reference",
        &fixture("ref_fig4.json"),
        "--json",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["indices"]["diff"]["card"], 3);
    assert_eq!(report["indices"]["diff"]["struct"], 5);
    assert_eq!(report["indices"]["ref"]["card"], 2.0);
    assert_eq!(report["indices"]["ref"]["struct"], 4);
}

#[test]
fn evaluate_is_deterministic() {
    let args = [
        "evaluate",
        &fixture("fig10.json"),
        "--solution",
        "xdprime",
        "--json",
    ];
    let a = balclust(&args);
    let b = balclust(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    // the JSON form survives a parse/serialize round trip
    let value: serde_json::Value = serde_json::from_str(&stdout(&a)).unwrap();
    let again: serde_json::Value =
        serde_json::from_str(&serde_json::to_string(&value).unwrap()).unwrap();
    assert_eq!(value, again);
}

#[test]
fn evaluate_unknown_solution_fails() {
    let out = balclust(&[
        "evaluate",
        &fixture("fig10.json"),
        "--solution",
        "nosuch",
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("unknown solution"));
}

#[test]
fn missing_file_fails() {
    let out = balclust(&["evaluate", "no_such_file.json", "--solution", "x"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn lattice_dot_has_the_full_scale() {
    let out = balclust(&["lattice", "--types", "4", "--size", "4", "--format", "dot"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.matches("label=").count(), 35);
    assert!(text.contains("(4,0,0,0)"));
    assert!(text.contains("(0,0,0,4)"));

    let json = balclust(&["lattice", "--types", "4", "--size", "4", "--json"]);
    let report: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(report["nodes"].as_array().unwrap().len(), 35);
}

#[test]
fn team_heuristic_finds_the_kernels() {
    let out = balclust(&[
        "team",
        &fixture("students.json"),
        "--spec",
        &fixture("team_spec.json"),
        "--heuristic",
        "--json",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["kernels"], serde_json::json!([1, 3, 6, 9]));
    assert_eq!(report["report"]["card_diff"], 1);
    assert!(report["report"]["min_compat"].as_u64().unwrap() >= 8);
    assert_eq!(report["report"]["feasible"], true);
}

#[test]
fn worker_count_leaves_json_byte_identical() {
    let base = [
        "team",
        &fixture("students.json"),
        "--spec",
        &fixture("team_spec.json"),
        "--pareto",
        "--json",
    ];
    let mut one = base.to_vec();
    one.extend(["--workers", "1"]);
    let mut four = base.to_vec();
    four.extend(["--workers", "4"]);
    let a = balclust(&one);
    let b = balclust(&four);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn solve_worker_count_leaves_json_byte_identical() {
    let base = [
        "solve",
        &fixture("fig10.json"),
        &fixture("problem2.json"),
        "--json",
    ];
    let mut one = base.to_vec();
    one.extend(["--workers", "1"]);
    let mut four = base.to_vec();
    four.extend(["--workers", "4"]);
    let a = balclust(&one);
    let b = balclust(&four);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn infeasible_solve_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("spec.json");
    let mut f = std::fs::File::create(&spec_path).unwrap();
    // two equal-size clusters of 15 elements are impossible
    write!(
        f,
        r#"{{"objectives": [{{"index": "weight", "method": "diff", "direction": "min"}}],
            "constraints": [{{"index": "card", "method": "diff", "max": 0}}],
            "lambda": 2}}"#
    )
    .unwrap();
    let out = balclust(&[
        "solve",
        &fixture("fig10.json"),
        spec_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("status infeasible"));
}

#[test]
fn cap_exceeded_exits_3() {
    let out = balclust(&[
        "solve",
        &fixture("fig10.json"),
        &fixture("problem2.json"),
        "--cap",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn pareto_subcommand_reports_a_front() {
    let out = balclust(&[
        "pareto",
        &fixture("fig10.json"),
        &fixture("problem4.json"),
        "--json",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["status"], "optimal");
    assert!(!report["front"].as_array().unwrap().is_empty());
}

#[test]
fn team_exact_matches_heuristic_quality() {
    let out = balclust(&[
        "team",
        &fixture("students.json"),
        "--spec",
        &fixture("team_spec.json"),
        "--exact",
        "--json",
    ]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["status"], "optimal");
    assert_eq!(report["report"]["card_diff"], 1);
    assert!(report["report"]["min_compat"].as_u64().unwrap() >= 8);
}

#[test]
fn text_report_carries_every_numeric_field_of_the_json_report() {
    let args = [
        "evaluate",
        &fixture("fig10.json"),
        "--solution",
        "xprime",
        "--reference",
        &fixture("ref_xprime.json"),
    ];
    let mut json_args = args.to_vec();
    json_args.push("--json");
    let text = stdout(&balclust(&args));
    let report: serde_json::Value = serde_json::from_str(&stdout(&balclust(&json_args))).unwrap();
    // the text renderer trims floats to at most six decimals
    let trimmed = |v: f64| -> String {
        let s = format!("{v:.6}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    };
    for key in ["card", "weight", "edge", "struct"] {
        for half in ["diff", "ref"] {
            let v = report["indices"][half][key].as_f64().unwrap();
            let rendered = trimmed(v);
            assert!(
                text.contains(&rendered),
                "text report misses {half}.{key}={rendered}\n{text}"
            );
        }
    }
}
