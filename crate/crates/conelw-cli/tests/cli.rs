//! End-to-end exit-code and output contract of the `conelw` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_conelw"))
}

fn instances_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn path_arg(p: &Path) -> String {
    p.to_str().unwrap().to_string()
}

#[test]
fn verify_passes_on_the_three_solution_instance() {
    let inst = instances_dir().join("three_solutions.json");
    let out = run(&["verify", &path_arg(&inst)]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let hyp = &report["hypotheses"];
    assert_eq!(hyp["f1_holds"], true);
    assert_eq!(hyp["f2_holds"], true);
    assert_eq!(hyp["f3_holds"], true);
    assert_eq!(report["command"], "verify");
    assert!(report["timings_ms"].is_null());
}

#[test]
fn verify_exits_one_on_inadmissible_lambda() {
    // shrinking lambda to 1.2 pushes the admissibility margin to
    // 1.2 - 1.25 = -0.05 for the boundary-term instance
    let text = std::fs::read_to_string(instances_dir().join("boundary_term.json")).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inadmissible.json");
    std::fs::write(&inst, text.replace("\"lambda\": 2.0", "\"lambda\": 1.2")).unwrap();
    let out = run(&["verify", &path_arg(&inst)]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let notes = report["notes"].as_array().unwrap();
    assert!(
        notes.iter().any(|n| n.as_str().unwrap().contains("inadmissible")),
        "{notes:?}"
    );
}

#[test]
fn verify_exits_two_on_missing_file() {
    let out = run(&["verify", "no_such_file.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn verify_exits_two_on_malformed_json() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("broken.json");
    std::fs::write(&inst, "{ not json").unwrap();
    let out = run(&["verify", &path_arg(&inst)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_exits_two_on_out_of_range_flag() {
    let inst = instances_dir().join("three_solutions.json");
    let out = run(&["verify", &path_arg(&inst), "--grid", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("out of range"));
}

#[test]
fn solve_finds_three_solutions_and_writes_csvs() {
    let inst = instances_dir().join("three_solutions.json");
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("run.json");
    let out = run(&[
        "solve",
        &path_arg(&inst),
        "--scan-points",
        "129",
        "--out",
        &path_arg(&report_path),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(out.stdout.is_empty(), "report should go to --out only");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    assert_eq!(report["localization"]["theorem_satisfied"], true);
    let solutions = report["solutions"].as_array().unwrap();
    assert_eq!(solutions.len(), 3);
    for (k, sol) in solutions.iter().enumerate() {
        let csv = PathBuf::from(sol["csv"].as_str().unwrap());
        assert_eq!(
            csv.file_name().unwrap().to_str().unwrap(),
            format!("run_solution_{k}.csv")
        );
        let text = std::fs::read_to_string(&csv).unwrap();
        assert!(text.starts_with("t,y\n"));
    }
    // echoed settings reflect the override
    assert_eq!(report["instance"]["settings"]["scan_points"], 129);
}

#[test]
fn solve_exits_one_when_hypotheses_fail() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("zero.json");
    std::fs::write(
        &inst,
        r#"{ "p": "0", "f": ["0"], "lambda": 2.0,
             "thresholds": {"A": 1.0, "B": 2.0, "C": 8.0} }"#,
    )
    .unwrap();
    let out = run(&["solve", &path_arg(&inst)]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["hypotheses"]["f2_holds"], false);
    let notes = report["notes"].as_array().unwrap();
    assert!(notes
        .iter()
        .any(|n| n.as_str().unwrap().contains("solving skipped")));
}

#[test]
fn under_resolved_solve_notes_possible_missed_roots() {
    let inst = instances_dir().join("three_solutions.json");
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("coarse.json");
    let out = run(&[
        "solve",
        &path_arg(&inst),
        "--scan-points",
        "8",
        "--out",
        &path_arg(&report_path),
    ]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report_path).unwrap()).unwrap();
    let notes = report["notes"].as_array().unwrap();
    assert!(
        notes
            .iter()
            .any(|n| n.as_str().unwrap().contains("possible missed roots")),
        "{notes:?}"
    );
}

#[test]
fn solve_reports_are_deterministic_across_runs_and_thread_counts() {
    let inst = instances_dir().join("three_solutions.json");
    let dir = tempfile::tempdir().unwrap();
    let report_path = dir.path().join("det.json");
    let mut outputs = Vec::new();
    for threads in ["1", "2", "0"] {
        let out = bin()
            .args([
                "solve",
                &path_arg(&inst),
                "--scan-points",
                "129",
                "--out",
                &path_arg(&report_path),
            ])
            .env("CONELW_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        outputs.push(std::fs::read(&report_path).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn verify_report_with_timings_differs_only_in_timings() {
    let inst = instances_dir().join("exp_kernel.json");
    let out = run(&["verify", &path_arg(&inst), "--timings"]);
    // exp kernel instance fails F1/F2 by construction
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["timings_ms"]["hypotheses"].is_number());
    assert_eq!(report["hypotheses"]["f3_holds"], true);
}

#[test]
fn green_prints_invariants_and_writes_a_table() {
    let inst = instances_dir().join("exp_kernel.json");
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("kernel.csv");
    let out = run(&[
        "green",
        &path_arg(&inst),
        "--t",
        "9",
        "--s",
        "9",
        "--out",
        &path_arg(&table),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("invariants: pass"), "{stdout}");

    let text = std::fs::read_to_string(&table).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,s,G"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 81);
    // G(1, 0) = lambda * exp(P(1) - P(0)) / (lambda - e) = 2e for this
    // instance (p = 1, lambda = 2e)
    let last_t_first_s = rows
        .iter()
        .find(|r| r.starts_with("1.0000000000000000e0,0.0000000000000000e0"))
        .unwrap();
    let g: f64 = last_t_first_s.split(',').nth(2).unwrap().parse().unwrap();
    assert!((g - 2.0 * std::f64::consts::E).abs() < 1e-8, "G(1,0) = {g}");
}

#[test]
fn green_exits_two_on_singular_denominator() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("singular.json");
    std::fs::write(
        &inst,
        r#"{ "p": "1", "f": ["1"], "lambda": 2.718281828459045,
             "thresholds": {"A": 1.0, "B": 2.0, "C": 8.0} }"#,
    )
    .unwrap();
    let out = run(&["green", &path_arg(&inst)]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    assert!(String::from_utf8_lossy(&out.stderr).contains("inadmissible"));
}

#[test]
fn green_flat_kernel_values_are_branch_constants() {
    let inst = instances_dir().join("three_solutions.json");
    let dir = tempfile::tempdir().unwrap();
    let table = dir.path().join("flat.csv");
    let out = run(&[
        "green",
        &path_arg(&inst),
        "--t",
        "5",
        "--s",
        "5",
        "--out",
        &path_arg(&table),
    ]);
    assert_eq!(out.status.code(), Some(0));
    // p = 0, lambda = 2: G is 2 below the diagonal and 1 on/above it
    let text = std::fs::read_to_string(&table).unwrap();
    for line in text.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
        let (t, s, g) = (cols[0], cols[1], cols[2]);
        let expected = if s < t { 2.0 } else { 1.0 };
        assert_eq!(g, expected, "t = {t}, s = {s}");
    }
}
