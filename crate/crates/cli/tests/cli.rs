//! Smoke tests of the `spintrap` binary: argument surface, formats,
//! file outputs and exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn spintrap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spintrap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn solve_json_lists_three_labeled_branches() {
    let out = spintrap(&[
        "solve",
        "--e0",
        "1.0",
        "--wave-amp",
        "1e-3",
        "--omega",
        "0.05",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let branches = json["branches"].as_array().unwrap();
    assert_eq!(branches.len(), 3);
    let labels: Vec<&str> = branches
        .iter()
        .map(|b| b["label"].as_str().unwrap())
        .collect();
    assert!(labels.contains(&"singular-plus"));
    assert!(labels.contains(&"singular-minus"));
    assert!(labels.contains(&"regular"));
}

#[test]
fn solve_csv_has_documented_header() {
    let out = spintrap(&["solve", "--format", "csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("branch,root,momentum,energy,root_residual,converged"));
    assert_eq!(text.trim_end().lines().count(), 4);
}

#[test]
fn wavefunction_report_carries_representation_tag() {
    let out = spintrap(&["wavefunction", "--e0", "1.0", "--branch", "singular+"]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(json["representation"], "dirac-pauli");
    assert!(json["spinor"].is_array());
}

#[test]
fn residual_certifies_over_cli() {
    let out = spintrap(&[
        "residual",
        "--e0",
        "1.0",
        "--omega",
        "0.05",
        "--wave-amp",
        "1e-2",
    ]);
    assert!(out.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(json["relative_norm"].as_f64().unwrap() < 1e-8);
}

#[test]
fn audit_csv_has_16_rows() {
    let out = spintrap(&[
        "audit",
        "--e0",
        "1.0",
        "--omega",
        "0.05",
        "--wave-amp",
        "1e-2",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.trim_end().lines().count(), 17);
    assert!(text.starts_with("time,space,coupling,mass,relative_residual"));
}

#[test]
fn observe_csv_one_row_per_phase() {
    let out = spintrap(&[
        "observe",
        "--e0",
        "1.0",
        "--order",
        "32",
        "--phase",
        "0.0",
        "--phase",
        "0.7853981633974483",
        "--format",
        "csv",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = stdout(&out);
    let lines: Vec<&str> = text.trim_end().lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("e0,g,branch,phase,order,norm"));
}

#[test]
fn observe_json_includes_suppression_when_wavelength_given() {
    let out = spintrap(&[
        "observe",
        "--e0",
        "1.0",
        "--order",
        "32",
        "--wavelength-cm",
        "0.3",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let direct = json["suppression"]["direct"].as_f64().unwrap();
    assert!(direct > 1e9 && direct < 1e10);
}

#[test]
fn sweep_writes_csv_file_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("sweep.conf");
    let csv_path = dir.path().join("rows.csv");
    std::fs::write(
        &config_path,
        "e0_min = 0.98\ne0_max = 1.02\ne0_count = 5\nwave_amp = 1e-3\nomega = 1e-3\nquad_order = 32\n",
    )
    .unwrap();
    let out = spintrap(&[
        "sweep",
        "--config",
        config_path.to_str().unwrap(),
        "--desk-scale",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(csv.lines().count(), 6); // header + 5 rows
    assert!(csv.lines().nth(1).unwrap().contains("quadrature"));
    // summary JSON lands on stderr
    let summary: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stderr)).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["row_count"], 5);
}

#[test]
fn sweep_then_extract_g_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("closed.csv");
    let out = spintrap(&[
        "sweep",
        "--e0-min",
        "0.95",
        "--e0-max",
        "1.05",
        "--e0-count",
        "21",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let g_star: f64 = 2.002;
    let pz = g_star / 2.0;
    let out = spintrap(&[
        "extract-g",
        "--csv",
        csv_path.to_str().unwrap(),
        "--column",
        "mean_pz",
        "--value",
        &pz.to_string(),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let json: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let g = json["g"].as_f64().unwrap();
    assert!((g - g_star).abs() < 1e-6, "g = {g}");
}

#[test]
fn extract_g_refuses_out_of_range_values() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("closed.csv");
    let out = spintrap(&[
        "sweep",
        "--e0-min",
        "0.95",
        "--e0-max",
        "1.05",
        "--e0-count",
        "11",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = spintrap(&[
        "extract-g",
        "--csv",
        csv_path.to_str().unwrap(),
        "--column",
        "mean_pz",
        "--value",
        "99.0",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("refusing to extrapolate"));
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("bad.conf");
    std::fs::write(&config_path, "e0_min = -2\n").unwrap();
    let out = spintrap(&["sweep", "--config", config_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn per_point_failures_exit_two_with_csv_written() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("degenerate.csv");
    // h = 0 makes the singular pair degenerate: every row fails, sweep
    // continues, exit code flags it
    let out = spintrap(&[
        "sweep",
        "--e0-min",
        "1.0",
        "--e0-max",
        "1.1",
        "--e0-count",
        "3",
        "--wave-amp",
        "0",
        "--out",
        csv_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.contains("not present"));
}

#[test]
fn config_constant_overrides_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("override.conf");
    std::fs::write(
        &config_path,
        "hbar = 1.054571817e-27\nc = 2.99792458e10\nmass = 9.1093837015e-28\ne0_count = 2\ne0_min = 0.99\ne0_max = 1.0\n",
    )
    .unwrap();
    let out = spintrap(&["sweep", "--config", config_path.to_str().unwrap()]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn out_files_are_created_where_asked() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("solve.json");
    let out = spintrap(&["solve", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(Path::new(&path).exists());
}
