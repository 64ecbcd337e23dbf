//! End-to-end checks of the `tcap` binary: exit codes, output formats,
//! and bundle export.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_tcap");
const BAY7: &str = concat!(
    env!("CARGO_MANIFEST_DIR"),
    "/../../scenarios/bay_area_7.toml"
);

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

#[test]
fn paths_prints_nine_rows() {
    let out = run(&["paths", "--scenario", BAY7]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1 + 9, "{stdout}");
}

#[test]
fn paths_json_is_machine_readable() {
    let out = run(&["paths", "--scenario", BAY7, "--format", "json"]);
    assert!(out.status.success());
    let rows: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 9);
}

#[test]
fn invalid_scenario_exits_2() {
    let dir = std::env::temp_dir().join("tcap-cli-bad");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.toml");
    std::fs::write(&bad, "nodes = [\"a\"]\n").unwrap();
    let out = run(&["paths", "--scenario", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
}

#[test]
fn nonconvergence_exits_3_but_writes_bundle() {
    let dir = std::env::temp_dir().join("tcap-cli-nc");
    let _ = std::fs::remove_dir_all(&dir);
    let out = run(&[
        "solve",
        "--scenario",
        BAY7,
        "--max-iters",
        "2",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let bundle: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("bundle.json")).unwrap()).unwrap();
    assert_eq!(bundle["solver"]["converged"], serde_json::json!(false));
}

#[test]
fn solve_writes_consistent_bundle_and_csv() {
    let dir = std::env::temp_dir().join("tcap-cli-ok");
    let _ = std::fs::remove_dir_all(&dir);
    let out = run(&[
        "solve",
        "--scenario",
        BAY7,
        "--alpha",
        "10",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.join("bundle.json")).unwrap();
    let bundle: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(bundle["schema_version"], serde_json::json!(1));
    assert_eq!(bundle["mode"], serde_json::json!("ue"));
    assert!(bundle["scenario_digest"].as_str().unwrap().len() == 64);

    let stations = std::fs::read_to_string(dir.join("stations.csv")).unwrap();
    assert_eq!(stations.lines().count(), 1 + 7);
    let paths: String = std::fs::read_to_string(dir.join("paths.csv")).unwrap();
    assert_eq!(paths.lines().count(), 1 + 9);

    // totals recompute from rows bit-for-bit
    let parsed: tcap::bundle::ResultBundle = serde_json::from_str(&text).unwrap();
    assert!(parsed.totals_consistent());
}

#[test]
fn fees_json_contains_all_stations() {
    let out = run(&[
        "fees",
        "--scenario",
        BAY7,
        "--alpha",
        "10",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let prices: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(prices["entries"].as_object().unwrap().len(), 7);
}

#[test]
fn fee_units_flag_scales_by_alpha() {
    let paper = run(&["fees", "--scenario", BAY7, "--alpha", "10", "--format", "json"]);
    let lagr = run(&[
        "fees",
        "--scenario",
        BAY7,
        "--alpha",
        "10",
        "--fee-units",
        "lagrangian",
        "--format",
        "json",
    ]);
    let p: serde_json::Value = serde_json::from_slice(&paper.stdout).unwrap();
    let l: serde_json::Value = serde_json::from_slice(&lagr.stdout).unwrap();
    let tp = p["entries"]["davis"]["tau_usd"].as_f64().unwrap();
    let tl = l["entries"]["davis"]["tau_usd"].as_f64().unwrap();
    assert!((tp / tl - 10.0).abs() < 1e-9);
}

#[test]
fn sweep_emits_long_format_csv() {
    let out = run(&[
        "sweep",
        "--scenario",
        BAY7,
        "--values",
        "1,10",
        "--mode",
        "ue",
        "--fees",
        "none",
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    // header + one row per station per value
    assert_eq!(stdout.lines().count(), 1 + 2 * 7, "{stdout}");
    assert!(stdout.lines().next().unwrap().starts_with("alpha,station,"));
}

#[test]
fn sweep_rejects_unsorted_values() {
    let out = run(&["sweep", "--scenario", BAY7, "--values", "10,1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn table2_single_case_with_zero_evs() {
    let out = run(&[
        "table2",
        "--scenario",
        BAY7,
        "--case",
        "0,0,0,none",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    let row = stdout.lines().nth(1).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[5], "0.00");
    assert_eq!(cols[6], "0.00");
}

#[test]
fn verify_enforcement_reports_deviation() {
    let out = run(&["verify-enforcement", "--scenario", BAY7, "--alpha", "10"]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("flow deviation"));
    assert!(stdout.contains("social cost"));
}

#[test]
fn oracle_subcommand_runs() {
    let out = run(&[
        "oracle",
        "--scenario",
        BAY7,
        "--bins",
        "100",
        "--max-rounds",
        "2000",
    ]);
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("best response"));
}

#[test]
fn scenario_paths_are_stable() {
    // guard against accidental fixture moves
    assert!(Path::new(BAY7).exists());
    assert!(PathBuf::from(BAY7).ends_with("scenarios/bay_area_7.toml"));
}
