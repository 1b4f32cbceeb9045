use std::process::{Command, Output};

use ecp_cli::{verify, EXIT_VERIFY_FAILED};
use ecp_core::protocol::Fault;
use ecp_core::{Engine, Execution};
use serde_json::Value;

fn ecp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecp"))
        .args(args)
        .output()
        .expect("spawn ecp")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn ecp1_reports_success_probability() {
    let doc = json(&ecp(&["ecp1", "--alpha-sq", "0.8"]));
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["protocol"], "ecp1");
    assert!((doc["p_total"].as_f64().unwrap() - 0.32).abs() < 1e-12);
    let doc = json(&ecp(&["ecp1", "--alpha-sq", "0.5"]));
    assert!((doc["p_total"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn degenerate_alpha_exits_two() {
    let out = ecp(&["ecp1", "--alpha-sq", "1.0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no entanglement"));
    assert!(out.stdout.is_empty());
}

#[test]
fn bad_arguments_exit_two() {
    for args in [
        &["ecp1"][..],
        &["ecp2", "--alpha-sq", "abc"],
        &["ecp2", "--alpha-sq", "0.5", "--rounds", "0"],
        &["ecp2", "--alpha-sq", "0.5", "--t", "1.5"],
        &["sweep", "--steps", "1"],
        &["frobnicate"],
    ] {
        assert_eq!(ecp(args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn ecp2_examples() {
    let doc = json(&ecp(&["ecp2", "--alpha-sq", "0.5", "--rounds", "10"]));
    assert!((doc["p_total"].as_f64().unwrap() - 0.9990234375).abs() < 1e-12);
    let doc = json(&ecp(&["ecp2", "--alpha-sq", "0.5", "--rounds", "1"]));
    assert!((doc["p_total"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn ecp2_csv_table() {
    let out = ecp(&["ecp2", "--alpha-sq", "0.8", "--rounds", "3", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "k,t_k,p_k_simulated,p_k_analytic,cumulative");
    let expect = [0.32, 0.07529411764705882, 0.004687571526665138];
    let mut cumulative = 0.0;
    for (row, p) in rows[1..].iter().zip(expect) {
        let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        cumulative += p;
        assert!((cells[2] - p).abs() < 1e-12);
        assert!((cells[3] - p).abs() < 1e-12);
        assert!((cells[4] - cumulative).abs() < 1e-12);
    }
    assert_eq!(rows.len(), 4);
}

#[test]
fn sweep_peaks_at_balance() {
    let out = ecp(&["sweep", "--min", "0.05", "--max", "0.95", "--steps", "19"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text.lines().skip(2).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 19);
    assert_eq!(rows[9][0], "0.5");
    assert_eq!(rows[9][3], "0.9990234375000009");
    for r in &rows {
        assert_eq!(r.len(), 14);
    }
}

#[test]
fn degenerate_grid_exits_two() {
    let out = ecp(&["sweep", "--min", "0.5", "--max", "0.5", "--steps", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = ecp(&["sweep", "--min", "0.0", "--max", "0.5", "--steps", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_default_and_single_point() {
    let out = ecp(&["verify"]);
    assert_eq!(out.status.code(), Some(0));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("verify: PASS"));
    assert!(stderr.contains("P_N formula verdict"));
    let out = ecp(&["verify", "--alpha-sq", "0.3", "--rounds", "6"]);
    assert_eq!(out.status.code(), Some(0));
    let doc = json(&out);
    assert_eq!(doc["records"].as_array().unwrap().len(), 1);
}

#[test]
fn faulty_engine_fails_verification() {
    let r = verify(
        &Engine::with_fault(Fault::FlippedSplitterSign),
        None,
        2,
        Execution::Sequential,
        None,
    )
    .unwrap();
    assert_eq!(r.code, EXIT_VERIFY_FAILED);
    assert!(r.diagnostics.contains("ecp1.branch[d1=0,d2=1].fidelity"));
}

#[cfg(feature = "fault-injection")]
#[test]
fn injected_fault_exits_three() {
    assert_eq!(ecp(&["verify", "--inject-fault"]).status.code(), Some(3));
}

#[test]
fn output_is_byte_identical() {
    for args in [
        &["ecp1", "--alpha-sq", "0.3"][..],
        &["ecp2", "--alpha-sq", "0.7", "--rounds", "8", "--format", "csv"],
        &["sweep", "--format", "json"],
        &["verify", "--format", "csv"],
    ] {
        let a = ecp(args).stdout;
        let b = ecp(args).stdout;
        assert!(!a.is_empty());
        assert_eq!(a, b, "{args:?}");
    }
}

#[test]
fn sequential_sweep_matches_parallel() {
    let a = ecp(&["sweep"]).stdout;
    let b = ecp(&["sweep", "--sequential"]).stdout;
    assert_eq!(a, b);
}

#[test]
fn writes_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let out = ecp(&["sweep", "--steps", "5", "--min", "0.1", "--max", "0.9", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.starts_with("# schema_version=1\nalpha_sq,alpha,rounds,p_total,p_1,"));
    assert_eq!(text.lines().count(), 7);
}

#[test]
fn transmittance_override_is_recorded() {
    let doc = json(&ecp(&["ecp1", "--alpha-sq", "0.8", "--t", "0.5"]));
    assert_eq!(doc["params"]["transmittance_override"], 0.5);
    // α²(1−t) + β²t at t = 1/2
    assert!((doc["p_total"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}
