use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn duel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_duel")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

const GAME: [&str; 6] = ["--gamma", "0.5", "--p1", "0.5", "--p2", "0.5"];

#[test]
fn mutual_defection_payoff() {
    let doc = json(&duel(&[&["payoff"][..], &GAME, &["--profile", "D,D"]].concat()));
    let v1 = doc["result"]["v1"].as_f64().unwrap();
    assert!((v1 - 5.0 / 7.0).abs() < 1e-12);
    assert_eq!(doc["result"]["tail_bound"], 0.0);
    assert_eq!(doc["config"]["params"]["gamma"], 0.5);
    assert_eq!(doc["config"]["profile"][1], "D");
    assert_eq!(doc["provenance"]["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn exact_payoff_is_a_fraction() {
    let doc = json(&duel(&[&["payoff"][..], &GAME, &["--profile", "D,D", "--exact"]].concat()));
    assert_eq!(doc["result"]["exact"]["v1"], "5/7");
    assert_eq!(doc["config"]["exact_params"][0], "1/2");
}

#[test]
fn grim_cooperation_is_certified() {
    let doc = json(&duel(&[
        "check-ne", "--gamma", "0.9", "--p1", "0.3", "--p2", "0.5", "--profile", "grim-C,grim-C", "--epsilon", "1e-9",
    ]));
    assert_eq!(doc["result"]["verdict"], "NE-within-epsilon");
    assert!(doc["result"]["witness"].is_null());
}

#[test]
fn late_shooting_has_a_witness() {
    let doc = json(&duel(&[&["check-ne"][..], &GAME, &["--profile", "grim-CD:2,grim-CD:2"]].concat()));
    assert_eq!(doc["result"]["verdict"], "NotNE");
    let gain = doc["result"]["witness"]["gain"].as_f64().unwrap();
    // One round early: γ^K p1 p2 / (1 − γ(1−p1)(1−p2)) = 1/14.
    assert!((gain - 1.0 / 14.0).abs() < 1e-9);
}

#[test]
fn stationary_sweep_csv() {
    let out = duel(&["scan-stationary", "--gamma", "0.9", "--p1", "0.3", "--p2", "0.5", "--grid", "11"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("gamma,p1,p2,x1,x2,gain1,gain2,equilibrium"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 121);
    let equilibria: Vec<&&str> = rows.iter().filter(|r| r.ends_with(",true")).collect();
    assert_eq!(equilibria.len(), 2);
    assert!(rows[1].starts_with("0.900000000000,0.300000000000,0.500000000000,0,0.100000000000,"));
}

#[test]
fn gamma0_sweep_rows() {
    let out = duel(&["gamma0", "--p1", "0.3", "--p2", "0.5", "--k", "1..4"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.starts_with("k,p1,p2,gamma0,min_verified_gain,unit_gain\n"));
}

#[test]
fn region_scan_reports_positive_delta() {
    let doc = json(&duel(&["prop5-region", "--m", "2,3", "--grid", "2", "--format", "json"]));
    let scans = doc["result"]["scans"].as_array().unwrap();
    assert_eq!(scans.len(), 2);
    for s in scans {
        assert!(s["empirical_delta"].as_f64().unwrap() > 0.0);
        assert_eq!(s["center_verdict"], "NE-within-epsilon");
    }
}

#[test]
fn same_config_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.json");
    let simulate = [
        &["simulate"][..],
        &GAME,
        &["--profile", "P:2,x:0.3", "--episodes", "20000", "--seed", "9", "--out", path.to_str().unwrap()],
    ]
    .concat();
    let mut runs = Vec::new();
    for _ in 0..2 {
        let out = duel(&simulate);
        assert!(out.status.success());
        assert!(out.stdout.is_empty());
        runs.push(fs::read(&path).unwrap());
    }
    assert_eq!(runs[0], runs[1]);
    let doc: Value = serde_json::from_slice(&runs[0]).unwrap();
    assert_eq!(doc["provenance"]["seed"], 9);
    assert_eq!(doc["config"]["episodes"], 20000);

    let sweep = ["gamma0", "--p1", "0.2", "--p2", "0.6", "--k", "1..3"];
    assert_eq!(duel(&sweep).stdout, duel(&sweep).stdout);
}

#[test]
fn validation_errors_exit_with_two() {
    let cases: [&[&str]; 6] = [
        &["payoff", "--gamma", "1.5", "--p1", "0.5", "--p2", "0.5", "--profile", "D,D"],
        &["payoff", "--gamma", "0.5", "--p1", "0.5", "--p2", "0.5", "--profile", "D,DC:x"],
        &["payoff", "--gamma", "0.5", "--p1", "0.5", "--p2", "0.5", "--profile", "D"],
        &["check-ne", "--gamma", "0.5", "--p1", "0.5", "--p2", "0.5", "--profile", "D,D", "--epsilon", "0"],
        &["gamma0", "--p1", "0.5", "--p2", "0.5", "--k", "0"],
        &["payoff", "--gamma", "0.5", "--p1", "abc", "--p2", "0.5", "--profile", "D,D"],
    ];
    for args in cases {
        let out = duel(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn parse_errors_echo_token_and_grammar() {
    let out = duel(&[&["payoff"][..], &GAME, &["--profile", "C,grim-Q:1"]].concat());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("grim-Q:1"));
    assert!(err.contains("DC:<K>"));
}

#[test]
fn unwritable_output_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.json");
    let out = duel(&[&["payoff"][..], &GAME, &["--profile", "C,C", "--out", path.to_str().unwrap()]].concat());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn verify_all_writes_one_record_per_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = duel(&["verify-all", "--report", path.to_str().unwrap()]);
    let doc: Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    let records = doc["result"].as_array().unwrap();
    assert_eq!(records.len(), 10);
    let failed = records.iter().filter(|r| r["passed"] == false).count();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().filter(|l| l.starts_with("[PASS]") || l.starts_with("[FAIL]")).count(), 10);
    // A failing reproduction check is an inconsistency, not a usage error.
    let expected = if failed == 0 { 0 } else { 3 };
    assert_eq!(out.status.code(), Some(expected));
}
