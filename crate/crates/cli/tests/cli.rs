use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_eid-lab"));
    c.env_remove("EIDLAB_SEED");
    c
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> (i32, Value, String) {
    let out: Output = bin().args(args).output().unwrap();
    let stderr = String::from_utf8_lossy(&out.stderr).into_owned();
    let report = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (out.status.code().unwrap(), report, stderr)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const PH: &str = r#"{"schema": 1, "family": "port_hamiltonian", "params": {}}"#;
const EX1: &str = r#"{"schema": 1, "family": "second_order", "params": {}}"#;
const SMIB: &str = r#"{"schema": 1, "family": "smib", "params": {"P_m": 0.2}}"#;

#[test]
fn certify_port_hamiltonian_passes() {
    let d = TempDir::new().unwrap();
    let sys = write(d.path(), "ph.json", PH);
    let (code, rep, _) = run(&["certify", "--system", s(&sys)]);
    assert_eq!(code, 0);
    assert_eq!(rep["command"], "certify");
    assert_eq!(rep["verdict"], "pass");
    assert_eq!(rep["seed"], 0);
    assert!(rep["metrics"]["stats"]["max_a_violation"].as_f64().unwrap() <= 1e-9);
    assert_eq!(rep["metrics"]["stats"]["pairs"], 2001);
    assert_eq!(rep["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn certify_shifted_storage_fails_with_exit_2() {
    let d = TempDir::new().unwrap();
    let sys = write(d.path(), "ex1.json", EX1);
    let cfg = write(
        d.path(),
        "cfg.json",
        r#"{"storage": "shifted", "pairs": 300}"#,
    );
    let (code, rep, _) = run(&["certify", "--system", s(&sys), "--config", s(&cfg)]);
    assert_eq!(code, 2);
    assert_eq!(rep["verdict"], "fail");
    assert!(rep["metrics"]["min_margin"].as_f64().unwrap() < 0.0);

    // same system, Bregman storage
    let cfg = write(d.path(), "cfg2.json", r#"{"pairs": 300}"#);
    let (code, _, _) = run(&["certify", "--system", s(&sys), "--config", s(&cfg)]);
    assert_eq!(code, 0);
}

#[test]
fn malformed_input_exits_1() {
    let d = TempDir::new().unwrap();
    let bad = write(d.path(), "bad.json", "{not json");
    let (code, rep, err) = run(&["certify", "--system", s(&bad)]);
    assert_eq!(code, 1);
    assert!(rep.is_null());
    assert!(err.contains("error"));

    let sys = write(d.path(), "ph.json", PH);
    let cfg = write(d.path(), "cfg.json", r#"{"pairz": 10}"#);
    let (code, _, err) = run(&["certify", "--system", s(&sys), "--config", s(&cfg)]);
    assert_eq!(code, 1);
    assert!(err.contains("pairz"));

    let (code, _, err) = run(&["certify"]);
    assert_eq!(code, 1);
    assert!(err.contains("--system"));

    let unknown = write(d.path(), "u.json", r#"{"schema": 1, "family": "teapot"}"#);
    let (code, _, _) = run(&["simulate", "--system", s(&unknown)]);
    assert_eq!(code, 1);
}

#[test]
fn region_csv_intercepts() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("out");
    let (code, rep, _) = run(&["region", "--out", s(&out)]);
    assert_eq!(code, 0);
    let m = &rep["metrics"];
    assert!((m["nu_intercept"].as_f64().unwrap() - 0.9).abs() < 1e-12);
    assert!((m["rho_intercept"].as_f64().unwrap() - 1.0 / 0.9).abs() < 1e-12);
    assert!((m["rho_cap"].as_f64().unwrap() - 2.0 / 2.8).abs() < 1e-12);
    assert_eq!(rep["artifacts"][0], "region.csv");

    let text = std::fs::read_to_string(out.join("region.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "nu,rho_max_eq16,rho_max_eq18,rho_max,member"
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 101);
    let at_j = rows.iter().find(|r| (r[0] - 0.9).abs() < 1e-12).unwrap();
    assert_eq!(at_j[3], 0.0);
    assert_eq!(at_j[4], 0.0);
    assert!((rows[0][1] - 1.0 / 0.9).abs() < 1e-12);
    assert!(std::fs::metadata(out.join("report.json")).is_ok());
}

#[test]
fn gain_sweep_includes_small_alpha_row() {
    let d = TempDir::new().unwrap();
    let out = d.path().join("out");
    let cfg = write(
        d.path(),
        "g.json",
        r#"{"formula": "dt_gradient", "mu": 1, "alphas": [0.5, 1.0]}"#,
    );
    let (code, rep, _) = run(&["gain", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code, 0);
    let g0 = rep["metrics"]["gamma_small_alpha"].as_f64().unwrap();
    assert!((g0 - 1.0).abs() < 1e-3);
    let text = std::fs::read_to_string(out.join("gain.csv")).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.lines().nth(1).unwrap().starts_with("1.0,1e-6,"));
}

#[test]
fn runs_are_deterministic_and_hash_ignores_seed() {
    let d = TempDir::new().unwrap();
    let sys = write(d.path(), "ex1.json", EX1);
    let cfg = write(d.path(), "cfg.json", r#"{"pairs": 200}"#);
    let args = [
        "certify",
        "--system",
        s(&sys),
        "--config",
        s(&cfg),
        "--seed",
        "3",
    ];
    let a = bin().args(args).output().unwrap().stdout;
    let b = bin().args(args).output().unwrap().stdout;
    assert_eq!(a, b);

    let other = bin()
        .args(["certify", "--system", s(&sys), "--config", s(&cfg)])
        .env("EIDLAB_SEED", "9")
        .output()
        .unwrap();
    let ra: Value = serde_json::from_slice(&a).unwrap();
    let rb: Value = serde_json::from_slice(&other.stdout).unwrap();
    assert_eq!(rb["seed"], 9);
    assert_eq!(ra["config_hash"], rb["config_hash"]);

    // whitespace in the system file does not change the hash
    let sys2 = write(d.path(), "ex1b.json", &EX1.replace(' ', "\n  "));
    let (_, rc, _) = run(&[
        "certify",
        "--system",
        s(&sys2),
        "--config",
        s(&cfg),
        "--seed",
        "3",
    ]);
    assert_eq!(ra["config_hash"], rc["config_hash"]);
    let cfg3 = write(d.path(), "cfg3.json", r#"{"pairs": 201}"#);
    let (_, rd, _) = run(&[
        "certify",
        "--system",
        s(&sys),
        "--config",
        s(&cfg3),
        "--seed",
        "3",
    ]);
    assert_ne!(ra["config_hash"], rd["config_hash"]);
}

#[test]
fn audit_exit_codes_follow_verdict() {
    let d = TempDir::new().unwrap();
    let sys = write(d.path(), "ex1.json", EX1);
    let good = write(
        d.path(),
        "good.json",
        r#"{"xbar": [1.0, 0], "x0": [1.5, 0.5], "t_end": 5, "input": {"kind": "sine", "amplitude": 0.5, "omega": 1.3}}"#,
    );
    let out = d.path().join("out");
    let (code, rep, _) = run(&[
        "audit",
        "--system",
        s(&sys),
        "--config",
        s(&good),
        "--out",
        s(&out),
    ]);
    assert_eq!(code, 0);
    assert!(rep["metrics"]["ubar"][0].as_f64().unwrap().abs() > 0.1);
    assert!(out.join("audit.csv").exists());
    assert!(out.join("trajectory.csv").exists());

    let bad = write(
        d.path(),
        "bad.json",
        r#"{"xbar": [1.0, 0], "x0": [1.5, 0.5], "t_end": 5, "storage": "shifted", "input": {"kind": "sine", "amplitude": 0.5, "omega": 1.3}}"#,
    );
    let (code, rep, _) = run(&["audit", "--system", s(&sys), "--config", s(&bad)]);
    assert_eq!(code, 2);
    assert!(rep["metrics"]["max_violation"].as_f64().unwrap() > 1e-3);
}

#[test]
fn circle_and_stability_on_smib() {
    let d = TempDir::new().unwrap();
    let sys = write(d.path(), "smib.json", SMIB);
    let (code, rep, _) = run(&["circle", "--system", s(&sys)]);
    assert_eq!(code, 0);
    assert!(rep["metrics"]["epsilon"].as_f64().unwrap() >= 0.3);

    let cfg = write(d.path(), "c.json", r#"{"sector": [-1.5, 1.0]}"#);
    let (code, _, _) = run(&["circle", "--system", s(&sys), "--config", s(&cfg)]);
    assert_eq!(code, 2);

    let cfg = write(
        d.path(),
        "st.json",
        r#"{"radius": 0.3, "psi": {"kind": "saturation", "lo": 0, "hi": 1}}"#,
    );
    let (code, rep, _) = run(&["stability", "--system", s(&sys), "--config", s(&cfg)]);
    assert_eq!(code, 0);
    assert_eq!(rep["metrics"]["converged_fraction"], 1.0);
}

#[test]
fn compose_and_kyp() {
    let d = TempDir::new().unwrap();
    let cfg = write(
        d.path(),
        "c.json",
        r#"{"w1": {"kind": "ifp_osp", "rho": 1}, "w2": {"kind": "ifp_osp", "rho": 1}}"#,
    );
    let (code, rep, _) = run(&["compose", "--config", s(&cfg)]);
    assert_eq!(code, 0);
    assert!(rep["metrics"]["lambda_max"].as_f64().unwrap() < 0.0);

    // two passive systems: Q_cl = 0 for every κ
    let (code, _, _) = run(&["compose"]);
    assert_eq!(code, 2);

    let sys = write(
        d.path(),
        "lti.json",
        r#"{"schema": 1, "family": "lti", "params": {"F": [[-1]], "G": [[1]], "H": [[1]]}}"#,
    );
    let k = write(d.path(), "k.json", r#"{"P": [[0.5]]}"#);
    let (code, _, _) = run(&["kyp", "--system", s(&sys), "--config", s(&k)]);
    assert_eq!(code, 0);
    let k = write(
        d.path(),
        "k2.json",
        r#"{"P": [[0.5]], "supply": {"kind": "l2_gain", "gamma": 0.5}}"#,
    );
    let (code, _, _) = run(&["kyp", "--system", s(&sys), "--config", s(&k)]);
    assert_eq!(code, 2);
}

#[test]
fn io_relation_and_dt_certificate() {
    let d = TempDir::new().unwrap();
    let sys = write(
        d.path(),
        "int.json",
        r#"{"schema": 1, "family": "dt_integrator", "params": {"alpha": 0.5}}"#,
    );
    let (code, rep, _) = run(&["io-relation", "--system", s(&sys)]);
    assert_eq!(code, 0);
    assert_eq!(rep["metrics"]["max_abs_value"], 0.0);

    let cfg = write(
        d.path(),
        "c.json",
        r#"{"pairs": 200, "supply": {"kind": "scalar", "q": 0, "s": 0.5, "r": 0.25}}"#,
    );
    let (code, _, _) = run(&["certify-dt", "--system", s(&sys), "--config", s(&cfg)]);
    assert_eq!(code, 0);
    // plain passivity is too strong for a positive step
    let (code, _, _) = run(&["certify-dt", "--system", s(&sys)]);
    assert_eq!(code, 2);
}
