use polymer_lab::ExperimentReport;
use std::process::{Command, Output};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polymer-lab")).args(args).output().expect("binary runs")
}

fn stdout_report(out: &Output) -> ExperimentReport {
    ExperimentReport::from_json(&String::from_utf8_lossy(&out.stdout)).expect("json report on stdout")
}

#[test]
fn bad_alpha_exits_two_and_names_the_parameter() {
    let out = lab(&["lyapunov", "--alpha", "1.5", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("alpha"), "{err}");
}

#[test]
fn missing_seed_is_an_error() {
    let out = lab(&["validate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn unknown_distribution_is_an_error() {
    let out = lab(&["front", "--dist", "cauchy(1)", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dist"));
}

#[test]
fn ones_velocity_is_log_n() {
    let out = lab(&["lyapunov", "--dist", "ones", "--n", "3", "--t", "100", "--seed", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let r = stdout_report(&out);
    assert_eq!(r.get("vHat"), Some(3f64.ln()));
    assert_eq!(r.rows.len(), 100);
}

#[test]
fn reruns_are_identical() {
    let args = ["front", "--n", "300", "--t", "2", "--seed", "11", "--format", "json"];
    let a = stdout_report(&lab(&args)).without_timing();
    let b = stdout_report(&lab(&args)).without_timing();
    assert_eq!(a, b);
    let c = stdout_report(&lab(&["front", "--n", "300", "--t", "2", "--seed", "12", "--format", "json"])).without_timing();
    assert_ne!(a.rows, c.rows);
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small front run\nn = 200\nt = 2\nseed = 3\nalpha = 0.7\n").unwrap();
    let out = lab(&["front", "--config", cfg.to_str().unwrap(), "--alpha", "0.5"]);
    let r = stdout_report(&out);
    assert_eq!(r.config["n"], "200");
    assert_eq!(r.config["alpha"], "0.5");
    assert_eq!(r.config["dist"], "stable(0.5)");

    std::fs::write(&cfg, "n 200\n").unwrap();
    assert_eq!(lab(&["front", "--config", cfg.to_str().unwrap(), "--seed", "1"]).status.code(), Some(2));
}

#[test]
fn both_formats_write_matching_files() {
    let dir = tempfile::tempdir().unwrap();
    let base = dir.path().join("front");
    let out = lab(&["front", "--n", "200", "--t", "2", "--seed", "5", "--format", "both", "--out", base.to_str().unwrap()]);
    assert!(out.status.success());
    let json = std::fs::read_to_string(base.with_extension("json")).unwrap();
    let csv = std::fs::read_to_string(base.with_extension("csv")).unwrap();
    let r = ExperimentReport::from_json(&json).unwrap();
    assert_eq!(r.to_csv().unwrap(), csv);
    assert_eq!(csv.lines().next(), Some("x,profile,limit"));
    assert_eq!(csv.lines().count(), r.rows.len() + 1);
    // the JSON round trip is lossless
    assert_eq!(r.to_json().unwrap(), json);
}

#[test]
fn failing_check_exits_one() {
    // the asymptotic velocity is about 4% off at N = 100, beyond the 2% check
    let out = lab(&["lyapunov", "--mode", "asymptotic", "--n", "100", "--replicas", "10000", "--seed", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let r = stdout_report(&out);
    assert!(!r.pass);
    assert!(r.checks.iter().any(|c| !c.pass));
}
