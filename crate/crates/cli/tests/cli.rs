use std::path::{Path, PathBuf};
use std::process::Command;

use bubble_lab::config::{from_value, load};
use bubble_lab::{run, CliError, Experiment};
use serde_json::{json, Value};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn lab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_bubble-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config(name: &str) -> String {
    configs().join(format!("{name}.json")).display().to_string()
}

#[test]
fn short_eps_list_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&[
        "blowup-rate",
        "--config",
        &config("blowup-rate"),
        "--set",
        "eps_list=[0.2,0.1]",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn unknown_experiment_is_a_config_error() {
    let out = lab(&["warp-drive", "--config", &config("solve")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_tolerance_and_missing_config_are_config_errors() {
    let out = lab(&["solve", "--config", &config("solve"), "--set", "tolerances.bogus=1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = lab(&["solve", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn passing_run_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&[
        "shoot",
        "--config",
        &config("shoot"),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS profile_sup_error"));
}

#[test]
fn failing_check_exits_one_and_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let out = lab(&[
        "shoot",
        "--config",
        &config("shoot"),
        "--set",
        "tolerances.profile=0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL profile_sup_error"));
    assert!(dir.path().join("report.json").exists());
}

#[test]
fn bubble_check_files() {
    let dir = tempfile::tempdir().unwrap();
    let loaded = load(&configs().join("bubble-check.json"), &[]).unwrap();
    let out = run(Experiment::BubbleCheck, &loaded, Some(dir.path())).unwrap();
    for f in ["report.json", "Z.csv", "residual.csv"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("Z.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("r,value"));
    assert_eq!(lines.count(), loaded.config.grid.intervals + 1);
    let report: Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["experiment"], "bubble-check");
    assert_eq!(report["checks"].as_array().unwrap().len(), out.report.checks.len());
    for c in report["checks"].as_array().unwrap() {
        assert!(c["measured"].is_number());
        assert!(c["relation"]["kind"].is_string());
    }
}

#[test]
fn report_keys_are_stable() {
    let dir = tempfile::tempdir().unwrap();
    let loaded = load(&configs().join("shoot.json"), &[]).unwrap();
    run(Experiment::Shoot, &loaded, Some(dir.path())).unwrap();
    let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
    let keys = [
        "tool",
        "version",
        "experiment",
        "config_hash",
        "config",
        "tolerances",
        "checks",
        "results",
        "passed",
    ];
    let positions: Vec<usize> = keys
        .iter()
        .map(|k| text.find(&format!("\n  \"{k}\":")).unwrap())
        .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]), "{positions:?}");
    let report: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(report["tolerances"], json!({"profile": 1e-6}));
}

#[test]
fn blowup_rates_csv() {
    let dir = tempfile::tempdir().unwrap();
    let loaded = load(&configs().join("blowup-rate.json"), &[]).unwrap();
    run(Experiment::BlowupRate, &loaded, Some(dir.path())).unwrap();
    let csv = std::fs::read_to_string(dir.path().join("rates.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("eps,deviation,hyp_product,a_decay_slope"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    let eps: f64 = rows[0].split(',').next().unwrap().parse().unwrap();
    assert_eq!(eps, 0.2);
}

#[test]
fn identical_configs_give_identical_reports() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let loaded = load(&configs().join("solve.json"), &[]).unwrap();
    run(Experiment::Solve, &loaded, Some(a.path())).unwrap();
    run(Experiment::Solve, &loaded, Some(b.path())).unwrap();
    let read = |d: &Path| std::fs::read(d.join("report.json")).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn unwritable_directory_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"x").unwrap();
    let loaded = load(&configs().join("shoot.json"), &[]).unwrap();
    let err = run(Experiment::Shoot, &loaded, Some(&blocker.join("out"))).unwrap_err();
    assert!(matches!(err, CliError::Io { .. }), "{err}");
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn mismatched_experiment_in_config() {
    let raw =
        json!({"experiment": "solve", "params": {"n": 6, "ell": 1.0, "Q": 24.0}, "grid": {"r_max": 20.0, "N": 100}});
    let loaded = from_value(raw, &[]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let err = run(Experiment::Shoot, &loaded, Some(dir.path())).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}
