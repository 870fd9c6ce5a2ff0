use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn tdpa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tdpa")).args(args).output().expect("binary runs")
}

fn preset(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../presets").join(name).display().to_string()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn short_config(dir: &Path, name: &str, duration: f64) -> String {
    let path = dir.join(format!("{name}.toml"));
    fs::write(
        &path,
        format!(
            r#"
            name = "{name}"
            strategy = "prioritized"
            duration = {duration}
            initial_position = [0.0, 0.0, -0.29]

            [limits]
            tau_max = [2.0, 2.0, 2.0]

            [[operator.waypoints]]
            t = 0.0
            position = [0.0, 0.0, -0.29]

            [[operator.waypoints]]
            t = 0.1
            position = [0.0, 0.0, -0.31]
            "#
        ),
    )
    .unwrap();
    path.display().to_string()
}

#[test]
fn run_writes_csv_and_report() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cfg = short_config(dir.path(), "short", 0.2);
    let res = tdpa(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    let csv = fs::read_to_string(out.join("short.csv")).unwrap();
    assert!(csv.starts_with("t,"));
    assert_eq!(csv.lines().count(), 1 + 1000);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("short.report.json")).unwrap()).unwrap();
    assert_eq!(report["samples"], 1000);
}

#[test]
fn overrides_apply() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cfg = short_config(dir.path(), "short", 0.2);
    let res = tdpa(&[
        "run", "--config", &cfg, "--out", out.to_str().unwrap(), "--duration", "0.1", "--strategy", "norm_limited",
    ]);
    assert_eq!(code(&res), 0);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("short.report.json")).unwrap()).unwrap();
    assert_eq!(report["samples"], 500);
    assert_eq!(report["params"]["strategy"], "norm_limited");
}

#[test]
fn exp1_preset_has_no_joint_violations() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let res = tdpa(&["run", "--config", &preset("exp1.cfg"), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0);
    let mut reader = csv::Reader::from_path(out.join("exp1.csv")).unwrap();
    let column = reader.headers().unwrap().iter().position(|h| h == "joint_viol").unwrap();
    let mut rows = 0;
    for record in reader.records() {
        assert_eq!(&record.unwrap()[column], "0");
        rows += 1;
    }
    assert_eq!(rows, 25_000);
}

#[test]
fn usage_errors_exit_two() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&tdpa(&["run", "--config", "/nonexistent/scenario.toml"])), 2);
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "ts = -1.0\nduration = 1.0\n").unwrap();
    assert_eq!(code(&tdpa(&["run", "--config", bad.to_str().unwrap()])), 2);
    fs::write(&bad, "duration = 1.0\nunknown_key = 3\n").unwrap();
    assert_eq!(code(&tdpa(&["run", "--config", bad.to_str().unwrap()])), 2);
    assert_eq!(code(&tdpa(&["frobnicate"])), 2);
}

#[test]
fn compare_rejects_different_horizons() {
    let dir = TempDir::new().unwrap();
    let a = short_config(dir.path(), "a", 0.2);
    let b = short_config(dir.path(), "b", 0.3);
    let out = dir.path().join("out");
    let res = tdpa(&["compare", "--config", &a, "--config", &b, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 2);
    assert!(String::from_utf8_lossy(&res.stderr).contains("horizons differ"));
}

#[test]
fn compare_of_identical_configs_has_zero_deltas() {
    let dir = TempDir::new().unwrap();
    let a = short_config(dir.path(), "same", 0.2);
    let out = dir.path().join("out");
    let res = tdpa(&["compare", "--config", &a, "--config", &a, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(fs::read(out.join("same_a.csv")).unwrap(), fs::read(out.join("same_b.csv")).unwrap());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("compare.report.json")).unwrap()).unwrap();
    for key in ["delta_mean_contact_force", "delta_mean_alpha", "delta_total_dissipated"] {
        assert_eq!(report[key], 0.0, "{key}");
    }
}

#[test]
fn validate_passes_and_catches_injected_bugs() {
    assert_eq!(code(&tdpa(&["validate", "--cases", "200"])), 0);
    assert_ne!(code(&tdpa(&["validate", "--cases", "200", "--inject", "per-axis-bound"])), 0);
    assert_ne!(code(&tdpa(&["validate", "--cases", "200", "--inject", "projector-idempotence"])), 0);
}

#[test]
fn recompute_matches_and_detects_tampering() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cfg = short_config(dir.path(), "short", 0.2);
    assert_eq!(code(&tdpa(&["run", "--config", &cfg, "--out", out.to_str().unwrap()])), 0);
    let csv = out.join("short.csv");
    let report = out.join("short.report.json");
    let args = ["recompute", "--csv", csv.to_str().unwrap(), "--report", report.to_str().unwrap()];
    assert_eq!(code(&tdpa(&args)), 0);

    let mut value: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    let dissipated = value["total_dissipated"].as_f64().unwrap();
    value["total_dissipated"] = serde_json::json!(dissipated * 1.001 + 1e-6);
    fs::write(&report, serde_json::to_string(&value).unwrap()).unwrap();
    assert_eq!(code(&tdpa(&args)), 1);
}
