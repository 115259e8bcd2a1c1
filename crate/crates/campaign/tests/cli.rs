use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use aurora_campaign::cli::{EXIT_CONFIG, EXIT_EMPTY, EXIT_IO, EXIT_USAGE};

fn aurora(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aurora"))
        .args(args)
        .env_remove("SOURCE_DATE_EPOCH")
        .output()
        .unwrap()
}

fn text(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes).into_owned()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("campaign.toml");
    fs::write(&path, body).unwrap();
    path
}

const SMALL: &str = "trials = 4\nbootstrap_resamples = 200\n";

#[test]
fn run_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("results");
    let o = aurora(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "42",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    for f in [
        "records.csv",
        "summary.csv",
        "result.json",
        "ae_baseline_vs_aurora.svg",
        "z_vs_ideal.svg",
        "ae_log_zne.svg",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    assert!(text(&o.stdout).contains("delta_phi* = 0.1500000000"));
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(out.join("result.json")).unwrap()).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["config"]["master_seed"], 42);
    assert!(json["provenance"]["timestamp"].is_null());
}

#[test]
fn source_date_epoch_sets_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "trials = 2\nconditions = [\"baseline\"]\nbootstrap_resamples = 200\n",
    );
    let o = Command::new(env!("CARGO_BIN_EXE_aurora"))
        .args([
            "run",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().to_str().unwrap(),
        ])
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .unwrap();
    assert!(o.status.success());
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("result.json")).unwrap()).unwrap();
    assert_eq!(json["provenance"]["timestamp"], "unix:1700000000");
}

#[test]
fn stats_reproduces_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("r");
    assert!(aurora(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());
    let again = dir.path().join("again");
    let o = aurora(&[
        "stats",
        "--records",
        out.join("records.csv").to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        again.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", text(&o.stderr));
    assert_eq!(
        fs::read(out.join("summary.csv")).unwrap(),
        fs::read(again.join("summary.csv")).unwrap()
    );
}

#[test]
fn plot_redraws_from_result() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "trials = 3\nconditions = [\"baseline\", \"aurora_dd\"]\nbootstrap_resamples = 200\n",
    );
    let out = dir.path().join("r");
    assert!(aurora(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap()
    ])
    .status
    .success());
    let figs = dir.path().join("figs");
    let o = aurora(&[
        "plot",
        "--result",
        out.join("result.json").to_str().unwrap(),
        "--out",
        figs.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(figs.join("ae_baseline_vs_aurora.svg").exists());
    assert!(text(&o.stdout).contains("skipped"));
}

#[test]
fn calibrate_prints_offset_and_writes_curves() {
    let dir = tempfile::tempdir().unwrap();
    let o = aurora(&["calibrate", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert!(text(&o.stdout).contains("delta_phi* = 0.1500000000"));
    let json: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("calibration.json")).unwrap()).unwrap();
    assert_eq!(
        json["calibration"]["per_phi_curves"]
            .as_array()
            .unwrap()
            .len(),
        4
    );
    assert_eq!(json["closed_loop"].as_array().unwrap().len(), 4);
}

#[test]
fn usage_errors_print_synopsis() {
    let o = aurora(&["bogus"]);
    assert_eq!(o.status.code(), Some(EXIT_USAGE));
    assert!(text(&o.stderr).contains("Usage"));
    assert_eq!(aurora(&[]).status.code(), Some(EXIT_USAGE));
    assert_eq!(
        aurora(&["run", "--seed", "abc"]).status.code(),
        Some(EXIT_USAGE)
    );
    assert!(aurora(&["--help"]).status.success());
}

#[test]
fn config_errors_name_the_problem() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "trials = 0\n");
    let o = aurora(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    assert!(text(&o.stderr).contains("error[config]") && text(&o.stderr).contains("trials"));

    let cfg = write_config(dir.path(), "master_seed = 3\nsots = 10\n");
    let o = aurora(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(EXIT_CONFIG));
    assert!(text(&o.stderr).contains("unknown key 'sots' at line 2"));
}

#[test]
fn missing_inputs_are_io_errors() {
    let o = aurora(&["run", "--config", "/nonexistent/campaign.toml"]);
    assert_eq!(o.status.code(), Some(EXIT_IO));
    let o = aurora(&["plot", "--result", "/nonexistent/result.json"]);
    assert_eq!(o.status.code(), Some(EXIT_IO));
    assert!(text(&o.stderr).contains("error[io]"));
}

#[test]
fn empty_campaign_has_its_own_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "conditions = []\n");
    let out = dir.path().join("r");
    let o = aurora(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(EXIT_EMPTY));
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1);
}
