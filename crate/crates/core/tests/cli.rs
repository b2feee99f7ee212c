//! End-to-end smoke tests for the `qzt` binary: verb wiring, exit codes,
//! and artifact determinism across two full runs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const TINY_CONFIG: &str = r#"
seed = 7

[data]
profile = "benign"
n_cols = 4
benign_rows = 240
eval_fraction = 0.25

[model]
n_qubits = 2
layers = 1

[training]
learning_rate = 0.05
batch_size = 32
epochs = 2

[simulation]
grid_rows = 2
grid_cols = 2
rounds = 6
attack_segment = [0, 1]
attack_from_round = 1
"#;

fn qzt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qzt"))
        .args(args)
        .output()
        .expect("binary spawns")
}

fn run_ok(args: &[&str]) -> String {
    let out = qzt(args);
    assert!(
        out.status.success(),
        "qzt {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("stdout is UTF-8")
}

fn artifact_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let path = e.unwrap().path();
            (
                path.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&path).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn lifecycle_runs_green_and_artifacts_replay_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("run.toml");
    fs::write(&config, TINY_CONFIG).unwrap();
    let config = config.to_str().unwrap();
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");

    for out_dir in [&out_a, &out_b] {
        let out = out_dir.to_str().unwrap();
        let stdout = run_ok(&["ingest", "--config", config, "--out", out]);
        assert!(stdout.contains("ingest: train"), "{stdout}");
        let stdout = run_ok(&["train", "--config", config, "--out", out]);
        assert!(stdout.contains("epochs"), "{stdout}");
        let stdout = run_ok(&["evaluate", "--config", config, "--out", out]);
        assert!(stdout.contains("AUC"), "{stdout}");
        let stdout = run_ok(&["simulate", "--config", config, "--out", out]);
        assert!(stdout.contains("events"), "{stdout}");
        let stdout = run_ok(&["report", "--config", config, "--out", out]);
        assert!(
            stdout.contains("stages complete [ingest train evaluate simulate]"),
            "{stdout}"
        );
    }

    assert_eq!(artifact_bytes(&out_a), artifact_bytes(&out_b));
}

#[test]
fn seed_override_changes_the_corpus() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("run.toml");
    fs::write(&config, TINY_CONFIG).unwrap();
    let config = config.to_str().unwrap();
    let out_a = tmp.path().join("a");
    let out_b = tmp.path().join("b");

    run_ok(&["ingest", "--config", config, "--out", out_a.to_str().unwrap()]);
    run_ok(&[
        "ingest",
        "--config",
        config,
        "--out",
        out_b.to_str().unwrap(),
        "--seed",
        "8",
    ]);
    let a = fs::read(out_a.join("train_clean.csv")).unwrap();
    let b = fs::read(out_b.join("train_clean.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn missing_ingest_fails_with_data_exit_code() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("run.toml");
    fs::write(&config, TINY_CONFIG).unwrap();
    let out = qzt(&[
        "train",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().join("empty").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("qzt ingest"), "{stderr}");
}

#[test]
fn invalid_config_fails_with_config_exit_code() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("bad.toml");
    fs::write(&config, "[data]\neval_fraction = 1.5\n").unwrap();
    let out = qzt(&[
        "ingest",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eval"));
}

#[test]
fn unknown_config_key_fails_with_config_exit_code() {
    let tmp = TempDir::new().unwrap();
    let config = tmp.path().join("bad.toml");
    fs::write(&config, "[model]\nqubits = 4\n").unwrap();
    let out = qzt(&[
        "ingest",
        "--config",
        config.to_str().unwrap(),
        "--out",
        tmp.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
