use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn edpsgd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_edpsgd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn train_writes_a_report_and_attack_amends_it() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("run.json");
    let config = config_path("quickstart.toml");
    let out = edpsgd(&[
        "train",
        config.to_str().unwrap(),
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let text = std::fs::read_to_string(&report).unwrap();
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(value["privacy"]["epsilon"].as_f64().unwrap() > 0.0);
    assert!(value.get("attack").is_none());

    let out = edpsgd(&["attack", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let amended = json(&out);
    assert_eq!(amended["attack"]["shadow_seed"], 8);
    assert!(amended["attack"]["auc"].as_f64().is_some());
}

#[test]
fn seed_override_and_thread_count() {
    let config = config_path("quickstart.toml");
    let config = config.to_str().unwrap();
    let a = json(&edpsgd(&["train", config, "--seed", "99"]));
    let b = json(&edpsgd(&[
        "train",
        config,
        "--seed",
        "99",
        "--threads",
        "3",
    ]));
    assert_eq!(a["config"]["seed"], 99);
    assert_eq!(a["checkpoint"], b["checkpoint"]);
    assert_eq!(a["privacy"], b["privacy"]);
}

#[test]
fn account_prints_the_budget() {
    let out = edpsgd(&[
        "account",
        "--z0",
        "1",
        "--epochs",
        "1",
        "--steps-per-epoch",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["rho_total"], 0.5);
    assert!((v["epsilon"].as_f64().unwrap() - 5.298_525_912_188_081).abs() < 1e-12);

    let linear = json(&edpsgd(&[
        "account",
        "--z0",
        "1",
        "--decay",
        "linear",
        "--tau",
        "0.1",
        "--epochs",
        "5",
        "--steps-per-epoch",
        "3",
    ]));
    let flat = json(&edpsgd(&[
        "account",
        "--z0",
        "1",
        "--epochs",
        "5",
        "--steps-per-epoch",
        "3",
    ]));
    assert!(linear["epsilon"].as_f64().unwrap() > flat["epsilon"].as_f64().unwrap());
}

#[test]
fn configuration_problems_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "seed = 1\noptimizer = \"adamw\"\n").unwrap();
    for args in [
        vec!["train", bad.to_str().unwrap()],
        vec!["train", "/definitely/missing.toml"],
        vec![
            "account",
            "--z0",
            "0",
            "--epochs",
            "1",
            "--steps-per-epoch",
            "1",
        ],
        vec![
            "account",
            "--z0",
            "1",
            "--epochs",
            "1",
            "--steps-per-epoch",
            "1",
            "--delta",
            "2",
        ],
        vec![
            "account",
            "--z0",
            "1",
            "--decay",
            "cosine",
            "--epochs",
            "1",
            "--steps-per-epoch",
            "1",
        ],
        vec!["frobnicate"],
    ] {
        let out = edpsgd(&args);
        assert_eq!(
            out.status.code(),
            Some(1),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let bench = config_path("quickstart.toml");
    let out = edpsgd(&["bench", bench.to_str().unwrap(), "--repetitions", "2"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn runtime_problems_exit_with_two() {
    let out = edpsgd(&["attack", "/definitely/missing.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-target"));
}

#[test]
fn help_exits_cleanly() {
    let out = edpsgd(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in ["train", "attack", "bench", "account"] {
        assert!(text.contains(sub));
    }
}
