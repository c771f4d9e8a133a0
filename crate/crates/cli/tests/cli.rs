//! End-to-end binary tests: artifact determinism across thread counts and
//! the exit-code contract.

use std::fs;
use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_kernprod"))
}

fn write_env(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("env.json");
    fs::write(
        &path,
        r#"{"variant":"iid","kernels":[
            {"p":3,"storage":"dense","entries":[2.0,1.0,0.5,1.0,2.0,1.0,0.5,1.0,2.0]},
            {"p":3,"storage":"dense","entries":[1.0,0.3,0.3,0.3,1.0,0.3,0.3,0.3,1.0]}
        ],"weights":[0.5,0.5],"master_seed":11}"#,
    )
    .unwrap();
    path
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().into_string().unwrap(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn lyapunov_deterministic_across_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let env = write_env(tmp.path());
    for (out, threads) in [("a", "1"), ("b", "4")] {
        let status = bin()
            .args([
                "lyapunov",
                "--env",
                env.to_str().unwrap(),
                "--n",
                "300",
                "--replicas",
                "8",
                "--threads",
                threads,
                "--out",
                tmp.path().join(out).to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = read_dir_sorted(&tmp.path().join("a"));
    let b = read_dir_sorted(&tmp.path().join("b"));
    assert_eq!(a.len(), 2);
    assert_eq!(a, b);
}

#[test]
fn stationary_deterministic_across_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let env = write_env(tmp.path());
    for (out, threads) in [("a", "1"), ("b", "3")] {
        let status = bin()
            .args([
                "stationary",
                "--env",
                env.to_str().unwrap(),
                "--replicas",
                "200",
                "--threads",
                threads,
                "--out",
                tmp.path().join(out).to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    assert_eq!(
        read_dir_sorted(&tmp.path().join("a")),
        read_dir_sorted(&tmp.path().join("b"))
    );
}

#[test]
fn seed_changes_output() {
    let tmp = tempfile::tempdir().unwrap();
    let env = write_env(tmp.path());
    for (out, seed) in [("a", "1"), ("b", "2")] {
        let status = bin()
            .args([
                "lyapunov",
                "--env",
                env.to_str().unwrap(),
                "--n",
                "200",
                "--replicas",
                "4",
                "--seed",
                seed,
                "--out",
                tmp.path().join(out).to_str().unwrap(),
            ])
            .status()
            .unwrap();
        assert!(status.success());
    }
    let a = fs::read(tmp.path().join("a/trajectory.csv")).unwrap();
    let b = fs::read(tmp.path().join("b/trajectory.csv")).unwrap();
    assert_ne!(a, b);
}

#[test]
fn jsonl_format_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let status = bin()
        .args([
            "hilbert-compare",
            "--instances",
            "5",
            "--seed",
            "3",
            "--format",
            "jsonl",
            "--out",
            tmp.path().to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert!(status.success());
    let text = fs::read_to_string(tmp.path().join("comparison.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 5);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["tau_birkhoff"].is_f64());
    }
}

#[test]
fn zero_row_kernel_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let env = tmp.path().join("env.json");
    let kernel = r#"{"p":2,"storage":"dense","entries":[0.0,0.0,1.0,1.0]}"#;
    fs::write(
        &env,
        format!(
            r#"{{"variant":"scripted","kernels":[{}],"master_seed":0}}"#,
            vec![kernel; 12].join(",")
        ),
    )
    .unwrap();
    let out = bin()
        .args([
            "doeblin",
            "--env",
            env.to_str().unwrap(),
            "--out",
            tmp.path().to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("zero row"), "{stderr}");
}

#[test]
fn malformed_config_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let env = write_env(tmp.path());
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, "{\"n\": ").unwrap();
    let status = bin()
        .args([
            "lyapunov",
            "--config",
            cfg.to_str().unwrap(),
            "--env",
            env.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn unknown_config_field_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let env = write_env(tmp.path());
    let cfg = tmp.path().join("cfg.json");
    fs::write(&cfg, r#"{"not_a_field": 1}"#).unwrap();
    let status = bin()
        .args([
            "lyapunov",
            "--config",
            cfg.to_str().unwrap(),
            "--env",
            env.to_str().unwrap(),
        ])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn missing_env_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["lyapunov", "--out", tmp.path().to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let env = write_env(tmp.path());
    let cfg = tmp.path().join("cfg.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"env": "{}", "n": 100, "replicas": 4, "out": "{}"}}"#,
            env.display(),
            tmp.path().join("from_cfg").display()
        ),
    )
    .unwrap();
    let status = bin()
        .args(["lyapunov", "--config", cfg.to_str().unwrap()])
        .status()
        .unwrap();
    assert!(status.success());
    assert!(tmp.path().join("from_cfg/trajectory.csv").exists());
    let text = fs::read_to_string(tmp.path().join("from_cfg/trajectory.csv")).unwrap();
    assert_eq!(text.lines().count(), 101);
    assert!(text.starts_with("n,log_norm_increment,running_lambda,tv_to_previous"));
}
