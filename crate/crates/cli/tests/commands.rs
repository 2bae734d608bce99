use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn canonstat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_canonstat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    std::fs::copy(configs().join("cos-tensor.json"), dir.join("cos-tensor.json")).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn kernel_analyze_reports_norms_and_defect() {
    let cfg = configs().join("mdep-cos-a.toml");
    let v = json_stdout(&canonstat(&["kernel", "analyze", "--config", cfg.to_str().unwrap()]));
    assert_eq!(v["m"], 2);
    assert_eq!(v["sum_abs"], 2.0);
    assert_eq!(v["sum_sqrt_abs"], 2.0);
    assert!(v["canonical_defect"].as_f64().unwrap() <= 1e-10);
    for key in ["config_hash", "master_seed", "version"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn bound_compute_condition_a() {
    let cfg = configs().join("mdep-cos-a.toml");
    let v = json_stdout(&canonstat(&["bound", "compute", "--config", cfg.to_str().unwrap(), "--condition", "A"]));
    let cert = &v["certificate"];
    assert!((cert["bf"].as_f64().unwrap() - 4.0).abs() < 1e-12);
    assert!(v["condition_report"]["passed"].as_bool().unwrap());
    assert!(cert["trace"].as_array().unwrap().iter().any(|e| e["name"] == "c3"));
}

#[test]
fn function_kernel_projection() {
    let cfg = configs().join("iid-product-hoeffding.toml");
    let v = json_stdout(&canonstat(&["kernel", "analyze", "--config", cfg.to_str().unwrap()]));
    assert!((v["mean"].as_f64().unwrap() - 0.25).abs() < 1e-12);
    assert!(v["canonical_defect"].as_f64().unwrap() > 0.1);
    assert!(v["projected_canonical_defect"].as_f64().unwrap() <= 1e-8);
}

#[test]
fn basis_check_passes_for_both_bases() {
    for name in ["mdep-cos-a.toml", "markov-sum-dedecker.toml"] {
        let cfg = configs().join(name);
        let v = json_stdout(&canonstat(&["basis", "check", "--config", cfg.to_str().unwrap()]));
        assert!(v["orthonormality"]["passed"].as_bool().unwrap(), "{name}");
    }
}

#[test]
fn stat_eval_matches_between_paths() {
    let dir = tempfile::tempdir().unwrap();
    let sample = dir.path().join("sample.txt");
    std::fs::write(&sample, "0.1\n0.25\n0.7\n0.95\n0.5\n").unwrap();
    let cfg = configs().join("mdep-cos-a.toml");
    let v = json_stdout(&canonstat(&[
        "stat",
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--sample",
        sample.to_str().unwrap(),
    ]));
    assert_eq!(v["n"], 5);
    let (vn, vs) = (v["v_naive"].as_f64().unwrap(), v["v_series"].as_f64().unwrap());
    let (un, us) = (v["u_naive"].as_f64().unwrap(), v["u_series"].as_f64().unwrap());
    assert!((vn - vs).abs() < 1e-12 && (un - us).abs() < 1e-12);
}

#[test]
fn bound_curve_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("markov-cos-b.toml");
    let out = canonstat(&["bound", "curve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("bound_curve.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert!(lines[0].starts_with("# config_hash="));
    assert_eq!(lines[1], "x,bound_A,bound_B,dedecker,hoeffding");
    let fields: Vec<&str> = lines[2].split(',').collect();
    assert_eq!(fields.len(), 5);
    // Geometric φ of a Markov chain has no Gaussian envelope: only B applies.
    assert!(fields[1].is_empty() && !fields[2].is_empty());
}

#[test]
fn malformed_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let body = std::fs::read_to_string(configs().join("mdep-cos-a.toml"))
        .unwrap()
        .replace("window = 2", "window = 2\nwindwo = 3");
    let cfg = write_config(dir.path(), "bad.toml", &body);
    let out = canonstat(&["kernel", "analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("windwo"));
}

#[test]
fn violated_envelope_exits_nonzero() {
    // Claiming a kernel range ten times too narrow gives a false bound.
    let dir = tempfile::tempdir().unwrap();
    let body = std::fs::read_to_string(configs().join("iid-product-hoeffding.toml"))
        .unwrap()
        .replace("b = 1.0", "b = 0.1")
        .replace("reps = 100000", "reps = 2000");
    let cfg = write_config(dir.path(), "wrong.toml", &body);
    let out_dir = dir.path().join("out");
    let out = canonstat(&["verify", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let report: Value = serde_json::from_slice(&std::fs::read(out_dir.join("report.json")).unwrap()).unwrap();
    assert!(!report["envelope"]["violations"].as_array().unwrap().is_empty());
}

#[test]
fn seed_override_changes_hash_and_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("mdep-cos-a.toml");
    let run = |seed: &str, sub: &str| {
        let out = dir.path().join(sub);
        let status = canonstat(&[
            "mc", "run", "--config", cfg.to_str().unwrap(), "--seed", seed, "--reps", "500", "--out",
            out.to_str().unwrap(),
        ]);
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        std::fs::read_to_string(out.join("curve.csv")).unwrap()
    };
    let (a, b, c) = (run("1", "a"), run("2", "b"), run("1", "c"));
    assert_eq!(a, c);
    assert_ne!(a.lines().next(), b.lines().next());
    assert!(a.lines().next().unwrap().contains("master_seed=1 "));
}
