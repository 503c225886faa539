//! End-to-end tests of the command-line front end: exit-status contract,
//! output determinism, and the config validation surface.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_toa-kg")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("spawn toa-kg")
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, json).unwrap();
    path
}

const SUBSPACE: &str = r#"{
  "schema_version": 1,
  "mass": 1.0,
  "epsilon": 0.2,
  "detector": { "position": [0.0, 0.0, 2.0] },
  "packet": { "type": "radial-gaussian-in-z", "z0": 10.0, "width": 1.0 },
  "grids": { "radial_n": 4096, "z_window": [-2.0, 22.0], "t_window": [-12.0, 12.0], "t_samples": 512 },
  "seed": 11
}"#;

const ONAXIS: &str = r#"{
  "schema_version": 1,
  "mass": 1.0,
  "epsilon": 0.001,
  "detector": { "position": [12.0, 0.0, 0.0] },
  "packet": { "type": "gaussian", "k0": [1.2, 0.0, 0.0], "sigma": 0.1, "x0": [0.0, 0.0, 0.0] },
  "grids": { "radial_n": 2048, "t_window": [-40.0, 80.0], "t_samples": 1024 },
  "seed": 11
}"#;

#[test]
fn spectrum_of_subspace_packet_has_unit_probability() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", SUBSPACE);
    let out = dir.path().join("out");
    let r = run(&[
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    let p: f64 = summary
        .lines()
        .find_map(|l| l.strip_prefix("p_detect = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((p - 1.0).abs() <= 1e-4, "p_detect {p}");
    assert!(out.join("spectrum.csv").exists());
    assert!(out.join("manifest.json").exists());
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("config_sha256"));
    assert!(manifest.contains("spectrum.csv"));
}

#[test]
fn spectrum_of_aimed_gaussian_reports_classical_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", ONAXIS);
    let out = dir.path().join("out");
    let r = run(&[
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    let get = |key: &str| -> f64 {
        summary
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{key} = ")))
            .unwrap_or_else(|| panic!("{key} missing in {summary}"))
            .parse()
            .unwrap()
    };
    let p = get("p_detect");
    assert!(p > 0.0 && p <= 1.0 + 1e-6, "p_detect {p}");
    let mean = get("conditional_mean");
    let std = get("spectrum_std");
    let classical = get("classical_t");
    assert!((mean - classical).abs() <= 2.0 * std);
    // Parseval route agreement between spectrum total and projection norm
    assert!(get("parseval_abs_error") <= 1e-6);
}

#[test]
fn csv_outputs_are_byte_identical_across_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", SUBSPACE);
    let (o1, o2) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&o1, &o2] {
        let r = run(&[
            "spectrum",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(r.status.success());
    }
    let a = std::fs::read(o1.join("spectrum.csv")).unwrap();
    let b = std::fs::read(o2.join("spectrum.csv")).unwrap();
    assert_eq!(a, b, "spectrum.csv differs between identical runs");
    let a = std::fs::read(o1.join("summary.txt")).unwrap();
    let b = std::fs::read(o2.join("summary.txt")).unwrap();
    assert_eq!(a, b, "summary.txt differs between identical runs");
}

#[test]
fn missing_field_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        r#"{"schema_version": 1, "mass": 1.0}"#,
    );
    let r = run(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("epsilon"), "stderr: {err}");
}

#[test]
fn invalid_field_value_exits_2_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SUBSPACE.replace("\"epsilon\": 0.2", "\"epsilon\": -0.5");
    let cfg = write_config(dir.path(), "bad.json", &bad);
    let r = run(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("`epsilon`"), "stderr: {err}");
}

#[test]
fn too_narrow_t_window_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = SUBSPACE.replace("[-12.0, 12.0]", "[-0.4, 0.4]");
    let cfg = write_config(dir.path(), "bad.json", &bad);
    let out = dir.path().join("out");
    let r = run(&[
        "spectrum",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(r.status.code(), Some(2));
    let err = String::from_utf8_lossy(&r.stderr);
    assert!(err.contains("window"), "stderr: {err}");
}

#[test]
fn verify_all_passes_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", SUBSPACE);
    let out = dir.path().join("out");
    let r = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--suite",
        "all",
    ]);
    assert_eq!(
        r.status.code(),
        Some(0),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&r.stdout),
        String::from_utf8_lossy(&r.stderr)
    );
    for f in [
        "verify_orthogonality.csv",
        "verify_completeness.csv",
        "verify_sweep.csv",
        "verify_commutator.csv",
        "verify_summary.txt",
        "manifest.json",
    ] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("overall = PASS"));
}

#[test]
fn verify_hermiticity_with_forced_wrong_ordering_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let forced = SUBSPACE.replace("\"seed\": 11", "\"seed\": 11, \"ordering_exponent\": 0.0");
    let cfg = write_config(dir.path(), "cfg.json", &forced);
    let out = dir.path().join("out");
    let r = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--suite",
        "hermiticity",
    ]);
    assert_eq!(r.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert!(stdout.contains("FAIL"), "stdout: {stdout}");
}

#[test]
fn verify_commutator_reports_small_residual() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", SUBSPACE);
    let out = dir.path().join("out");
    let r = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--suite",
        "commutator",
    ]);
    assert_eq!(r.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&r.stdout);
    let line = stdout
        .lines()
        .find(|l| l.starts_with("commutator_max_residual"))
        .unwrap();
    let value: f64 = line
        .split(" = ")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(value <= 1e-6, "residual {value}");
}

#[test]
fn limits_defaults_pass_and_ultra_relativistic_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let good = r#"{
      "schema_version": 1,
      "mass": 100.0,
      "epsilon": 0.05,
      "detector": { "position": [0.5, 0.0, 0.0] },
      "packet": { "type": "gaussian", "k0": [10.0, 0.0, 0.0], "sigma": 0.5, "x0": [0.0, 0.0, 0.0] },
      "grids": { "radial_n": 2048, "t_window": [-60.0, 80.0], "t_samples": 1024 },
      "limits": { "kmax": 1.0, "t": 1.0 }
    }"#;
    let cfg = write_config(dir.path(), "good.json", good);
    let out = dir.path().join("out");
    let r = run(&[
        "limits",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        r.status.code(),
        Some(0),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&r.stdout),
        String::from_utf8_lossy(&r.stderr)
    );
    assert!(out.join("limits_nr.csv").exists());
    assert!(out.join("limits_classical.csv").exists());

    let ultra = good.replace("\"kmax\": 1.0", "\"kmax\": 80.0");
    let cfg = write_config(dir.path(), "ultra.json", &ultra);
    let r = run(&["limits", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn packet_prints_normalized_config() {
    let dir = tempfile::tempdir().unwrap();
    // minimal config: defaults (radial_n, t_samples, seed, ordering) filled in
    let minimal = r#"{
      "schema_version": 1,
      "mass": 1.0,
      "epsilon": 0.2,
      "detector": { "position": [0.0, 0.0, 2.0] },
      "packet": { "type": "radial-gaussian-in-z", "z0": 10.0, "width": 1.0 },
      "grids": { "t_window": [-12.0, 12.0] }
    }"#;
    let cfg = write_config(dir.path(), "cfg.json", minimal);
    let r = run(&["packet", "--config", cfg.to_str().unwrap()]);
    assert!(r.status.success());
    let echoed: serde_json::Value = serde_json::from_slice(&r.stdout).unwrap();
    assert_eq!(echoed["grids"]["radial_n"], 16384);
    assert_eq!(echoed["grids"]["t_samples"], 2048);
    assert_eq!(echoed["ordering_exponent"], 0.5);
    assert_eq!(echoed["seed"], 0);
}

#[test]
fn thread_cap_env_var_is_validated_and_output_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "cfg.json", SUBSPACE);
    let out1 = dir.path().join("o1");
    let out2 = dir.path().join("o2");
    let r = Command::new(bin())
        .args(["spectrum", "--config", cfg.to_str().unwrap(), "--out", out1.to_str().unwrap()])
        .env("TOA_KG_THREADS", "1")
        .output()
        .unwrap();
    assert!(r.status.success());
    let r = Command::new(bin())
        .args(["spectrum", "--config", cfg.to_str().unwrap(), "--out", out2.to_str().unwrap()])
        .env("TOA_KG_THREADS", "4")
        .output()
        .unwrap();
    assert!(r.status.success());
    assert_eq!(
        std::fs::read(out1.join("spectrum.csv")).unwrap(),
        std::fs::read(out2.join("spectrum.csv")).unwrap(),
        "outputs must not depend on the thread cap"
    );
    let r = Command::new(bin())
        .args(["spectrum", "--config", cfg.to_str().unwrap()])
        .env("TOA_KG_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(r.status.code(), Some(2));
}
