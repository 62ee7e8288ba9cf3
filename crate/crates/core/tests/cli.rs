//! End-to-end checks of the command-line binary.

use std::path::Path;
use std::process::{Command, Output};

fn davydov(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_davydov")).args(args).env_remove("DAVYDOV_WORKERS").output().expect("spawn binary")
}

const TINY: &str = r#"
[spectral.left]
alpha = 0.05
omega_c = 1.0
[spectral.right]
alpha = 0.05
omega_c = 1.0
[temperature]
mean = 1.0
[discretization]
scheme = "log"
modes = 2
[ansatz]
multiplicity = 2
[integrator]
t_final = 0.2
"#;

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn missing_temperature_is_reported_by_name() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &TINY.replace("[temperature]\nmean = 1.0\n", ""));
    let out = davydov(&["run", "--config", &cfg, "--out", dir.path().join("o").to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("temperature"), "stderr: {err}");
}

#[test]
fn unknown_key_is_line_anchored() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &TINY.replace("multiplicity = 2", "multiplicity = 2\nmultiplicty = 3"));
    let out = davydov(&["bath", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 15"), "stderr: {err}");
}

#[test]
fn run_then_compare_and_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "tiny.toml", TINY);
    let out_dir = dir.path().join("run");
    let out = davydov(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["config.toml", "bath_left.dat", "bath_right.dat", "trajectory.dat", "summary.toml", "panel_sigma_z.dat", "panel_sigma2.dat"] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }
    let summary = std::fs::read_to_string(out_dir.join("summary.toml")).unwrap();
    for key in ["certification_error_left", "max_sigma2", "regime"] {
        assert!(summary.contains(key), "summary lacks {key}");
    }
    let traj = out_dir.join("trajectory.dat");
    let cmp = davydov(&["compare", traj.to_str().unwrap(), traj.to_str().unwrap()]);
    assert!(cmp.status.success());
    assert!(String::from_utf8_lossy(&cmp.stdout).contains("max_abs = 0.000000e0"));
    let spec = davydov(&["spectrum", traj.to_str().unwrap()]);
    assert!(spec.status.success());
    assert!(String::from_utf8_lossy(&spec.stdout).starts_with("# omega amplitude"));
}

#[test]
fn presets_are_listed_and_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = davydov(&["presets", "--write", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let listing = String::from_utf8_lossy(&out.stdout);
    assert!(listing.contains("weak_hot_fast") && listing.contains("intermediate_cold_fast"));
    let n = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(n, listing.lines().count());
}
