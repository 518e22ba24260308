//! The `rshock` binary: exit codes, determinism and the frozen golden manifest.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

/// sha256 of `manifest.json` for the cosine flow_convergence run at β = 10².
const GOLDEN_FLOW_MANIFEST: &str = "f65e29168fbe30227f1e320331394368ab22d9e8863ac085cb385137522b9fa7";

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(format!("{name}.json"))
}

fn rshock(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rshock"));
    cmd.args(args);
    if let Some(t) = threads {
        cmd.env("RSHOCK_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn run_into(cfg: &str, out: &Path, extra: &[&str], threads: Option<&str>) -> Output {
    let cfg = config(cfg);
    let dir = format!("output_dir={}", out.display());
    let mut args = vec!["run", cfg.to_str().unwrap(), "--set", &dir];
    args.extend_from_slice(extra);
    rshock(&args, threads)
}

fn manifest_hash(dir: &Path) -> String {
    hex::encode(Sha256::digest(std::fs::read(dir.join("manifest.json")).unwrap()))
}

#[test]
fn flow_convergence_manifest_matches_the_golden_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let beta = ["--set", "physics.beta_list=[100]"];
    assert!(run_into("flow_convergence", &a, &beta, Some("1")).status.success());
    assert!(run_into("flow_convergence", &b, &beta, Some("3")).status.success());
    assert_eq!(manifest_hash(&a), manifest_hash(&b), "thread count changed the output");
    let manifest = std::fs::read_to_string(a.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"trajectory.csv\"") && manifest.contains("\"error_beta0.csv\""));
    assert_eq!(manifest_hash(&a), GOLDEN_FLOW_MANIFEST);
}

#[test]
fn too_small_grid_exits_1_naming_the_bound() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_into("flow_convergence", tmp.path(), &["--set", "grid.n=3"], None);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("N ≥ 8"));
    assert_eq!(rshock(&["run", "/nonexistent.json"], None).status.code(), Some(1));
}

#[test]
fn assert_on_the_two_site_benchmark_exits_0() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_into("tropical_voronoi", tmp.path(), &["--assert", "--set", "physics.hamiltonian=twowell"], None);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("PASS shock_vs_voronoi_mismatch"));
}

#[test]
fn failed_assertion_exits_3_and_solver_failure_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let wrong_sites = ["--assert", "--set", "physics.hamiltonian=twowell", "--set", "physics.sites=[[0.1,0.1],[0.5,0.5]]"];
    assert_eq!(run_into("tropical_voronoi", &tmp.path().join("a"), &wrong_sites, None).status.code(), Some(3));
    let starved = [
        "--set",
        "numerics.flow.newton_max_iters=1",
        "--set",
        "numerics.flow.newton_tol=1e-300",
        "--set",
        "numerics.flow.max_halvings=0",
    ];
    let out = run_into("flow_convergence", &tmp.path().join("b"), &starved, None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Newton"));
}

#[test]
fn list_builtins_names_every_benchmark() {
    let out = rshock(&["list-builtins"], None);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for name in ["zero", "flat", "cosine", "twowell", "wells3", "singlemin", "wells:", "random:"] {
        assert!(text.contains(name), "{name} missing");
    }
}

#[test]
fn shipped_configs_load() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        rshock::experiment::ExperimentConfig::load(&path, &[]).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert_eq!(n, 8);
}
