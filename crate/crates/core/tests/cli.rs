use std::path::Path;
use std::process::{Command, Output};

use rdsurf::config::RunConfig;

const MURRAY: &str = r#"
[mesh]
kind = "rectangle"
width = 1.0
height = 4.0
nx = 16
ny = 64
boundary = "neumann"

[model]
name = "murray"

[model.parameters]
D = 0.25
C = 1.522
N = 1.0
S = 1.0

[eigen]
k = 8

[continuation]
origins = [1]
max_steps = 5

[verify]
states = 2
"#;

fn run(dir: &Path, config: &str, command: &str, extra: &[&str]) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_rdsurf"))
        .arg(command)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .args(extra)
        .output()
        .unwrap()
}

fn ok(dir: &Path, config: &str, command: &str) {
    let out = run(dir, config, command, &[]);
    assert!(out.status.success(), "{command}: {}", String::from_utf8_lossy(&out.stderr));
}

fn error_code(out: &Output) -> String {
    assert!(!out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    v["error"]["code"].as_str().unwrap().to_string()
}

/// Column `col` of a CSV file, skipping the header.
fn column(path: &Path, col: usize) -> Vec<String> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(col).unwrap_or("").to_string())
        .collect()
}

#[test]
fn eigen_writes_the_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    ok(dir.path(), MURRAY, "eigen");
    let out = dir.path().join("out");
    let lambdas: Vec<f64> = column(&out.join("eigen/spectrum.csv"), 1).iter().map(|s| s.parse().unwrap()).collect();
    assert_eq!(lambdas.len(), 8);
    let exact = (std::f64::consts::PI / 4.0).powi(2);
    assert!((lambdas[1] / exact - 1.0).abs() < 0.01);
    assert!(out.join("mesh.off").exists());
    assert!(out.join("eigen/mode_0007.csv").exists());
}

#[test]
fn seeds_make_runs_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let out = run(d.path(), MURRAY, "eigen", &["--seed", "5", "--workers", "1"]);
        assert!(out.status.success());
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("out/eigen/spectrum.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn errors_are_reported_as_json() {
    let dir = tempfile::tempdir().unwrap();
    let too_many = MURRAY.replace("k = 8", "k = 5000");
    assert_eq!(error_code(&run(dir.path(), &too_many, "eigen", &[])), "config");
    assert_eq!(error_code(&run(dir.path(), MURRAY, "trace", &[])), "missing_prerequisite");
    let unknown = format!("{MURRAY}\n[extra]\nx = 1\n");
    assert_eq!(error_code(&run(dir.path(), &unknown, "eigen", &[])), "config");
    assert_eq!(error_code(&run(dir.path(), MURRAY, "upsample", &[])), "config");
}

#[test]
fn pipeline_from_spectrum_to_verified_states() {
    let dir = tempfile::tempdir().unwrap();
    for c in ["eigen", "bifurcations", "trace", "verify", "dispersion"] {
        ok(dir.path(), MURRAY, c);
    }
    let out = dir.path().join("out");
    let alphas: Vec<f64> = column(&out.join("inventory.csv"), 1).iter().map(|s| s.parse().unwrap()).collect();
    assert!(alphas.windows(2).all(|w| w[0] <= w[1]));
    assert!((alphas[0] - 12.0228).abs() < 12.0228 * 5e-3);
    assert!((alphas[1] - 13.736).abs() < 13.736 * 5e-3);
    assert!(out.join("patterns/pattern_0001.vtk").exists());

    assert_eq!(column(&out.join("branches/status.csv"), 1), vec!["ok"]);
    let steps = column(&out.join("branches/branch_0001.csv"), 0);
    assert_eq!(steps.len(), 6);
    let first: f64 = column(&out.join("branches/branch_0001.csv"), 1)[0].parse().unwrap();
    assert!((first - alphas[1]).abs() < 0.05 * alphas[1]);

    let outcomes = column(&out.join("verify.csv"), 4);
    assert!(!outcomes.is_empty());
    assert!(outcomes.iter().all(|o| o == "steady"));
    let unstable = column(&out.join("dispersion_modes.csv"), 3);
    assert_eq!(unstable.len(), 8);
}

#[test]
fn marginal_curve_matches_the_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"
[mesh]
kind = "cap"
radius = 1.0
zeta = 0.5
rings = 6
boundary = "dirichlet"

[model]
name = "brusselator"

[marginal]
lambda = 72.563
scale = "radius"
from = 0.8
to = 1.2
count = 5
"#;
    ok(dir.path(), config, "marginal");
    let path = dir.path().join("out/marginal.csv");
    let scales = column(&path, 0);
    let alphas = column(&path, 2);
    assert_eq!(alphas.len(), 5);
    let b = rdsurf::models::Brusselator::default();
    for (s, a) in scales.iter().zip(&alphas) {
        let r: f64 = s.parse().unwrap();
        let a: f64 = a.parse().unwrap();
        // Radius R behaves as the unit cap with eigenvalue Λ / R².
        let want = rdsurf::models::RdModel::closed_form_parameter(&b, 72.563 / (r * r)).unwrap().unwrap();
        assert!((a - want).abs() <= 1e-10 * want);
    }
}

#[test]
fn config_text_round_trip() {
    let c = RunConfig::parse(MURRAY).unwrap();
    assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
}
