use std::path::Path;
use std::process::{Command, Output};

use aggid::io::{read_field, write_potential};
use aggid::{PotentialSpec, SpatialGrid};
use serde_json::Value;

const SMALL: [&str; 6] = ["--set", "grid.half_count=20", "--set", "time.horizon=0.3", "--set", "time.count=30"];
const IDENT: [&str; 8] = [
    "--set",
    "grid.half_count=50",
    "--set",
    "time.horizon=1",
    "--set",
    "time.count=50",
    "--set",
    "solver.eps=1e-4",
];
const RA: [&str; 8] = [
    "--set",
    "potential.kind=repulsive_attractive",
    "--set",
    "potential.theta1=5",
    "--set",
    "potential.theta2=2",
    "--set",
    "potential.m0=15",
];

fn aggid(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aggid"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], out: &Path) -> Output {
    let o = aggid(args, out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    o
}

fn join(parts: &[&[&str]]) -> Vec<String> {
    parts.iter().flat_map(|p| p.iter()).map(|s| s.to_string()).collect()
}

fn args(v: &[String]) -> Vec<&str> {
    v.iter().map(String::as_str).collect()
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn zero_potential_keeps_the_initial_density() {
    let dir = tempfile::tempdir().unwrap();
    let a = join(&[&["simulate", "--set", "potential.kind=zero"], &SMALL]);
    ok(&args(&a), dir.path());
    let field = read_field(&dir.path().join("clean.csv"), 1.0).unwrap();
    for n in 1..field.num_frames() {
        assert_eq!(field.frame(n), field.frame(0));
    }
}

#[test]
fn missing_potential_kind_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = aggid(&["simulate", "--set", "grid.half_count=20"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("potential.kind"));
}

#[test]
fn simulate_conserves_mass() {
    let dir = tempfile::tempdir().unwrap();
    let a = join(&[&["simulate"], &RA, &SMALL]);
    ok(&args(&a), dir.path());
    let field = read_field(&dir.path().join("clean.csv"), 1.0).unwrap();
    let m0 = field.mass(0);
    for n in 0..field.num_frames() {
        assert!((field.mass(n) - m0).abs() < 1e-10 * m0);
    }
}

#[test]
fn reruns_write_identical_files() {
    let a = join(&[&["identify", "--gamma", "10"], &RA, &IDENT]);
    let first = tempfile::tempdir().unwrap();
    let second = tempfile::tempdir().unwrap();
    ok(&args(&a), first.path());
    ok(&args(&a), second.path());
    for name in ["potential.csv", "diagnostics.csv", "errors.csv", "report.json"] {
        let x = std::fs::read(first.path().join(name)).unwrap();
        let y = std::fs::read(second.path().join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
}

#[test]
fn true_potential_has_zero_error() {
    let dir = tempfile::tempdir().unwrap();
    let sim = join(&[&["simulate"], &RA, &SMALL]);
    ok(&args(&sim), dir.path());
    let grid = SpatialGrid::new(1, 1.0, 20).unwrap();
    let phi = PotentialSpec::repulsive_attractive(5.0, 2.0, 15.0).eval(&grid, None).unwrap();
    let phi_path = dir.path().join("truth.csv");
    write_potential(&phi_path, &phi).unwrap();
    let clean = dir.path().join("clean.csv");
    let (clean, phi_path) = (clean.display().to_string(), phi_path.display().to_string());
    let ev = join(&[&["evaluate", "--clean", &clean, "--potential", &phi_path], &RA, &SMALL]);
    ok(&args(&ev), dir.path());
    let r = report(dir.path());
    assert_eq!(r["e_star_average"].as_f64(), Some(0.0));
    assert_eq!(r["e_star_max"].as_f64(), Some(0.0));
    assert_eq!(r["e_phi"].as_f64(), Some(0.0));
}

#[test]
fn one_window_matches_static_identification() {
    let id = join(&[&["identify"], &RA, &IDENT]);
    let tv = join(&[&["identify-tv", "--q", "1"], &RA, &IDENT]);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    ok(&args(&id), a.path());
    ok(&args(&tv), b.path());
    let x = std::fs::read(a.path().join("potential.csv")).unwrap();
    let y = std::fs::read(b.path().join("potential_001.csv")).unwrap();
    assert_eq!(x, y);
    let errors_a = std::fs::read(a.path().join("errors.csv")).unwrap();
    let errors_b = std::fs::read(b.path().join("errors.csv")).unwrap();
    assert_eq!(errors_a, errors_b);
}

#[test]
fn agent_density_has_unit_mass() {
    // Boids start well inside the box, so no kernel mass leaves the domain.
    let dir = tempfile::tempdir().unwrap();
    let boids = ["--set", "grid.dim=2", "--set", "potential.kind=zero", "--set", "agents.source=boids", "--set", "agents.count=2000"];
    let a = join(&[&["agents"], &boids, &SMALL]);
    ok(&args(&a), dir.path());
    let r = report(dir.path());
    assert!(r["max_mass_deviation"].as_f64().unwrap() < 0.03);
    assert!(dir.path().join("agents.csv").exists());
    assert!(dir.path().join("density.csv").exists());
}

#[test]
fn regularizer_table_has_eight_cells() {
    let dir = tempfile::tempdir().unwrap();
    let small = ["--set", "grid.half_count=8", "--set", "time.horizon=0.1", "--set", "time.count=5", "--set", "timevary.q=1"];
    let a = join(&[&["compare-reg"], &small, &RA]);
    ok(&args(&a), dir.path());
    let cells = std::fs::read_to_string(dir.path().join("cells.csv")).unwrap();
    assert_eq!(cells.lines().count(), 1 + 8);
    let table = std::fs::read_to_string(dir.path().join("table.csv")).unwrap();
    assert_eq!(table.lines().count(), 1 + 4);
}
