use lie_doubles::doubles::{PhasePoint, Space};
use lie_doubles::flows::Trajectory;
use lie_doubles::lie::LieData;
use lie_doubles::sample;
use std::path::PathBuf;
use std::process::{Command, Output};

fn doubles(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_doubles")).args(args).output().expect("binary runs")
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("doubles-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

const KINETIC: &str = r#"{"letters":["J","J"],"part":"re","coeff":-0.5}"#;

#[test]
fn verify_rmatrix_passes_and_is_byte_identical() {
    let a = doubles(&["verify", "--suite", "rmatrix", "--seed", "7"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let report: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["suite"], "rmatrix");
    assert_eq!(a.stdout, doubles(&["verify", "--suite", "rmatrix", "--seed", "7"]).stdout);
}

#[test]
fn verify_requires_a_seed() {
    assert_eq!(doubles(&["verify", "--suite", "lie"]).status.code(), Some(2));
}

#[test]
fn unknown_suite_is_a_schema_error() {
    assert_eq!(doubles(&["verify", "--suite", "nope", "--seed", "1"]).status.code(), Some(2));
}

#[test]
fn zero_time_simulation_returns_the_initial_point() {
    let p = sample::point(&mut sample::rng(3), &LieData::su(3), Space::Cotangent, 0.5, 0.3);
    let init = scratch("init.json");
    std::fs::write(&init, serde_json::to_string(&p).unwrap()).unwrap();
    let out = doubles(&[
        "simulate", "--space", "cotangent", "--family", "pi2", "--hamiltonian", KINETIC, "--n", "3", "--t-max", "0", "--initial",
        init.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let traj: Trajectory = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(traj.points.len(), 1);
    assert_eq!(traj.points[0], p);
}

#[test]
fn mismatched_space_and_family_exit_with_schema_error() {
    let out = doubles(&[
        "simulate", "--space", "red_cot_1", "--form", "reduced", "--family", "pi1", "--hamiltonian", KINETIC, "--seed", "1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("schema error"));
}

#[test]
fn malformed_hamiltonian_exits_with_schema_error() {
    let out = doubles(&["simulate", "--space", "cotangent", "--family", "pi2", "--hamiltonian", "{", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn simulated_trajectory_keeps_its_invariants() {
    let traj = scratch("traj.json");
    let csv = scratch("traj.csv");
    let out = doubles(&[
        "simulate", "--space", "cotangent", "--family", "pi2", "--hamiltonian", KINETIC, "--n", "2", "--t-max", "1", "--dt", "0.1",
        "--seed", "5", "--out", traj.to_str().unwrap(), "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 12);
    let out = doubles(&["invariants", "--trajectory", traj.to_str().unwrap(), "--kind", "Psi1"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let reports: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let drift = reports[0]["max_spectral_drift"].as_f64().unwrap();
    assert!(drift < 1e-10, "{drift}");
    assert_eq!(reports[0]["times"].as_array().unwrap().len(), 11);
}

#[test]
fn reduced_simulation_runs_on_a_slice() {
    let out = doubles(&[
        "simulate", "--space", "red_cot_1", "--form", "reduced", "--family", "pi2", "--hamiltonian", KINETIC, "--n", "2", "--t-max", "0.1",
        "--dt", "0.01", "--seed", "2",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let traj: Trajectory = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(traj.points.len(), 11);
    assert!(traj.points.iter().all(|p| p.space == Space::RedCot1));
}

#[test]
fn bracket_reports_value_and_antisymmetry() {
    let p: PhasePoint = sample::point(&mut sample::rng(9), &LieData::su(2), Space::Quasi, 0.5, 0.3);
    let point = serde_json::to_string(&p).unwrap();
    let out = doubles(&[
        "bracket", "--kind", "qpb", "--f", r#"{"letters":["g1","g2"]}"#, "--h", r#"{"letters":["g1","g1","g2"],"part":"im"}"#, "--point", &point,
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["value"].as_f64().unwrap().is_finite());
    assert!(v["residuals"]["antisymmetry"].as_f64().unwrap() < 1e-10);
}

#[test]
fn tolerance_file_with_unknown_keys_is_rejected() {
    let path = scratch("tol.json");
    std::fs::write(&path, r#"{"bogus": 1.0}"#).unwrap();
    let out = doubles(&["--tolerances", path.to_str().unwrap(), "verify", "--suite", "lie", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(2));
}
