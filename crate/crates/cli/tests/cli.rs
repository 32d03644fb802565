use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bayesgame"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_json(args: &[&str]) -> Value {
    let mut all = vec!["--json"];
    all.extend_from_slice(args);
    let out = run(&all);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn write(dir: &Path, name: &str, v: &Value) -> String {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string(v).unwrap()).unwrap();
    p.to_str().unwrap().to_string()
}

fn phi_plus() -> Value {
    let h = json!([0.5, 0.0]);
    let z = json!([0.0, 0.0]);
    json!([[h, z, z, h], [z, z, z, z], [z, z, z, z], [h, z, z, h]])
}

fn close(v: &Value, x: f64, tol: f64) -> bool {
    (v.as_f64().unwrap() - x).abs() < tol
}

#[test]
fn classical_default_reports_the_bound_and_pure_equilibria() {
    let out = run(&["classical"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("9/8"), "{text}");

    let j = run_json(&["classical"]);
    assert!(close(&j["max_joint"]["value"], 1.125, 1e-15));
    assert_eq!(j["max_joint"]["exact"], "9/8");
    let pure: Vec<_> = j["nash"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|e| e["pure"] == true)
        .collect();
    assert_eq!(pure.len(), 3);
}

#[test]
fn classical_accepts_an_all_zero_game() {
    let dir = tempfile::tempdir().unwrap();
    let zeros = json!([
        [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]],
        [[[0.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]
    ]);
    let g = write(
        dir.path(),
        "zero.json",
        &json!({ "prior": [[0.25, 0.25], [0.25, 0.25]], "uA": zeros, "uB": zeros }),
    );
    let j = run_json(&["classical", "--game", &g]);
    assert!(close(&j["max_joint"]["value"], 0.0, 1e-15));
}

#[test]
fn quantum_default_is_the_fair_equilibrium() {
    let j = run_json(&["quantum"]);
    let fair = 0.75 * (std::f64::consts::PI / 8.0).cos().powi(2);
    assert!(close(&j["payoffs"][0], fair, 1e-12));
    assert!(close(&j["payoffs"][1], fair, 1e-12));
    assert!(close(&j["chsh"], 2.0 * std::f64::consts::SQRT_2, 1e-12));
    assert_eq!(j["equilibrium"]["is_equilibrium"], true);
}

#[test]
fn perturbed_strategy_is_not_an_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let q = std::f64::consts::FRAC_PI_8;
    let s = write(
        dir.path(),
        "s.json",
        &json!({ "state": phi_plus(), "A": [0.3, 2.0 * q], "B": [q, -q] }),
    );
    let j = run_json(&["verify-eq", "--strategy", &s]);
    let report = &j["strategies"][0];
    assert_eq!(report["is_equilibrium"], false);
    assert!(report["max_gain"].as_f64().unwrap() > 1e-4);
}

#[test]
fn all_bell_states_are_equilibria() {
    let j = run_json(&["verify-eq", "--all-bell"]);
    assert_eq!(j["all_equilibria"], true);
    assert_eq!(j["strategies"].as_array().unwrap().len(), 4);
}

#[test]
fn malformed_inputs_fail_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = run(&["quantum", "--strategy", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));

    let g = write(
        dir.path(),
        "g.json",
        &json!({ "prior": [[0.5, 0.5]], "uA": [], "uB": [] }),
    );
    let out = run(&["classical", "--game", &g]);
    assert_eq!(out.status.code(), Some(3));
    assert!(!out.stderr.is_empty());
}

#[test]
fn bad_arguments_fail_with_usage_code() {
    assert_eq!(run(&["experiment", "--runs", "0"]).status.code(), Some(2));
    assert_eq!(
        run(&["experiment", "--visibility", "0.9", "--fidelity", "0.9"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["experiment", "--noise", "custom"]).status.code(), Some(2));
    assert_eq!(run(&["npa-bound", "--level", "3"]).status.code(), Some(2));
    assert_eq!(run(&["experiment", "--visibility", "1.5"]).status.code(), Some(3));
}

#[test]
fn npa_bounds_match_known_values() {
    let j = run_json(&["npa-bound", "--chsh"]);
    assert!(close(&j["bound"], 2.0 * std::f64::consts::SQRT_2, 1e-6));
    let j = run_json(&["npa-bound", "--wa", "1", "--wb", "1"]);
    assert!(close(
        &j["bound"],
        1.5 * (std::f64::consts::PI / 8.0).cos().powi(2),
        1e-6
    ));
}

#[test]
fn seesaw_output_strategy_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("best.json");
    let j = run_json(&["seesaw", "--restarts", "3", "--out", out.to_str().unwrap()]);
    assert!(j["objective"].as_f64().unwrap() > 1.125);
    let q = run_json(&["quantum", "--strategy", out.to_str().unwrap()]);
    let joint = q["payoffs"][0].as_f64().unwrap() + q["payoffs"][1].as_f64().unwrap();
    assert!((joint - j["objective"].as_f64().unwrap()).abs() < 1e-9);
}

#[test]
fn region_points_lie_inside_the_half_planes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("region");
    let j = run_json(&[
        "region",
        "--grid",
        "5",
        "--restarts",
        "4",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(j["points_outside"], 0);
    assert_eq!(j["sandwich_failures"], 0);
    for f in [
        "classical_hull.csv",
        "seesaw_scatter.csv",
        "npa_halfplanes.csv",
        "markers.csv",
    ] {
        let body = std::fs::read_to_string(out.join(f)).unwrap();
        assert!(body.lines().count() > 1, "{f} is empty");
    }
}

#[test]
fn experiment_at_high_fidelity_beats_the_classical_bound() {
    let dir = tempfile::tempdir().unwrap();
    let tally = dir.path().join("tally.csv");
    let j = run_json(&[
        "experiment",
        "--fidelity",
        "0.95",
        "--runs",
        "100000",
        "--seed",
        "7",
        "--tally",
        tally.to_str().unwrap(),
    ]);
    assert!(j["measured"]["sigmas_above_classical"].as_f64().unwrap() >= 5.0);
    assert_eq!(j["runs"], 100000);
    let rows = std::fs::read_to_string(&tally).unwrap();
    assert_eq!(rows.lines().count(), 17);

    let again = run_json(&["experiment", "--fidelity", "0.95", "--runs", "100000", "--seed", "7"]);
    assert_eq!(j["behavior"], again["behavior"]);
}
