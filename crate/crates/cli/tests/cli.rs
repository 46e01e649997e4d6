use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_robust-sensing"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("ROBUST_SENSING_THREADS").output().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

/// Eight 1x2 sensors observing x0 = (1, -2); sensors 6 and 7 are corrupted.
fn write_problem(dir: &Path) -> String {
    let rows = [
        [1.0, 0.0],
        [0.0, 1.0],
        [1.0, 1.0],
        [1.0, -1.0],
        [2.0, 1.0],
        [1.0, 3.0],
        [0.5, 0.5],
        [0.5, 0.0],
    ];
    let x0 = [1.0, -2.0];
    let blocks: Vec<_> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut b = r[0] * x0[0] + r[1] * x0[1];
            if i >= 6 {
                b += if i == 6 { 4.0 } else { -7.0 };
            }
            serde_json::json!({"A": [r], "b": [b]})
        })
        .collect();
    let doc = serde_json::json!({"n": 2, "m": 1, "k": 8, "blocks": blocks});
    let path = dir.join("problem.json");
    fs::write(&path, doc.to_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn x_hat(json: &str) -> Vec<f64> {
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    v["x_hat"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn solve_p1_recovers_the_planted_vector() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_problem(dir.path());
    let out = run(&["solve", "--method", "p1", "--input", &input]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let x = x_hat(&stdout(&out));
    assert!((x[0] - 1.0).abs() < 1e-6 && (x[1] + 2.0).abs() < 1e-6, "{x:?}");
}

#[test]
fn oracle_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_problem(dir.path());
    let target = dir.path().join("sol.json");
    let out = run(&["solve", "--method", "p0-oracle", "--input", &input, "--out", target.to_str().unwrap()]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(target).unwrap()).unwrap();
    assert_eq!(doc["support"], serde_json::json!([0, 1, 2, 3, 4, 5]));
}

#[test]
fn lambda_methods_need_a_penalty() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_problem(dir.path());
    assert_eq!(run(&["solve", "--method", "p3", "--input", &input]).status.code(), Some(2));
    assert_eq!(
        run(&["solve", "--method", "p3", "--input", &input, "--lambda", "1", "--lambda-auto", "--sigma", "1"])
            .status
            .code(),
        Some(2)
    );
    let ok = run(&["solve", "--method", "p4", "--input", &input, "--lambda-auto", "--sigma", "0.1"]);
    assert!(ok.status.success());
    let path = run(&["solve", "--method", "p3-path", "--input", &input, "--lambda-grid", "1,0.1,0.01"]);
    let docs: Vec<serde_json::Value> = serde_json::from_str(&stdout(&path)).unwrap();
    assert_eq!(docs.len(), 3);
}

#[test]
fn colored_solve_with_toeplitz_covariance() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_problem(dir.path());
    let out = run(&["solve", "--method", "p3-colored", "--input", &input, "--lambda", "0.5", "--toeplitz", "--sigma", "0.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(x_hat(&stdout(&out)).len(), 2);
}

#[test]
fn runtime_errors_exit_with_one_and_name_the_stage() {
    let out = run(&["solve", "--method", "ls", "--input", "/nonexistent/problem.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("loading problem"));
}

#[test]
fn experiments_require_a_seed() {
    assert_eq!(run(&["rs-table", "--trials", "1"]).status.code(), Some(2));
    assert_eq!(run(&["rsn-table"]).status.code(), Some(2));
}

#[test]
fn experiment_output_is_thread_invariant() {
    let one = run(&["rs-table", "--trials", "6", "--seed", "9", "--threads", "1"]);
    let three = bin()
        .args(["rs-table", "--trials", "6", "--seed", "9"])
        .env("ROBUST_SENSING_THREADS", "3")
        .output()
        .unwrap();
    assert!(one.status.success() && three.status.success());
    assert_eq!(one.stdout, three.stdout);
    assert!(stdout(&one).starts_with("method,s,per_sensor_pct,whole_network_pct\n"));
}

#[test]
fn phase_diagram_writes_curve_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    let manifest = dir.path().join("manifest.json");
    let out = run(&[
        "phase-diagram", "--n", "6", "--m", "3", "--trials", "2", "--seed", "4",
        "--curve-out", curve.to_str().unwrap(), "--manifest", manifest.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fs::read_to_string(curve).unwrap().starts_with("gamma,beta_star\n"));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(manifest).unwrap()).unwrap();
    assert_eq!(m["seed"], 4);
}

#[test]
fn bound_reports_inapplicable_region() {
    let out = run(&["bound", "--n", "20", "--m", "4", "--k", "16", "--s", "12"]);
    let text = stdout(&out);
    assert!(text.contains("beta = 0.75"));
    assert!(text.contains("inapplicable"));
}

#[test]
fn uniqueness_and_reduction_commands() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_problem(dir.path());
    let out = run(&["check-unique", "--input", &input, "--s", "6"]);
    assert_eq!(stdout(&out).trim(), "unique");
    let out = run(&["check-unique", "--input", &input, "--s", "5"]);
    assert!(stdout(&out).starts_with("not unique"));
    let f = run(&["falsify-range", "--input", &input, "--s", "6", "--trials", "50"]);
    assert!(f.status.success());

    let eqs = dir.path().join("eqs.json");
    fs::write(&eqs, r#"{"C": [[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]], "d": [1.0, 2.0, 5.0]}"#).unwrap();
    let red = run(&["reduce-mcle", "--input", eqs.to_str().unwrap(), "--m", "2"]);
    assert!(red.status.success(), "{}", String::from_utf8_lossy(&red.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&red)).unwrap();
    assert_eq!(doc["m"], 2);
}
