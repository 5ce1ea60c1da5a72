use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn impulse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_impulse"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn solve_scalar_poly_and_revalidate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = impulse(&["solve", "scalar_poly", "--degree", "8", "--out", out]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));

    let doc = read_json(&dir.path().join("result.json"));
    assert!((f(&doc["cost"]) - 4.0).abs() < 1e-6);
    let imps = doc["impulses"].as_array().unwrap();
    assert_eq!(imps.len(), 1);
    assert!((f(&imps[0]["t"]) - 0.5).abs() < 1e-4);
    assert!((f(&imps[0]["amplitudes"][0]) - 4.0).abs() < 1e-3);
    for key in ["primer_sup", "complementarity_max", "terminal_error"] {
        assert!(doc["certificate"][key].is_number(), "missing certificate.{key}");
    }
    for key in ["dual_y", "e_d", "degree"] {
        assert!(!doc[key].is_null(), "missing {key}");
    }
    assert!(doc["solver"]["iters"].is_u64() && doc["solver"]["gap"].is_number());

    let table = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "t,x_1,p_1");
    assert_eq!(lines.count(), 1000);

    let res = impulse(&["validate", dir.path().join("result.json").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn validate_rejects_a_tampered_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        impulse(&["solve", "double_integrator", "--degree", "4", "--out", out]).status.code(),
        Some(0)
    );
    let path = dir.path().join("result.json");
    let mut doc = read_json(&path);
    doc["certificate"]["terminal_error"] = Value::from(0.5);
    fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let res = impulse(&["validate", path.to_str().unwrap()]);
    assert_ne!(res.status.code(), Some(0));
}

#[test]
fn solve_split_sign_switch() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = impulse(&["solve", "sign_switch_split", "--degree", "10", "--out", out]);
    assert_eq!(res.status.code(), Some(0));
    let doc = read_json(&dir.path().join("result.json"));
    let target = 2.0 / std::f64::consts::E;
    assert!((f(&doc["cost"]) - target).abs() <= 1e-8 * target);
    assert!(f(&doc["impulses"][0]["t"]).abs() <= 1e-6);
}

#[test]
fn solve_double_integrator() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = impulse(&["solve", "double_integrator", "--degree", "4", "--out", out]);
    assert_eq!(res.status.code(), Some(0));
    let doc = read_json(&dir.path().join("result.json"));
    assert!((f(&doc["cost"]) - 2.0).abs() < 1e-6);
    let imps = doc["impulses"].as_array().unwrap();
    assert_eq!(imps.len(), 2);
    assert!(f(&imps[0]["t"]).abs() < 1e-6 && (f(&imps[0]["amplitudes"][0]) - 1.0).abs() < 1e-6);
    assert!((f(&imps[1]["t"]) - 1.0).abs() < 1e-6 && (f(&imps[1]["amplitudes"][0]) + 1.0).abs() < 1e-6);
}

#[test]
fn solve_problem_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("problem.json");
    fs::write(
        &file,
        r#"{"n": 1, "m": 1, "t_i": 0.0, "t_f": 1.0, "x_i": [0.0], "x_f": [2.0],
            "A": [[[0.0]]], "B": [[[0.0, 1.0, -1.0]]], "basis": "monomial"}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let res = impulse(&["solve", file.to_str().unwrap(), "--degree", "6", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    assert!((f(&read_json(&out.join("result.json"))["cost"]) - 8.0).abs() < 1e-6);
}

#[test]
fn schema_violation_fails_with_stage_tag() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("bad.json");
    fs::write(&file, r#"{"n": 1, "m": 1, "t_i": 0.0}"#).unwrap();
    let res = impulse(&["solve", file.to_str().unwrap(), "--degree", "6"]);
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).starts_with('['));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(impulse(&["solve"]).status.code(), Some(1));
    assert_eq!(impulse(&["solve", "no_such_problem", "--degree", "4"]).status.code(), Some(1));
    assert_eq!(impulse(&["--help"]).status.code(), Some(0));
}

#[test]
fn unreachable_oracle_grid_exits_three() {
    // Both endpoints of scalar_poly carry zero gain.
    let res = impulse(&["oracle", "scalar_poly", "-N", "2"]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn oracle_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = impulse(&["oracle", "scalar_poly", "-N", "1001", "--out", out]);
    assert_eq!(res.status.code(), Some(0));
    let doc = read_json(&dir.path().join("oracle.json"));
    assert!((f(&doc["cost"]) - 4.0).abs() < 1e-6);

    let res = impulse(&["oracle", "double_integrator", "-N", "2", "--out", out]);
    assert_eq!(res.status.code(), Some(0));
    assert!((f(&read_json(&dir.path().join("oracle.json"))["cost"]) - 2.0).abs() < 1e-6);
}

#[test]
fn prisma_oracle_cost_decreases_with_grid() {
    let cost = |n: &str| {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().to_str().unwrap();
        let res = impulse(&["oracle", "prisma", "-N", n, "--degree", "100", "--out", out]);
        assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
        f(&read_json(&dir.path().join("oracle.json"))["cost"])
    };
    let coarse = cost("20");
    let fine = cost("2000");
    assert!(coarse >= fine, "{coarse} < {fine}");
}

#[test]
fn convergence_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let res = impulse(&["convergence", "scalar_poly", "--degrees", "3,4", "--out", out]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let mut rdr = csv::Reader::from_path(dir.path().join("convergence.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(&header[..4], ["d", "e_d", "cost", "rel_err"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        let rel: f64 = r[3].parse().unwrap();
        assert!(rel < 1e-6, "row {r:?}");
    }
}

#[test]
fn convergence_needs_two_degrees() {
    let res = impulse(&["convergence", "scalar_poly", "--degrees", "4"]);
    assert_eq!(res.status.code(), Some(1));
}
