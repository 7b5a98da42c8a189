use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kslab"))
        .args(args)
        .env_remove("KSLAB_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn check<'a>(v: &'a Value, name: &str) -> &'a Value {
    v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

#[test]
fn square_has_circumradius_two_sqrt_three() {
    let out = kslab(&["configs", "--family", "polygon", "--n", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["command"], "configs");
    assert_eq!(v["result"]["n"], 4);
    let r = v["result"]["circumradius"].as_f64().unwrap();
    assert!((r - 2.0 * 3f64.sqrt()).abs() < 1e-12);
    assert_eq!(v["checks_failed"], 0);
    assert!(v["tool_version"].is_string());
}

#[test]
fn invalid_flag_is_a_usage_error() {
    let out = kslab(&["configs", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = kslab(&["configs", "--family", "asym5", "--n", "4"]);
    assert_eq!(out.status.code(), Some(2));
    let out = kslab(&["modes", "--L", "1..3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_config_file_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"family": "line", "n": 5}"#).unwrap();
    let v = json(&kslab(&["configs", "--config", cfg.to_str().unwrap(), "--n", "3"]));
    assert_eq!(v["config_echo"]["family"], "line");
    assert_eq!(v["config_echo"]["n"], 3);
    let xs: Vec<f64> = v["result"]["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p[0].as_f64().unwrap())
        .collect();
    assert!((xs[2] - 2.0 * 3f64.sqrt()).abs() < 1e-10);

    std::fs::write(&cfg, r#"{"family": "line", "colour": 5}"#).unwrap();
    assert_eq!(
        kslab(&["configs", "--config", cfg.to_str().unwrap()]).status.code(),
        Some(2)
    );
}

#[test]
fn artifacts_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let p = dir.path().join(name);
        let out = kslab(&[
            "configs",
            "--family",
            "newton",
            "--n",
            "6",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        std::fs::read(p).unwrap()
    };
    assert_eq!(run("a.json"), run("b.json"));
}

#[test]
fn newton_seed_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("pent.json");
    let out = kslab(&[
        "configs",
        "--family",
        "polygon",
        "--n",
        "5",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&kslab(&[
        "configs",
        "--family",
        "newton",
        "--seed-file",
        first.to_str().unwrap(),
    ]));
    assert_eq!(v["result"]["n"], 5);
    assert_eq!(check(&v, "residual_max")["status"], "pass");
}

#[test]
fn csv_has_one_point_per_row() {
    let out = kslab(&["configs", "--family", "center", "--n", "5", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y");
    assert_eq!(lines.len(), 6);
}

#[test]
fn numerical_failure_exits_three_with_diagnostics() {
    let out = kslab(&["epsilon", "--A", "0.5", "--tau-max", "1e3"]);
    assert_eq!(out.status.code(), Some(3));
    let v = json(&out);
    assert_eq!(v["status"], "numerical-failure");
    assert!(v["error"].as_str().unwrap().contains("3/256"));
    assert_eq!(v["config_echo"]["A"], 0.5);
}

#[test]
fn modes_report_connection_constants() {
    let v = json(&kslab(&["modes", "--L", "2"]));
    let m = &v["result"][0];
    let ck = m["C_L"].as_f64().unwrap() * m["K_L"].as_f64().unwrap();
    assert!((ck - 0.5f64.sqrt()).abs() < 1e-4);
    assert_eq!(check(&v, "L=2: kappa")["status"], "reported-only");
}

#[test]
fn epsilon_reads_constants_from_outer_report() {
    let dir = tempfile::tempdir().unwrap();
    let outer = dir.path().join("outer.json");
    std::fs::write(&outer, r#"{"result": {"A": -0.95, "B": 0.01}}"#).unwrap();
    let v = json(&kslab(&[
        "epsilon",
        "--from-outer",
        outer.to_str().unwrap(),
        "--tau-max",
        "1e4",
    ]));
    assert_eq!(v["config_echo"]["A"], -0.95);
    assert_eq!(v["config_echo"]["B"], 0.01);
    let want = (3.0f64 / 16.0 + 16.0 * 0.95).sqrt();
    assert!((v["result"]["alpha_exact"].as_f64().unwrap() - want).abs() < 1e-12);
    assert_eq!(check(&v, "alpha in (3.82, 4.02)")["status"], "pass");
}

#[test]
fn coarse_outer_run_and_field_dump() {
    let dir = tempfile::tempdir().unwrap();
    let field = dir.path().join("field.csv");
    let out = kslab(&[
        "outer",
        "--levels",
        "1",
        "--format",
        "csv",
        "--out",
        field.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(Path::new(&field)).unwrap();
    assert!(text.starts_with("x,y,omega\n"));
    assert!(text.lines().count() > 1000);

    let v = json(&kslab(&["outer", "--levels", "1"]));
    assert!(v["result"]["A"].as_f64().unwrap().is_finite());
    assert!(v["result"]["B"].as_f64().unwrap().is_finite());
    assert_eq!(v["result"]["refinement_history"].as_array().unwrap().len(), 1);
}
