//! End-to-end runs of the `shearwave` binary.

use serde_json::Value;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn shearwave(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_shearwave"));
    cmd.args(args).env_remove("SHEARWAVE_THREADS");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

const SMALL: &str = r#"{"cutoffs": [4], "vertical_m": 40}"#;

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "bad.json", r#"{"vertical_m": "many"}"#);
    let out = shearwave(
        &["symbols", "--spec", &spec, "--out", dir.path().to_str().unwrap()],
        &[],
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("vertical_m"));
    let spec = write(dir.path(), "typo.json", r#"{"shear": {"draw": 3}}"#);
    let out = shearwave(&["shear-check", "--spec", &spec], &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("draw"));
}

#[test]
fn thread_variable_is_validated_and_wins() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "c.json", SMALL);
    let out = shearwave(&["shear-check", "--spec", &spec], &[("SHEARWAVE_THREADS", "many")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("SHEARWAVE_THREADS"));
    let report = dir.path().join("shear.json");
    let out = shearwave(
        &[
            "shear-check",
            "--spec",
            &spec,
            "--threads",
            "3",
            "--out",
            report.to_str().unwrap(),
        ],
        &[("SHEARWAVE_THREADS", "1")],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&report);
    assert_eq!(r["config"]["threads"], 1);
    assert_eq!(r["config"]["seed"], 42);
    assert!(dir.path().join("shear_shear.csv").exists());
}

#[test]
fn failed_checks_exit_with_four() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(
        dir.path(),
        "c.json",
        r#"{"cutoffs": [4], "vertical_m": 40, "shear": {"residual_tol": 1e-300}}"#,
    );
    let out = shearwave(
        &["shear-check", "--spec", &spec, "--out", dir.path().to_str().unwrap()],
        &[],
    );
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL shear_residual"));
}

#[test]
fn numerical_failure_writes_a_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "c.json", SMALL);
    let inst = write(
        dir.path(),
        "inst.json",
        r#"{"forcing": {"kind": "layer", "modes": [{"k": [1], "value": [[0, 0], [40, 0]]}]}}"#,
    );
    let run = dir.path().join("run");
    let out = shearwave(
        &[
            "solve",
            "--spec",
            &spec,
            "--instance",
            &inst,
            "--out",
            run.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    let diag = read_json(&run.join("diagnostic.json"));
    assert_eq!(diag["command"], "solve");
    assert_eq!(diag["config"]["cutoffs"][0], 4);
}

#[test]
fn zero_forcing_gives_the_zero_state() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "c.json", SMALL);
    let inst = write(dir.path(), "inst.json", r#"{"forcing": {"kind": "none"}}"#);
    let run = dir.path().join("run");
    let out = shearwave(
        &[
            "solve",
            "--spec",
            &spec,
            "--instance",
            &inst,
            "--out",
            run.to_str().unwrap(),
        ],
        &[],
    );
    assert_eq!(out.status.code(), Some(0));
    let sol: shearwave::cli::SolutionFile = serde_json::from_value(read_json(&run.join("sol.json"))).unwrap();
    assert!(sol.is_zero());
}

#[test]
fn manufactured_solve_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write(dir.path(), "c.json", SMALL);
    let inst = write(
        dir.path(),
        "inst.json",
        r#"{"forcing": {"kind": "manufactured", "amplitude": 0.02, "profile": {"kind": "band"}}}"#,
    );
    let run = |name: &str| {
        let out_dir = dir.path().join(name);
        let out = shearwave(
            &[
                "solve",
                "--spec",
                &spec,
                "--instance",
                &inst,
                "--method",
                "newton",
                "--out",
                out_dir.to_str().unwrap(),
            ],
            &[],
        );
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        out_dir
    };
    let (a, b) = (run("a"), run("b"));
    for file in ["report.json", "sol.json", "eulerian.csv"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }
    let r = read_json(&a.join("report.json"));
    assert_eq!(r["config"]["method"], "newton");
    let err = r["manufactured_error"]["absolute"].as_f64().unwrap();
    assert!(err < 1e-4, "{err}");
}

#[test]
fn usage_errors_exit_with_two() {
    let out = shearwave(&["solve"], &[]);
    assert_eq!(out.status.code(), Some(2));
    let out = shearwave(&["frobnicate"], &[]);
    assert_eq!(out.status.code(), Some(2));
}
