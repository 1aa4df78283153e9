//! End-to-end runs of the installed binary: artifact shapes, exit codes,
//! determinism, and the spec-echo round trip.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_capfin"))
}

fn write_spec(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_owned()
}

fn awgn_spec() -> &'static str {
    r#"{
        "schema": 1,
        "f": {"kind": "identity"},
        "noise": {"family": "gaussian", "params": [0.0, 1.0]},
        "cost": {"kind": "power", "p": 2},
        "budget": 1.0
    }"#
}

fn stdout_str(out: &Output) -> &str {
    std::str::from_utf8(&out.stdout).unwrap()
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).expect("stderr carries a JSON error object")
}

#[test]
fn capacity_reproduces_the_awgn_oracle_and_echoes_the_spec() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "awgn.json", awgn_spec());
    let out = bin()
        .args([
            "capacity",
            "--spec",
            &spec,
            "--budget",
            "1",
            "--grid-points",
            "81",
        ])
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let doc: serde_json::Value = serde_json::from_str(stdout_str(&out)).unwrap();
    let cap = doc["capacity_estimate"].as_f64().unwrap();
    let oracle = 0.5 * 2.0f64.ln();
    assert!((cap - oracle).abs() < 0.02, "capacity {cap} vs {oracle}");
    assert!(doc["achieved_cost"].as_f64().unwrap() <= 1.0 + 1e-9);

    // The echoed channel is itself a valid spec for another run.
    let echo = write_spec(dir.path(), "echo.json", &doc["channel"].to_string());
    let again = bin().args(["moment", "--spec", &echo]).output().unwrap();
    assert!(
        again.status.success(),
        "{}",
        String::from_utf8_lossy(&again.stderr)
    );
    let echoed: serde_json::Value = serde_json::from_str(stdout_str(&again)).unwrap();
    assert_eq!(echoed["channel"], doc["channel"], "echo is a fixed point");
}

#[test]
fn identical_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "awgn.json", awgn_spec());
    let args = [
        "mi",
        "--spec",
        &spec,
        "--grid-points",
        "17",
        "--grid-min",
        "-3",
        "--grid-max",
        "3",
    ];
    let a = bin().args(args).output().unwrap();
    let b = bin().args(args).output().unwrap();
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);

    // A thread cap must not change the bytes either.
    let c = bin()
        .args(args)
        .env("CAPFIN_THREADS", "1")
        .output()
        .unwrap();
    assert!(c.status.success());
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn example1_csv_row_matches_the_closed_form() {
    let out = bin()
        .args(["example1", "--m", "100", "--format", "csv"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = stdout_str(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "m,closed_form,quadrature,gap");
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(row[0], "100");
    let gap: f64 = row[3].parse().unwrap();
    assert!(gap < 1e-8, "gap {gap}");
}

#[test]
fn check_reports_a_slow_growing_cost_as_violated() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(
        dir.path(),
        "slow.json",
        &awgn_spec().replace(
            r#""cost": {"kind": "power", "p": 2}"#,
            r#""cost": {"kind": "log_power", "p": 1}"#,
        ),
    );
    let out = bin().args(["check", "--spec", &spec]).output().unwrap();
    assert!(out.status.success(), "violation is a verdict, not an error");
    let doc: serde_json::Value = serde_json::from_str(stdout_str(&out)).unwrap();
    let a3 = doc["conditions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "A3")
        .unwrap();
    assert_eq!(a3["status"], "violated");
    assert_eq!(doc["overall"], serde_json::Value::Bool(false));
}

#[test]
fn converge_passes_the_shrinking_variance_gaussians() {
    let out = bin().args(["converge", "--m", "100"]).output().unwrap();
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(stdout_str(&out)).unwrap();
    assert_eq!(doc["verdict"], "conditions-hold-and-converges");
}

#[test]
fn validation_failures_exit_two_with_an_error_object() {
    let dir = tempfile::tempdir().unwrap();

    let unk = write_spec(
        dir.path(),
        "unk.json",
        &awgn_spec().replace("gaussian", "gausian"),
    );
    let out = bin().args(["entropy", "--spec", &unk]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["code"], 2);
    assert_eq!(err["error"]["kind"], "unknown-family");

    let missing = dir.path().join("nope.json");
    let out = bin()
        .args(["entropy", "--spec", missing.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "io");

    let out = bin().args(["entropy", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "usage");

    let out = bin()
        .args(["example1", "--m", "5"])
        .env("CAPFIN_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "usage");
}

#[test]
fn numeric_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    // Cauchy noise has no second moment, so this spec cannot be certified.
    let spec = write_spec(
        dir.path(),
        "heavy.json",
        &awgn_spec()
            .replace(r#""family": "gaussian""#, r#""family": "cauchy""#)
            .replace(
                r#""budget": 1.0"#,
                r#""noise_moment": {"kind": "power", "p": 2}, "budget": 1.0"#,
            ),
    );
    let out = bin().args(["moment", "--spec", &spec]).output().unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["code"], 3);
    assert_eq!(err["error"]["kind"], "moment-not-finite");

    // Unreachable tolerances exhaust the subdivision budget.
    let awgn = write_spec(dir.path(), "awgn.json", awgn_spec());
    let out = bin()
        .args([
            "mi",
            "--spec",
            &awgn,
            "--grid-points",
            "5",
            "--grid-min",
            "-1",
            "--grid-max",
            "1",
            "--abs-tol",
            "1e-300",
            "--rel-tol",
            "1e-300",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(
        stderr_json(&out)["error"]["kind"],
        "quadrature-non-convergence"
    );
}

#[test]
fn out_flag_writes_the_same_artifact_to_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_spec(dir.path(), "awgn.json", awgn_spec());
    let streamed = bin().args(["entropy", "--spec", &spec]).output().unwrap();
    assert!(streamed.status.success());

    let target = dir.path().join("report.json");
    let filed = bin()
        .args([
            "entropy",
            "--spec",
            &spec,
            "--out",
            target.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(filed.status.success());
    assert!(filed.stdout.is_empty());
    assert_eq!(std::fs::read(&target).unwrap(), streamed.stdout);
}

#[test]
fn help_lists_the_subcommands() {
    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = stdout_str(&out);
    for sub in [
        "entropy", "moment", "converge", "mi", "capacity", "check", "example1", "example2",
    ] {
        assert!(text.contains(sub), "help must mention {sub}");
    }
}
