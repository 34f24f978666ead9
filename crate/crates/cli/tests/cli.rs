use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn interinfo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_interinfo"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/corpus20.txt")
}

fn write_table(dir: &Path, name: &str, cells: &[f64]) -> String {
    let axis = |n: &str| serde_json::json!({"name": n, "categories": ["0", "1"]});
    let doc = serde_json::json!({"axes": [axis("A"), axis("B"), axis("C")], "cells": cells});
    let path = dir.join(name);
    fs::write(&path, doc.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

const XOR: [f64; 8] = [0.25, 0.0, 0.0, 0.25, 0.0, 0.25, 0.25, 0.0];

#[test]
fn measures_on_xor() {
    let dir = tempfile::tempdir().unwrap();
    let table = write_table(dir.path(), "xor.json", &XOR);
    let csv = dir.path().join("xor.csv");
    let out = interinfo(&["measures", &table, "--csv", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((report["mu_star"].as_f64().unwrap() + 1.0).abs() < 1e-9);
    assert!((report["i"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!((report["r"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert_eq!(report["settings"]["tolerance"], 1e-10);
    let csv = fs::read_to_string(csv).unwrap();
    assert!(csv.contains("\nmu_star,-1.000000\n"));
    assert!(csv.contains("\ni,1.000000\n"));
}

#[test]
fn measures_on_uniform_table_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let table = write_table(dir.path(), "u.json", &[0.125; 8]);
    let out = interinfo(&["measures", &table]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    for key in ["mu_star", "q", "i", "r"] {
        assert!(report[key].as_f64().unwrap().abs() < 1e-12, "{key}");
    }
}

#[test]
fn measures_reports_non_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let table = write_table(
        dir.path(),
        "t.json",
        &[0.3, 0.05, 0.1, 0.05, 0.02, 0.18, 0.1, 0.2],
    );
    let out = interinfo(&["measures", &table, "--max-iterations", "1"]);
    assert_eq!(code(&out), 2);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["ipf"]["converged"], false);
}

#[test]
fn malformed_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"axes\": [").unwrap();
    let out = interinfo(&["measures", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
    let out = interinfo(&[
        "measures",
        dir.path().join("missing.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn dynamics_incursive_reaches_fixed_point() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let out = interinfo(&[
        "dynamics",
        "--variant",
        "incursive",
        "--a",
        "5",
        "--x0",
        "0.3",
        "--steps",
        "200",
        "--output",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&csv).unwrap();
    let last = text.lines().last().unwrap();
    let x: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((x - 0.8).abs() < 1e-9);
    assert_eq!(text.lines().count(), 202);
    assert!(String::from_utf8_lossy(&out.stdout).contains("truncated: false"));
}

#[test]
fn dynamics_hyper_incursive_below_four_is_truncated() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("traj.csv");
    let out = interinfo(&[
        "dynamics",
        "--variant",
        "hyper_incursive",
        "--a",
        "3",
        "--x0",
        "0.9",
        "--steps",
        "10",
        "--decisions",
        "1,0,1,0,1,0,1,0,1,0",
        "--output",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("truncated: true"));
    assert_eq!(fs::read_to_string(&csv).unwrap(), "t,x,decision\n0,0.9,\n");
}

#[test]
fn dynamics_recursive_fixed_point_and_seeded_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("r.csv");
    let out = interinfo(&[
        "dynamics",
        "--variant",
        "recursive",
        "--a",
        "2",
        "--x0",
        "0.5",
        "--steps",
        "5",
        "--output",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(1) == Some("0.5")));

    let run = |name: &str| {
        let p = dir.path().join(name);
        let out = interinfo(&[
            "dynamics",
            "--variant",
            "hyper_incursive",
            "--a",
            "4.5",
            "--x0",
            "0.4",
            "--steps",
            "50",
            "--seed",
            "7",
            "--output",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        fs::read(p).unwrap()
    };
    assert_eq!(run("s1.csv"), run("s2.csv"));
}

#[test]
fn dynamics_rejects_out_of_domain_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("x.csv");
    let out = interinfo(&[
        "dynamics",
        "--variant",
        "incursive",
        "--a",
        "2",
        "--x0",
        "1.5",
        "--steps",
        "5",
        "--output",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("x0"));
    let out = interinfo(&[
        "dynamics",
        "--variant",
        "hyper_incursive",
        "--a",
        "5",
        "--x0",
        "0.5",
        "--steps",
        "5",
        "--output",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(!csv.exists());
}

#[test]
fn ipf_writes_fit_and_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let table = write_table(dir.path(), "xor.json", &XOR);
    let fitted = dir.path().join("fit.csv");
    let out = interinfo(&[
        "ipf",
        &table,
        "--margins",
        "A,B;A,C;B,C",
        "--output",
        fitted.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let diag: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(diag["converged"], true);
    let text = fs::read_to_string(fitted).unwrap();
    assert!(text.starts_with("A,B,C,p\n"));
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0.125")));
    let out = interinfo(&[
        "ipf",
        &table,
        "--margins",
        "A,Z",
        "--output",
        dir.path().join("f.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn ingest_then_factor() {
    let dir = tempfile::tempdir().unwrap();
    let matrix = dir.path().join("words.csv");
    let config = dir.path().join("ingest.toml");
    fs::write(&config, "kind = \"title_word\"\nmin_occurrence = 2\n").unwrap();
    let out = interinfo(&[
        "ingest",
        corpus().to_str().unwrap(),
        "--config",
        config.to_str().unwrap(),
        "--min-occurrence",
        "3",
        "--output",
        matrix.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let header = fs::read_to_string(&matrix)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert!(header.starts_with("case,"));
    assert_eq!(header.split(',').count(), 1 + 19);

    let out = interinfo(&["factor", matrix.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let csv = String::from_utf8(out.stdout).unwrap();
    assert!(csv.starts_with("variable,factor1,factor2,factor3\n"));
    assert!(csv.lines().last().unwrap().starts_with("eigenvalue,"));

    let out = interinfo(&[
        "ingest",
        corpus().to_str().unwrap(),
        "--min-occurrence",
        "2",
    ]);
    assert_eq!(code(&out), 1, "kind is required");
}

#[test]
fn pipeline_exit_codes_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let config = dir.path().join("run.toml");
    fs::write(
        &config,
        format!(
            "inputs = [{:?}]\noutput_dir = \"out\"\ncharts = true\n",
            corpus().to_str().unwrap()
        ),
    )
    .unwrap();
    let out = interinfo(&[
        "pipeline",
        "--config",
        config.to_str().unwrap(),
        "--charts",
        "false",
        "--threads",
        "3",
    ]);
    // Sparse binned tables do not reach the default tolerance within the budget.
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("summary.csv").exists());
    assert!(!out_dir.join("chart.svg").exists());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 5);
    assert!(stdout.contains("(IPF not converged)"));

    let loose = dir.path().join("loose");
    let out = interinfo(&[
        "pipeline",
        "--inputs",
        corpus().to_str().unwrap(),
        "--output-dir",
        loose.to_str().unwrap(),
        "--ipf-tolerance",
        "1e-4",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    assert!(loose.join("chart.svg").exists());

    let out = interinfo(&[
        "pipeline",
        "--config",
        config.to_str().unwrap(),
        "--bins",
        "1",
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn pipeline_partial_failure_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    let cfg = serde_json::json!({
        "inputs": [corpus()],
        "output_dir": dir.path().join("out"),
        "features": {
            "words": {"kind": "title_word", "min_occurrence": 3},
            "rare": {"kind": "author", "min_occurrence": 20}
        },
        "sets": [
            {"name": "words", "features": ["words"]},
            {"name": "rare", "features": ["rare"]}
        ],
        "ipf_tolerance": 1e-4
    });
    fs::write(&config, cfg.to_string()).unwrap();
    let out = interinfo(&["pipeline", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("rare: skipped"));
    assert!(dir.path().join("out/words.json").exists());
}
