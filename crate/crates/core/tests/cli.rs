mod common;

use std::process::{Command, Output};

use common::fixtures;

fn coe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coe"))
        .args(args)
        .output()
        .unwrap()
}

fn error_json(o: &Output) -> serde_json::Value {
    let stderr = String::from_utf8_lossy(&o.stderr);
    let line = stderr.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|_| panic!("not json: {stderr}"))
}

#[test]
fn run_writes_all_outputs() {
    let out = tempfile::tempdir().unwrap();
    let cfg = fixtures().join("cifar10/run.toml");
    let o = coe(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("coe_gpu_dollars=0.79"), "{stdout}");
    for f in ["traces.csv", "report.csv", "summary.csv"] {
        assert!(out.path().join(f).exists(), "{f}");
    }
    let traces = std::fs::read_to_string(out.path().join("traces.csv")).unwrap();
    let expected = std::fs::read_to_string(fixtures().join("cifar10/traces.csv")).unwrap();
    assert_eq!(traces, expected);
    let report = std::fs::read_to_string(out.path().join("report.csv")).unwrap();
    assert!(report.contains("cifar10,gpu_dollars_per_hour,0.36,0.07,0.10,0.25,0.79,2.49"));
}

#[test]
fn flags_override_config() {
    let out = tempfile::tempdir().unwrap();
    let cfg = fixtures().join("cifar10/run.toml");
    let o = coe(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--theta",
        "0",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let summary = std::fs::read_to_string(out.path().join("summary.csv")).unwrap();
    assert!(summary.contains("exit_fraction_tier_1,1\n"), "{summary}");
}

#[test]
fn missing_file_is_io_error() {
    let o = coe(&[
        "run",
        "--predictions",
        "/nonexistent/p.csv",
        "--tiers",
        "m1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let j = error_json(&o);
    assert_eq!(j["error"], "io");
    assert!(j["message"]
        .as_str()
        .unwrap()
        .contains("/nonexistent/p.csv"));
}

#[test]
fn bad_cell_names_row_and_column() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.csv");
    std::fs::write(&p, "example_id,true_label,pred:m1\n0,1,1\n1,1,x\n").unwrap();
    let o = coe(&["validate", "--predictions", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let msg = error_json(&o)["message"].as_str().unwrap().to_string();
    assert!(msg.contains("row 3") && msg.contains("pred:m1"), "{msg}");
}

#[test]
fn invalid_theta_is_validation_error() {
    let cfg = fixtures().join("cifar10/run.toml");
    let o = coe(&["run", "--config", cfg.to_str().unwrap(), "--theta", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(error_json(&o)["error"], "validation");
}

#[test]
fn unknown_model_in_tiers() {
    let cfg = fixtures().join("cifar10/run.toml");
    let o = coe(&[
        "validate",
        "--config",
        cfg.to_str().unwrap(),
        "--tiers",
        "t1a|nope",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(error_json(&o)["message"].as_str().unwrap().contains("nope"));
}

#[test]
fn unreachable_endpoint_is_remote_error() {
    let dir = tempfile::tempdir().unwrap();
    let ex = dir.path().join("ex.csv");
    std::fs::write(&ex, "example_id,true_label\na,0\n").unwrap();
    // port 9 (discard) on localhost is closed in the test environment
    let o = coe(&[
        "fetch",
        "--endpoint",
        "http://127.0.0.1:9",
        "--models",
        "m1",
        "--examples",
        ex.to_str().unwrap(),
        "--labels",
        "2",
        "--timeout-ms",
        "500",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3));
    let j = error_json(&o);
    assert_eq!(j["error"], "remote");
    assert!(j["message"].as_str().unwrap().contains("m1"));
}

#[test]
fn validate_reports_counts() {
    let cfg = fixtures().join("cifar10/run.toml");
    let o = coe(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let s = String::from_utf8(o.stdout).unwrap();
    assert!(s.contains("examples=100 models=8 labels=10"), "{s}");
    assert!(s.contains("tiers=4"), "{s}");
}

#[test]
fn cost_report_from_fixtures() {
    let out = tempfile::tempdir().unwrap();
    let fx = fixtures().join("tiers/imagenet.csv");
    let o = coe(&[
        "cost-report",
        "--fixture",
        fx.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let report = std::fs::read_to_string(out.path().join("report.csv")).unwrap();
    assert!(
        report.contains("imagenet,gpu_dollars_per_hour,0.26,0.23,0.25,0.74,1.29"),
        "{report}"
    );
    assert!(
        report.contains("imagenet,avg_flops,2.15e9,3.90e9,4.30e9,3.07e9,4.30e9"),
        "{report}"
    );
}

#[test]
fn comm_sim_prints_ratio() {
    let out = tempfile::tempdir().unwrap();
    let fx = fixtures().join("tiers/sst2.csv");
    let o = coe(&[
        "comm-sim",
        "--fixture",
        fx.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .contains("reduction_ratio=13.59"));
}

#[test]
fn pareto_of_points_file() {
    let out = tempfile::tempdir().unwrap();
    let pts = fixtures().join("pareto_points.csv");
    let o = coe(&[
        "pareto",
        "--points",
        pts.to_str().unwrap(),
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let front = std::fs::read_to_string(out.path().join("pareto.csv")).unwrap();
    let tags: Vec<&str> = front
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(
        tags,
        [
            "single:small",
            "coe:size=3:theta=0.67",
            "coe:size=2:theta=1",
            "coe:size=3:theta=1"
        ]
    );
}

#[test]
fn synth_is_seeded() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &tempfile::TempDir| {
        coe(&[
            "synth",
            "--examples",
            "300",
            "--labels",
            "4",
            "--accuracies",
            "0.6,0.9",
            "--seed",
            "11",
            "--out",
            d.path().to_str().unwrap(),
        ])
    };
    let (oa, ob) = (args(&a), args(&b));
    assert!(oa.status.success());
    let sum = |o: &Output| {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .find(|l| l.starts_with("checksum="))
            .unwrap()
            .to_string()
    };
    assert_eq!(sum(&oa), sum(&ob));
    assert_eq!(
        std::fs::read(a.path().join("predictions.csv")).unwrap(),
        std::fs::read(b.path().join("predictions.csv")).unwrap()
    );
}

#[test]
fn bad_arguments_exit_nonzero() {
    assert_eq!(coe(&["run", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(
        coe(&[
            "--threads",
            "0",
            "synth",
            "--examples",
            "1",
            "--labels",
            "2",
            "--accuracies",
            "0.5"
        ])
        .status
        .code(),
        Some(1)
    );
}
