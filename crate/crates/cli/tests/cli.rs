use std::process::{Command, Output};

use cglmp::{dataset, CountTable};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cglmp"))
        .args(args)
        .env_remove("CGLMP_SEED")
        .output()
        .unwrap()
}

fn json(output: &Output) -> Value {
    assert!(
        output.status.success(),
        "{}",
        String::from_utf8_lossy(&output.stderr)
    );
    serde_json::from_slice(&output.stdout).unwrap()
}

#[test]
fn export_round_trips_through_analysis() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mes.csv");
    let out = run(&[
        "datasets",
        "export",
        "--name",
        "mes",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let table = CountTable::load(&path).unwrap();
    assert_eq!(table, dataset("mes").unwrap());

    let from_file = json(&run(&[
        "analyze",
        "s4",
        "--counts",
        path.to_str().unwrap(),
        "--bootstrap",
        "300",
    ]));
    let embedded = json(&run(&[
        "analyze",
        "s4",
        "--dataset",
        "mes",
        "--bootstrap",
        "300",
    ]));
    assert_eq!(from_file["s"], embedded["s"]);
}

#[test]
fn stdout_export_is_csv() {
    let out = run(&["datasets", "export", "--name", "oes"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("alice_basis,bob_basis,alice_outcome,bob_outcome,count\n0,0,0,0,544\n"));
}

#[test]
fn seed_comes_from_environment() {
    let with_env = |seed: &str| {
        let out = Command::new(env!("CARGO_BIN_EXE_cglmp"))
            .args(["analyze", "s4", "--dataset", "oes", "--bootstrap", "200"])
            .env("CGLMP_SEED", seed)
            .output()
            .unwrap();
        json(&out)
    };
    let a = with_env("11");
    assert_eq!(a["seed"], 11);
    assert_eq!(a, with_env("11"));
    let flag = json(&run(&[
        "analyze",
        "s4",
        "--dataset",
        "oes",
        "--bootstrap",
        "200",
        "--seed",
        "11",
    ]));
    assert_eq!(a, flag);
}

#[test]
fn zero_replicates_omits_error() {
    let report = json(&run(&[
        "analyze",
        "s4",
        "--dataset",
        "mes",
        "--bootstrap",
        "0",
    ]));
    assert!(report["s"].get("stderr").is_none());
    assert!(report["violation_sigmas"].is_null());
}

#[test]
fn precision_controls_digits() {
    let short = json(&run(&[
        "--precision",
        "3",
        "theory",
        "smax",
        "--d",
        "4",
        "--state",
        "mes",
    ]));
    assert_eq!(short["s"].as_f64().unwrap(), 2.9);
    let long = json(&run(&[
        "--precision",
        "12",
        "theory",
        "smax",
        "--d",
        "4",
        "--state",
        "mes",
    ]));
    assert!((long["s"].as_f64().unwrap() - 2.89624).abs() < 1e-5);
    assert_ne!(long["s"].as_f64().unwrap(), 2.89624);
}

#[test]
fn validation_errors_exit_with_two() {
    for args in [
        &["datasets", "export", "--name", "nope"][..],
        &["theory", "smax", "--d", "1", "--state", "mes"],
        &["theory", "optimize", "--d", "0"],
        &["theory", "multiphoton", "--mu", "-1"],
        &["analyze", "s4"],
        &["analyze", "s4", "--dataset", "mes", "--counts", "x.csv"],
    ] {
        let out = run(args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn bad_inputs_exit_with_two_and_missing_files_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sim.json");
    std::fs::write(
        &config,
        r#"{"state": {"kind": "mes", "d": 4}, "noise": {"mu": 0.01, "eta_a": 1, "eta_b": 1, "colour": 1},
            "schedule": {"gates_per_setting": 10}}"#,
    )
    .unwrap();
    let out_csv = dir.path().join("out.csv");
    let out = run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out_csv.exists());

    let counts = dir.path().join("counts.csv");
    std::fs::write(
        &counts,
        "alice_basis,bob_basis,alice_outcome,bob_outcome,count\n0,0,0,0,5\n",
    )
    .unwrap();
    let out = run(&["analyze", "s4", "--counts", counts.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&[
        "analyze",
        "s4",
        "--counts",
        dir.path().join("missing.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn simulate_writes_count_table() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sim.json");
    std::fs::write(
        &config,
        r#"{"state": {"kind": "optimized", "d": 4},
            "noise": {"mu": 0.1, "eta_a": 0.5, "eta_b": 0.5, "dark_prob": 1e-5, "seed": 4},
            "schedule": {"gates_per_setting": 2000000, "pair_source": "poisson"}}"#,
    )
    .unwrap();
    let out_csv = dir.path().join("out.csv");
    let summary = json(&run(&[
        "simulate",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_csv.to_str().unwrap(),
    ]));
    let table = CountTable::load(&out_csv).unwrap();
    assert_eq!(summary["total"].as_u64().unwrap(), table.total());
    assert_eq!(table.metadata()["seed"], "4");
}

#[test]
fn scan_matches_plot_sampling() {
    let out = run(&[
        "scan",
        "fringe",
        "--model",
        "mes",
        "--points",
        "41",
        "--theta-b-points",
        "8",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta_a,theta_b,probability"));
    assert_eq!(lines.count(), 41 * 8);
    assert!(text.contains("\n0,0,0.25\n"));
}

#[test]
fn fit_reports_visibility() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("fringe.csv");
    let model = cglmp::FringeModel::oes(0.739).unwrap();
    let mut csv = String::from("# synthetic\ntheta_a,theta_b,counts\n");
    for i in 0..41 {
        let t = 2.0 * std::f64::consts::PI * i as f64 / 40.0;
        csv.push_str(&format!("{t},0,{}\n", model.counts(t, 0.0, 500.0, 8.0)));
    }
    std::fs::write(&data, csv).unwrap();
    let path = data.to_str().unwrap();
    let fit = json(&run(&[
        "fit", "fringe", "--data", path, "--model", "oes", "--gamma", "0.739",
    ]));
    assert!((fit["visibility"].as_f64().unwrap() - 500.0 / 516.0).abs() < 1e-5);
    let free = json(&run(&[
        "fit",
        "fringe",
        "--data",
        path,
        "--model",
        "oes",
        "--gamma",
        "0.9",
        "--fit-gamma",
    ]));
    assert!((free["gamma"].as_f64().unwrap() - 0.739).abs() < 1e-5);
    let weighted = json(&run(&[
        "fit",
        "fringe",
        "--data",
        path,
        "--model",
        "oes",
        "--weighted",
    ]));
    assert!(weighted["converged"].as_bool().unwrap());
    let out = run(&[
        "fit",
        "fringe",
        "--data",
        path,
        "--model",
        "mes",
        "--fit-gamma",
    ]);
    assert_eq!(out.status.code(), Some(2));
}
