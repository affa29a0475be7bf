use std::path::Path;
use std::process::{Command, Output};

use tempfile::tempdir;

fn sscd_cmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sscd"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap()
}

#[test]
fn simulate_is_deterministic_and_round_trips() {
    let dir = tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let output = sscd_cmd(&[
            "simulate",
            "--p",
            "10",
            "--n-obs",
            "300",
            "--seed",
            "7",
            "--latent-hubs",
            "1",
            "--hub-children",
            "5",
            "--weight-low",
            "4.5",
            "--weight-high",
            "5.5",
            "--rho",
            "0.4",
            "--out-dir",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "{output:?}");
    }
    for file in [
        "sem_spec.json",
        "observational.csv",
        "interventions.csv",
        "gold_standard.json",
        "labels.csv",
    ] {
        assert_eq!(read(&a.join(file)), read(&b.join(file)), "{file} differs");
    }

    // The emitted CSV parses back through ingestion without loss.
    let data = sscd::io::read_data_csv(a.join("observational.csv")).unwrap();
    assert_eq!(data.n(), 300);
    assert_eq!(data.p(), 10);
    let labels = sscd::io::read_label_csv(a.join("labels.csv"), &data).unwrap();
    assert_eq!(labels.len(), 90);
    assert!(labels.num_labelled() > 0);
    let rewritten = a.join("rewritten.csv");
    sscd::io::write_data_csv(&rewritten, &data).unwrap();
    assert_eq!(read(&a.join("observational.csv")), read(&rewritten));
}

#[test]
fn simulate_rejects_single_variable() {
    let dir = tempdir().unwrap();
    let output = sscd_cmd(&[
        "simulate",
        "--p",
        "1",
        "--out-dir",
        dir.path().join("x").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn fit_reports_missing_label_file_with_path() {
    let dir = tempdir().unwrap();
    let sim = dir.path().join("sim");
    assert!(sscd_cmd(&[
        "simulate",
        "--p",
        "6",
        "--n-obs",
        "120",
        "--seed",
        "3",
        "--out-dir",
        sim.to_str().unwrap(),
    ])
    .status
    .success());

    let missing = dir.path().join("nope.csv");
    let output = sscd_cmd(&[
        "fit",
        "--data",
        sim.join("observational.csv").to_str().unwrap(),
        "--labels",
        missing.to_str().unwrap(),
        "--out",
        dir.path().join("out.json").to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("nope.csv"),
        "message should name the path: {stderr}"
    );
}

#[test]
fn fit_is_deterministic_and_echoes_overrides() {
    let dir = tempdir().unwrap();
    let sim = dir.path().join("sim");
    assert!(sscd_cmd(&[
        "simulate",
        "--p",
        "8",
        "--n-obs",
        "200",
        "--seed",
        "11",
        "--latent-hubs",
        "1",
        "--hub-children",
        "4",
        "--weight-low",
        "4.5",
        "--weight-high",
        "5.5",
        "--rho",
        "0.5",
        "--out-dir",
        sim.to_str().unwrap(),
    ])
    .status
    .success());

    let out1 = dir.path().join("s1.json");
    let out2 = dir.path().join("s2.json");
    for out in [&out1, &out2] {
        let output = sscd_cmd(&[
            "fit",
            "--data",
            sim.join("observational.csv").to_str().unwrap(),
            "--labels",
            sim.join("labels.csv").to_str().unwrap(),
            "--lambda",
            "0.01",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(output.status.success(), "{output:?}");
    }
    assert_eq!(read(&out1), read(&out2));
    let parsed: serde_json::Value = serde_json::from_slice(&read(&out1)).unwrap();
    assert_eq!(parsed["lambda"], 0.01);
    assert_eq!(parsed["method"], "sscd");
    assert_eq!(parsed["pairs"].as_array().unwrap().len(), 56);
}

#[test]
fn evaluate_writes_complete_reports_and_respects_method_list() {
    let dir = tempdir().unwrap();
    let json = dir.path().join("report.json");
    let csv = dir.path().join("report.csv");
    let output = sscd_cmd(&[
        "evaluate",
        "--p",
        "14",
        "--latent-hubs",
        "1",
        "--hub-children",
        "6",
        "--weight-low",
        "4.5",
        "--weight-high",
        "5.5",
        "--n-train",
        "150",
        "--rho-grid",
        "0.3,0.5",
        "--methods",
        "pearson,kendall",
        "--replicates",
        "2",
        "--seed",
        "5",
        "--out-json",
        json.to_str().unwrap(),
        "--out-csv",
        csv.to_str().unwrap(),
    ]);
    assert!(output.status.success(), "{output:?}");

    let text = std::fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    // header + |methods| * |rho| * |n_train| * replicates
    assert_eq!(rows.len(), 1 + 2 * 2 * 1 * 2);
    assert_eq!(rows[0], "method,rho,n_train,replicate,auc");
    assert!(rows[1..].iter().all(|r| {
        let m = r.split(',').next().unwrap();
        m == "pearson" || m == "kendall"
    }));

    let parsed: serde_json::Value = serde_json::from_slice(&read(&json)).unwrap();
    assert_eq!(parsed["config"]["p"], 14);
    assert_eq!(parsed["failures"].as_array().unwrap().len(), 0);
}
