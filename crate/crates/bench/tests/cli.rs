use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use osc_bench::bench::RunRecord;
use osc_core::data::{synthetic_batch, write_synthetic_cifar, TEST_FILE};
use serde_json::Value;

fn osc(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_osc"))
        .arg("--out-dir")
        .arg(out)
        .args(args)
        .env_remove("OSC_DATA_DIR")
        .output()
        .expect("run osc")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

#[test]
fn properties_report() {
    let tmp = tempfile::tempdir().unwrap();
    let o = osc(tmp.path(), &["properties"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let json: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("properties.json")).unwrap()).unwrap();
    let rows = json["rows"].as_array().unwrap();
    let row = |id: &str| rows.iter().find(|r| r["id"] == id).unwrap();
    assert_eq!(row("SQU")["zero_crossings"], 2);
    let swish = row("Swish")["measured_small_value"].as_array().unwrap();
    assert!((swish[1].as_f64().unwrap() - 0.5).abs() < 1e-6);
    assert_eq!(row("SSU")["xor_grid_certificate"], true);
    let csv = fs::read_to_string(tmp.path().join("properties.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 28);
}

#[test]
fn xor_certificates_and_failures() {
    let tmp = tempfile::tempdir().unwrap();
    let o = osc(tmp.path(), &["xor", "--activations", "ssu,dsu"]);
    assert_eq!(code(&o), 0);
    for name in ["ssu", "dsu"] {
        let cert: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join(format!("xor_{name}.json"))).unwrap()).unwrap();
        assert_eq!(cert["correct"], 4);
        assert_eq!(cert["valid"], true);
        assert_eq!(cert["margins"].as_array().unwrap().len(), 4);
        assert!(cert["w"].is_array() && cert["b"].is_number() && cert["activation"].is_string());
        let csv = fs::read_to_string(tmp.path().join(format!("xor_{name}_boundary.csv"))).unwrap();
        assert_eq!(csv.lines().next(), Some("x1,x2,sign"));
        assert_eq!(csv.lines().count(), 1 + 201 * 201);
    }

    let o = osc(tmp.path(), &["xor", "--activations", "sigmoid"]);
    assert_eq!(code(&o), 5);
    let cert: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("xor_sigmoid.json")).unwrap()).unwrap();
    assert_eq!(cert["valid"], false);
    assert_eq!(cert["source"], "none");
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&osc(tmp.path(), &["xor", "--activations", "bogus"])), 2);
    let data = tmp.path().join("data");
    write_synthetic_cifar(&data, 20, 10, 0).unwrap();
    let d = data.to_str().unwrap();
    assert_eq!(code(&osc(tmp.path(), &["bench", "--data-dir", d, "--conv-layers", "5"])), 2);
    assert_eq!(code(&osc(tmp.path(), &["bench", "--data-dir", d, "--subset", "15"])), 2);
    assert_eq!(code(&osc(tmp.path(), &["bench", "--data-dir", d, "--subset", "5000", "--epochs", "1"])), 2);
    assert_eq!(code(&osc(tmp.path(), &["bench"])), 2, "missing data dir is a usage error");
}

#[test]
fn data_errors_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    let o = osc(tmp.path(), &["bench", "--data-dir", empty.to_str().unwrap()]);
    assert_eq!(code(&o), 3);

    let data = tmp.path().join("data");
    write_synthetic_cifar(&data, 20, 10, 0).unwrap();
    let mut bad = synthetic_batch(10, 0);
    bad[3073 * 4] = 200;
    fs::write(data.join(TEST_FILE), bad).unwrap();
    let o = osc(tmp.path(), &["bench", "--data-dir", data.to_str().unwrap(), "--epochs", "1"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("offset 12292"));
}

#[test]
fn bench_bookkeeping_and_env_fallback() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    write_synthetic_cifar(&data, 200, 100, 1).unwrap();
    let out = tmp.path().join("out");
    let o = Command::new(env!("CARGO_BIN_EXE_osc"))
        .args(["--out-dir", out.to_str().unwrap(), "bench", "--activations", "relu", "--conv-layers", "1"])
        .args(["--subset", "640", "--epochs", "1"])
        .env("OSC_DATA_DIR", &data)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let records = fs::read_to_string(out.join("records.jsonl")).unwrap();
    assert_eq!(records.lines().count(), 1);
    let r: RunRecord = serde_json::from_str(records.lines().next().unwrap()).unwrap();
    assert_eq!((r.activation.as_str(), r.conv_layers, r.epoch), ("ReLU", 1, 1));
    assert!((0.0..=1.0).contains(&r.test_top1) && r.train_loss.is_finite());
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    assert!(summary.lines().next().unwrap().contains("top1_epoch20,top1_epoch25"));
    let blob = fs::read(out.join("checkpoints/relu_conv1.osc")).unwrap();
    assert_eq!(&blob[..4], b"OSC1");
}

fn record_line(act: &str, layers: usize, epoch: usize, acc: f64) -> String {
    format!(
        "{{\"activation\":\"{act}\",\"conv_layers\":{layers},\"epoch\":{epoch},\"train_loss\":1.5,\"test_top1\":{acc},\"wall_seconds\":0.0}}"
    )
}

#[test]
fn emit_plots_series() {
    let tmp = tempfile::tempdir().unwrap();
    let mut lines = Vec::new();
    let mut values = Vec::new();
    for act in ["GCU", "ReLU"] {
        for layers in [1, 2] {
            for epoch in [1, 2] {
                let acc = 0.1 * layers as f64 + 0.013 * epoch as f64 + if act == "GCU" { 0.0071 } else { 0.0 };
                values.push(acc);
                lines.push(record_line(act, layers, epoch, acc));
            }
        }
    }
    let path = tmp.path().join("records.jsonl");
    fs::write(&path, lines.join("\n") + "\n").unwrap();
    let o = osc(tmp.path(), &["emit-plots"]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stderr).contains("2 series"));

    let epoch_csv = fs::read_to_string(tmp.path().join("accuracy_vs_epoch.csv")).unwrap();
    let rows: Vec<&str> = epoch_csv.lines().collect();
    assert_eq!(rows[0], "series,conv_layers,epoch,test_top1");
    assert_eq!(rows.len(), 9);
    for row in &rows[1..] {
        let v: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(values.contains(&v), "{row}");
    }
    let depth_csv = fs::read_to_string(tmp.path().join("accuracy_vs_depth.csv")).unwrap();
    assert_eq!(depth_csv.lines().count(), 5);
    assert!(depth_csv.lines().all(|l| l.starts_with("series") || l.contains(",2,")));
}

#[test]
fn emit_plots_edge_cases() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("records.jsonl");
    fs::write(&path, "").unwrap();
    assert_eq!(code(&osc(tmp.path(), &["emit-plots"])), 0);
    let csv = fs::read_to_string(tmp.path().join("accuracy_vs_epoch.csv")).unwrap();
    assert_eq!(csv, "series,conv_layers,epoch,test_top1\n");

    fs::write(&path, format!("{}\n{{broken\n", record_line("ReLU", 1, 1, 0.2))).unwrap();
    let o = osc(tmp.path(), &["emit-plots", "--records", path.to_str().unwrap()]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("records.jsonl:2:"));

    assert_eq!(code(&osc(tmp.path(), &["emit-plots", "--records", "/nonexistent/records.jsonl"])), 1);
}
