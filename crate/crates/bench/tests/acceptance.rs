//! Acceptance criteria. Each test prints one `criterion N [PASS|FAIL]` line
//! to stderr (uncaptured) and then asserts.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use osc_bench::bench::{load_data, run_cell, BenchConfig};
use osc_core::activation::scan::{gradient_check, range_scan, Interval};
use osc_core::activation::{derivative, evaluate, ActivationId};
use osc_core::data::{
    load_cifar10, locate_batches, parse_batch, synthetic_batch, synthetic_check_image, write_synthetic_cifar,
    CheckImage, CifarRecord, ImageDataset, RECORD_BYTES,
};
use osc_core::nn::ops::softmax_cross_entropy;
use osc_core::nn::{
    adam_step, build_model, build_model_for, train_epoch, AdamState, Mode, Network, NetworkConfig,
};
use osc_core::report::{PropertyReport, ReportOptions};
use osc_core::xor::grid_search_certificate;
use osc_core::Tensor;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ActivationId::*;

fn report(n: u32, name: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n} [{verdict}] {name}: {detail}");
}

fn finish(n: u32, name: &str, failures: &[String], ok_detail: &str) {
    if failures.is_empty() {
        report(n, name, true, ok_detail);
    } else {
        report(n, name, false, &failures.join("; "));
        panic!("criterion {n} failed: {}", failures.join("; "));
    }
}

#[test]
fn criterion_1_xor_grid_certificates() {
    const LIMIT: Duration = Duration::from_secs(120);
    let capable = [Sine, SQU, NCU, SSU, GCU, DSU];
    let incapable = [
        Identity, Signum, Sigmoid, BipolarSigmoid, Tanh, HardTanh, SoftRootSign, ReLU, LeakyReLU, PReLU, ELU, SELU,
        GELU, Swish, SiLU, Mish, Softplus, LiSHT, Absolute,
    ];
    let mut failures = Vec::new();
    let mut slowest = Duration::ZERO;
    for (ids, expect) in [(&capable[..], true), (&incapable[..], false)] {
        for &id in ids {
            let start = Instant::now();
            let cert = grid_search_certificate::<f64>(id, 5.0, 0.1).unwrap();
            let took = start.elapsed();
            slowest = slowest.max(took);
            if cert.is_valid() != expect {
                failures.push(format!("{id}: valid={} (best {}/4)", cert.is_valid(), cert.correct));
            }
            if took >= LIMIT {
                failures.push(format!("{id}: took {took:?}"));
            }
        }
    }
    finish(
        1,
        "XOR grid search",
        &failures,
        &format!("6 certified, 19 without certificate, slowest {slowest:.2?}"),
    );
}

#[test]
fn criterion_2_catalog_properties() {
    let report_ = PropertyReport::build(&ReportOptions {
        with_xor: false,
        ..ReportOptions::default()
    });
    let mut failures: Vec<String> = report_
        .contradictions()
        .into_iter()
        .map(|(id, c)| format!("{id}: {c}"))
        .collect();

    let wide = Interval::symmetric(20.0);
    let squ = range_scan(SQU, wide);
    if (squ.min + 0.25).abs() > 0.01 {
        failures.push(format!("SQU min {} != -0.25", squ.min));
    }
    let dsu = range_scan(DSU, wide);
    if (dsu.max - 1.04).abs() > 0.01 || (dsu.min + 1.04).abs() > 0.01 {
        failures.push(format!(
            "DSU extremes measured [{:.4}, {:.4}] (at z = {:.3}, {:.3}), required +/-1.04 +/- 0.01",
            dsu.min, dsu.max, dsu.argmin, dsu.argmax
        ));
    }
    let ssu = range_scan(SSU, wide);
    if (ssu.min + 0.68).abs() > 0.01 || (ssu.max - std::f64::consts::PI).abs() > 0.01 {
        failures.push(format!("SSU range [{}, {}]", ssu.min, ssu.max));
    }
    finish(
        2,
        "catalog property scans",
        &failures,
        &format!("{} descriptors consistent; SQU min {:.4}, DSU {:.4}, SSU [{:.4}, {:.4}]", report_.rows.len(), squ.min, dsu.max, ssu.min, ssu.max),
    );
}

fn tiny_gradient_error(id: ActivationId) -> f64 {
    let mut net: Network<f64> = build_model_for(&NetworkConfig::new(1, id, 21), [3, 4, 4], 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let x = Tensor::from_fn(&[3, 3, 4, 4], |_| (rng.next_u32() as f64 / u32::MAX as f64) * 2.0 - 1.0);
    let labels = [0, 1, 1];
    net.loss_and_grad(&x, &labels, Mode::Eval).unwrap();
    let analytic = net.grads().to_vec();
    let h = 1e-6;
    let mut worst = 0.0f64;
    for (t, a_t) in analytic.iter().enumerate() {
        for i in 0..a_t.len() {
            let orig = net.params()[t].data()[i];
            net.params_mut()[t].data_mut()[i] = orig + h;
            let up = net.loss_and_grad(&x, &labels, Mode::Eval).unwrap();
            net.params_mut()[t].data_mut()[i] = orig - h;
            let down = net.loss_and_grad(&x, &labels, Mode::Eval).unwrap();
            net.params_mut()[t].data_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = a_t.data()[i];
            worst = worst.max((a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-4));
        }
    }
    worst
}

#[test]
fn criterion_3_gradient_fidelity() {
    let iv = Interval::new(-6.0, 6.0, 0.01).unwrap();
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for id in ActivationId::ALL {
        let r = gradient_check(id, iv, 1000, 1e-5);
        worst = worst.max(r.max_rel_error);
        if !r.pass {
            failures.push(format!("{id}: {} at z = {}", r.max_rel_error, r.worst_z));
        }
    }
    let mut model_worst = 0.0f64;
    for id in [GCU, SQU, DSU, Tanh] {
        let e = tiny_gradient_error(id);
        model_worst = model_worst.max(e);
        if e > 1e-3 {
            failures.push(format!("tiny model with {id}: rel error {e}"));
        }
    }
    finish(
        3,
        "gradient fidelity",
        &failures,
        &format!("activation max rel error {worst:.2e}, tiny model {model_worst:.2e}"),
    );
}

#[test]
fn criterion_4_linear_regime() {
    // activations whose small-value approximation is tabulated as z
    let linear = [Identity, BipolarSigmoid, Tanh, Sine, SoftRootSign, HardTanh, GCU, DSU, SQU, NCU];
    let mut failures = Vec::new();
    for id in linear {
        let g0 = evaluate(id, 0.0f64);
        let d0 = derivative(id, 0.0f64).unwrap();
        if g0 != 0.0 || (d0 - 1.0).abs() > 1e-9 {
            failures.push(format!("{id}: g(0) = {g0}, g'(0) = {d0}"));
        }
    }
    finish(4, "linear regime at the origin", &failures, "g(0) = 0 and g'(0) = 1 for all 10");
}

#[test]
fn criterion_5_loss_and_optimizer() {
    let mut failures = Vec::new();

    let (loss, _) = softmax_cross_entropy(&Tensor::full(&[4, 10], 1.3f64), &[0, 3, 7, 9]).unwrap();
    if (loss - 10f64.ln()).abs() > 1e-9 {
        failures.push(format!("uniform cross-entropy {loss}"));
    }

    let mut net = build_model::<f32>(&NetworkConfig::new(2, GCU, 1)).unwrap();
    let before = net.params().to_vec();
    let zeros: Vec<_> = before.iter().map(|p| Tensor::zeros(p.shape())).collect();
    let mut adam = AdamState::new(net.params());
    adam_step(net.params_mut(), &zeros, &mut adam, 1e-3).unwrap();
    if net.params() != &before[..] {
        failures.push("zero-gradient Adam step changed parameters".into());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let image = Tensor::from_fn(&[1, 3, 32, 32], |_| (rng.next_u32() % 256) as f32 / 255.0);
    let one = ImageDataset::new(image, vec![7]).unwrap();
    let mut net = build_model::<f32>(&NetworkConfig::new(1, ReLU, 0)).unwrap();
    let mut adam = AdamState::new(net.params());
    let mut reached = None;
    let mut last = f32::NAN;
    for epoch in 1..=200 {
        last = train_epoch(&mut net, &mut adam, &one, 64, 1e-3, &mut rng).unwrap();
        if last < 0.01 {
            reached = Some(epoch);
            break;
        }
    }
    if reached.is_none() {
        failures.push(format!("memorization loss {last} after 200 epochs"));
    }
    finish(
        5,
        "loss and optimizer oracles",
        &failures,
        &format!("ln 10 error {:.1e}, memorized at epoch {}", (loss - 10f64.ln()).abs(), reached.unwrap_or(0)),
    );
}

#[test]
fn criterion_6_data_ingestion() {
    let mut failures = Vec::new();
    for (kind, label) in [(CheckImage::Constant(0), 0), (CheckImage::Constant(255), 9), (CheckImage::Gradient, 4)] {
        let bytes = synthetic_check_image(kind, label);
        if CifarRecord::decode(&bytes).unwrap().encode() != bytes {
            failures.push(format!("{kind:?} record does not round trip"));
        }
    }
    let batch = synthetic_batch(50, 3);
    let ds = parse_batch::<f32>(&batch, Path::new("synthetic")).unwrap();
    let re: Vec<u8> = (0..ds.len())
        .flat_map(|i| {
            let mut rec = vec![ds.labels()[i] as u8];
            let px = &ds.images().data()[i * 3072..(i + 1) * 3072];
            rec.extend(px.iter().map(|&p| (p * 255.0).round() as u8));
            rec
        })
        .collect();
    if re != batch {
        failures.push("decoded batch does not re-encode bit-exactly".into());
    }
    if batch.len() != 50 * RECORD_BYTES {
        failures.push("record size".into());
    }

    let detail = match std::env::var_os("OSC_DATA_DIR").map(PathBuf::from) {
        Some(dir) if locate_batches(&dir).is_ok() => {
            let (train, test) = load_cifar10::<f32>(&dir).unwrap();
            if train.len() != 50_000 || test.len() != 10_000 {
                failures.push(format!("archive sizes {} / {}", train.len(), test.len()));
            }
            if train.histogram() != [5000; 10] || test.histogram() != [1000; 10] {
                failures.push("archive label histograms are not uniform".into());
            }
            "synthetic round trip and real archive verified"
        }
        _ => "synthetic round trip verified; archive not present",
    };
    finish(6, "data ingestion", &failures, detail);
}

#[test]
fn criterion_7_desk_scale_benchmark() {
    let name = "desk-scale CIFAR-10 benchmark";
    let dir = std::env::var_os("OSC_DATA_DIR").map(PathBuf::from);
    let Some(dir) = dir.filter(|d| locate_batches(d).is_ok()) else {
        let msg = "CIFAR-10 archive not found (set OSC_DATA_DIR to the binary batch directory)";
        report(7, name, false, msg);
        panic!("criterion 7 failed: {msg}");
    };
    let cfg = BenchConfig {
        activations: vec![ReLU, SQU, DSU, SSU, GCU, Sigmoid, Signum],
        conv_layers: vec![2],
        epochs: 10,
        batch: 64,
        lr: 1e-4,
        subset: Some(5000),
        test_subset: Some(1000),
        seed: 0,
        data_dir: dir,
        deterministic: true,
        ..BenchConfig::default()
    };
    let (train, test) = load_data(&cfg).unwrap();
    let mut acc = std::collections::BTreeMap::new();
    for &id in &cfg.activations {
        let cell = run_cell(&train, &test, id, 2, &cfg, |_| {}).unwrap();
        acc.insert(id, cell.summary.final_top1.unwrap_or(0.0));
    }
    let mut failures = Vec::new();
    for id in [ReLU, SQU, DSU, SSU, GCU] {
        if acc[&id] < 0.35 {
            failures.push(format!("{id} top-1 {:.3} < 0.35", acc[&id]));
        }
    }
    if acc[&Sigmoid] > acc[&ReLU] - 0.05 {
        failures.push(format!("Sigmoid {:.3} not 0.05 below ReLU {:.3}", acc[&Sigmoid], acc[&ReLU]));
    }
    if acc[&Signum] > 0.30 {
        failures.push(format!("Signum {:.3} > 0.30", acc[&Signum]));
    }
    let summary: Vec<String> = acc.iter().map(|(id, a)| format!("{id} {a:.3}")).collect();
    finish(7, name, &failures, &summary.join(", "));
}

fn osc(out: &Path, args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_osc"))
        .arg("--out-dir")
        .arg(out)
        .arg("--deterministic")
        .args(args)
        .env_remove("OSC_DATA_DIR")
        .output()
        .expect("run osc")
        .status
        .code()
        .unwrap_or(-1)
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn criterion_8_determinism() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    write_synthetic_cifar(&data, 40, 40, 9).unwrap();
    let data = data.to_str().unwrap();
    let runs: Vec<(&str, Vec<&str>, i32)> = vec![
        ("properties", vec!["properties"], 0),
        ("xor", vec!["xor", "--activations", "ssu,gcu,sigmoid"], 5),
        (
            "bench",
            vec![
                "bench", "--data-dir", data, "--activations", "relu,squ", "--conv-layers", "1", "--epochs", "2",
                "--subset", "100", "--test-subset", "20", "--seed", "4",
            ],
            0,
        ),
    ];
    let mut failures = Vec::new();
    for (name, args, code) in runs {
        let a = tmp.path().join(format!("{name}_a"));
        let b = tmp.path().join(format!("{name}_b"));
        let (ca, cb) = (osc(&a, &args), osc(&b, &args));
        if ca != code || cb != code {
            failures.push(format!("{name}: exit codes {ca}/{cb}, expected {code}"));
        }
        if name == "bench" {
            for dir in [&a, &b] {
                if osc(dir, &["emit-plots"]) != 0 {
                    failures.push("emit-plots failed".into());
                }
            }
        }
        let (ta, tb) = (tree(&a), tree(&b));
        if ta.is_empty() || ta != tb {
            failures.push(format!("{name}: outputs differ ({} vs {} files)", ta.len(), tb.len()));
        }
    }
    finish(8, "determinism", &failures, "properties, xor, bench and emit-plots outputs byte-identical");
}
