//! Activation × depth training matrix on CIFAR-10.

use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use osc_core::activation::ActivationId;
use osc_core::data::{load_cifar10, stratified_subset, ImageDataset};
use osc_core::nn::{
    build_model, evaluate_top1, save_checkpoint, train_epoch, AdamState, NetworkConfig, NnError, DEFAULT_BATCH,
    DEFAULT_LR,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::BenchError;

pub const DEFAULT_EPOCHS: usize = 25;
/// Epochs at which the summary reports test accuracy.
pub const REPORT_EPOCHS: [usize; 2] = [20, 25];
pub const RECORDS_FILE: &str = "records.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CONFIG_FILE: &str = "bench_config.json";
pub const CHECKPOINT_DIR: &str = "checkpoints";
const EVAL_BATCH: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub activations: Vec<ActivationId>,
    pub conv_layers: Vec<usize>,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
    /// Stratified training subset size.
    pub subset: Option<usize>,
    /// Stratified test subset size.
    pub test_subset: Option<usize>,
    pub seed: u64,
    /// Not written to `bench_config.json`.
    #[serde(skip)]
    pub out_dir: PathBuf,
    pub data_dir: PathBuf,
    pub deterministic: bool,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            activations: ActivationId::CATALOG.to_vec(),
            conv_layers: vec![1, 2, 3, 4],
            epochs: DEFAULT_EPOCHS,
            batch: DEFAULT_BATCH,
            lr: DEFAULT_LR,
            subset: None,
            test_subset: None,
            seed: 0,
            out_dir: PathBuf::from("out"),
            data_dir: PathBuf::from("data"),
            deterministic: false,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.activations.is_empty() {
            return bad("no activations selected".into());
        }
        if self.conv_layers.is_empty() {
            return bad("no conv layer counts selected".into());
        }
        if let Some(&n) = self.conv_layers.iter().find(|n| !(1..=4).contains(*n)) {
            return bad(format!("conv layer count {n} outside 1..=4"));
        }
        if self.epochs == 0 {
            return bad("epochs must be positive".into());
        }
        if self.batch == 0 {
            return bad("batch must be positive".into());
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return bad(format!("learning rate {} must be finite and non-negative", self.lr));
        }
        for n in [self.subset, self.test_subset].into_iter().flatten() {
            if n == 0 || n % 10 != 0 {
                return bad(format!("subset size {n} must be a positive multiple of 10"));
            }
        }
        Ok(())
    }
}

/// One line of `records.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub activation: String,
    pub conv_layers: usize,
    pub epoch: usize,
    pub train_loss: f64,
    pub test_top1: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Diverged,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub activation: String,
    pub conv_layers: usize,
    pub epochs_completed: usize,
    pub top1_epoch20: Option<f64>,
    pub top1_epoch25: Option<f64>,
    pub best_top1: Option<f64>,
    pub final_top1: Option<f64>,
    pub status: RunStatus,
    pub note: String,
}

impl SummaryRow {
    fn from_records(activation: ActivationId, conv_layers: usize, records: &[RunRecord], diverged: Option<String>) -> Self {
        let at = |e: usize| records.iter().find(|r| r.epoch == e).map(|r| r.test_top1);
        Self {
            activation: activation.name().to_string(),
            conv_layers,
            epochs_completed: records.len(),
            top1_epoch20: at(REPORT_EPOCHS[0]),
            top1_epoch25: at(REPORT_EPOCHS[1]),
            best_top1: records.iter().map(|r| r.test_top1).reduce(f64::max),
            final_top1: records.last().map(|r| r.test_top1),
            status: if diverged.is_some() {
                RunStatus::Diverged
            } else {
                RunStatus::Completed
            },
            note: diverged.unwrap_or_default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub records: Vec<RunRecord>,
    pub summary: SummaryRow,
    pub params: Vec<osc_core::Tensor<f32>>,
}

/// Trains one (activation, depth) cell. A non-finite loss ends the cell
/// with status `diverged`; other errors propagate.
pub fn run_cell(
    train: &ImageDataset<f32>,
    test: &ImageDataset<f32>,
    activation: ActivationId,
    conv_layers: usize,
    cfg: &BenchConfig,
    mut on_epoch: impl FnMut(&RunRecord),
) -> Result<CellResult, BenchError> {
    let mut net = build_model::<f32>(&NetworkConfig::new(conv_layers, activation, cfg.seed))?;
    let mut adam = AdamState::new(net.params());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut records = Vec::with_capacity(cfg.epochs);
    let mut diverged = None;
    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        let loss = match train_epoch(&mut net, &mut adam, train, cfg.batch, cfg.lr, &mut rng) {
            Ok(l) => l,
            Err(NnError::Divergence { batch }) => {
                diverged = Some(format!("non-finite loss at epoch {epoch}, batch {batch}"));
                break;
            }
            Err(e) => return Err(e.into()),
        };
        let test_top1 = evaluate_top1(&net, test, EVAL_BATCH)?;
        let record = RunRecord {
            activation: activation.name().to_string(),
            conv_layers,
            epoch,
            train_loss: loss as f64,
            test_top1,
            wall_seconds: if cfg.deterministic {
                0.0
            } else {
                start.elapsed().as_secs_f64()
            },
        };
        on_epoch(&record);
        records.push(record);
    }
    let summary = SummaryRow::from_records(activation, conv_layers, &records, diverged);
    Ok(CellResult {
        records,
        summary,
        params: net.params().to_vec(),
    })
}

pub fn load_data(cfg: &BenchConfig) -> Result<(ImageDataset<f32>, ImageDataset<f32>), BenchError> {
    let (mut train, mut test) = load_cifar10::<f32>(&cfg.data_dir)?;
    if let Some(n) = cfg.subset {
        train = stratified_subset(&train, n, cfg.seed)?;
    }
    if let Some(n) = cfg.test_subset {
        test = stratified_subset(&test, n, cfg.seed)?;
    }
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOutcome {
    pub summary: Vec<SummaryRow>,
    pub records_path: PathBuf,
    pub summary_path: PathBuf,
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(BenchError::io(path))?;
    Ok(())
}

pub fn cmd_bench(cfg: &BenchConfig) -> Result<BenchOutcome, BenchError> {
    cfg.validate()?;
    let (train, test) = load_data(cfg)?;
    let out = &cfg.out_dir;
    let ckpt_dir = out.join(CHECKPOINT_DIR);
    fs::create_dir_all(&ckpt_dir).map_err(BenchError::io(&ckpt_dir))?;

    let config_path = out.join(CONFIG_FILE);
    let mut cfg_file = File::create(&config_path).map_err(BenchError::io(&config_path))?;
    serde_json::to_writer_pretty(&mut cfg_file, cfg)?;
    writeln!(cfg_file).map_err(BenchError::io(&config_path))?;

    let records_path = out.join(RECORDS_FILE);
    File::create(&records_path).map_err(BenchError::io(&records_path))?;
    let mut summary = Vec::new();
    for &activation in &cfg.activations {
        for &layers in &cfg.conv_layers {
            let mut sink = OpenOptions::new()
                .append(true)
                .open(&records_path)
                .map_err(BenchError::io(&records_path))?;
            let mut write_err = None;
            let cell = run_cell(&train, &test, activation, layers, cfg, |r| {
                eprintln!(
                    "{} conv={} epoch {:>2}: train_loss {:.4} test_top1 {:.4}",
                    r.activation, r.conv_layers, r.epoch, r.train_loss, r.test_top1
                );
                let line = serde_json::to_string(r).expect("record serializes");
                if let Err(e) = writeln!(sink, "{line}") {
                    write_err.get_or_insert(e);
                }
            })?;
            if let Some(e) = write_err {
                return Err(BenchError::Io {
                    path: records_path,
                    source: e,
                });
            }
            let ckpt = ckpt_dir.join(format!("{}_conv{layers}.osc", activation.name().to_ascii_lowercase()));
            let file = File::create(&ckpt).map_err(BenchError::io(&ckpt))?;
            save_checkpoint(&cell.params, BufWriter::new(file))?;
            summary.push(cell.summary);
        }
    }
    let summary_path = out.join(SUMMARY_FILE);
    write_summary(&summary_path, &summary)?;
    Ok(BenchOutcome {
        summary,
        records_path,
        summary_path,
    })
}
