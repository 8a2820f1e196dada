//! Long-format CSV series from `records.jsonl`.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bench::RunRecord;
use crate::error::BenchError;

pub const EPOCH_SERIES_FILE: &str = "accuracy_vs_epoch.csv";
pub const DEPTH_SERIES_FILE: &str = "accuracy_vs_depth.csv";

#[derive(Debug, Serialize)]
struct Point<'a> {
    series: &'a str,
    conv_layers: usize,
    epoch: usize,
    test_top1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotOutput {
    /// Distinct activations seen.
    pub series: usize,
    pub epoch_csv: PathBuf,
    pub depth_csv: PathBuf,
}

type Key = (String, usize, usize);

pub fn parse_records(text: &str, path: &Path) -> Result<BTreeMap<Key, RunRecord>, BenchError> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |message: String| BenchError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        };
        let r: RunRecord = serde_json::from_str(line).map_err(|e| err(e.to_string()))?;
        let key = (r.activation.clone(), r.conv_layers, r.epoch);
        if out.insert(key, r).is_some() {
            return Err(err("duplicate (activation, conv_layers, epoch)".into()));
        }
    }
    Ok(out)
}

/// Header is written eagerly so an empty records file still yields one.
fn series_writer(path: &Path) -> Result<csv::Writer<fs::File>, BenchError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(["series", "conv_layers", "epoch", "test_top1"])?;
    Ok(w)
}

/// Writes accuracy-vs-epoch (every record) and accuracy-vs-depth (last
/// epoch of each run) series, one series per activation.
pub fn cmd_emit_plots(records: &Path, out_dir: &Path) -> Result<PlotOutput, BenchError> {
    let text = fs::read_to_string(records).map_err(BenchError::io(records))?;
    let parsed = parse_records(&text, records)?;
    fs::create_dir_all(out_dir).map_err(BenchError::io(out_dir))?;

    let epoch_csv = out_dir.join(EPOCH_SERIES_FILE);
    let mut w = series_writer(&epoch_csv)?;
    for r in parsed.values() {
        w.serialize(Point {
            series: &r.activation,
            conv_layers: r.conv_layers,
            epoch: r.epoch,
            test_top1: r.test_top1,
        })?;
    }
    w.flush().map_err(BenchError::io(&epoch_csv))?;

    let mut last: BTreeMap<(&str, usize), &RunRecord> = BTreeMap::new();
    for r in parsed.values() {
        // keys are sorted by epoch within a run, so the final insert wins
        last.insert((&r.activation, r.conv_layers), r);
    }
    let depth_csv = out_dir.join(DEPTH_SERIES_FILE);
    let mut w = series_writer(&depth_csv)?;
    for r in last.values() {
        w.serialize(Point {
            series: &r.activation,
            conv_layers: r.conv_layers,
            epoch: r.epoch,
            test_top1: r.test_top1,
        })?;
    }
    w.flush().map_err(BenchError::io(&depth_csv))?;

    let mut names: Vec<&str> = parsed.values().map(|r| r.activation.as_str()).collect();
    names.dedup();
    Ok(PlotOutput {
        series: names.len(),
        epoch_csv,
        depth_csv,
    })
}
