use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use osc_core::report::{PropertyReport, ReportOptions};

use crate::error::BenchError;

pub const JSON_FILE: &str = "properties.json";
pub const CSV_FILE: &str = "properties.csv";

#[derive(Debug)]
pub struct PropertiesOutput {
    pub report: PropertyReport,
    pub json: PathBuf,
    pub csv: PathBuf,
}

/// Writes the report files, then fails with a contradiction error if any
/// measured property disagrees with its descriptor.
pub fn cmd_properties(out_dir: &Path, opts: &ReportOptions) -> Result<PropertiesOutput, BenchError> {
    fs::create_dir_all(out_dir).map_err(BenchError::io(out_dir))?;
    let report = PropertyReport::build(opts);
    let json = out_dir.join(JSON_FILE);
    let csv = out_dir.join(CSV_FILE);
    report.write_json(BufWriter::new(File::create(&json).map_err(BenchError::io(&json))?))?;
    report.write_csv(BufWriter::new(File::create(&csv).map_err(BenchError::io(&csv))?))?;
    let count = report.contradictions().len();
    if count > 0 {
        for (id, what) in report.contradictions() {
            eprintln!("contradiction: {id}: {what}");
        }
        return Err(BenchError::Contradiction { count });
    }
    Ok(PropertiesOutput { report, json, csv })
}
