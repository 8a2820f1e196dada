use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use osc_core::activation::ActivationId;
use osc_core::xor::{
    decision_boundary_grid, grid_search_certificate, train_single_neuron, CertificateRecord, CertificateSource,
    TrainSpec, XorError,
};

use crate::error::BenchError;

pub const GRID_BOUND: f64 = 5.0;
pub const GRID_RESOLUTION: f64 = 0.1;
/// Boundary CSV covers `[-BOUNDARY_EXTENT, BOUNDARY_EXTENT]²`.
pub const BOUNDARY_EXTENT: f64 = 2.0;
pub const BOUNDARY_POINTS: usize = 201;

#[derive(Debug, Clone)]
pub struct XorOutput {
    pub record: CertificateRecord,
    pub certificate_path: PathBuf,
    pub boundary_path: PathBuf,
}

fn xor_err(e: XorError) -> BenchError {
    match e {
        XorError::Io(source) => BenchError::Io {
            path: PathBuf::from("<xor>"),
            source,
        },
        XorError::Json(e) => BenchError::Json(e),
        other => BenchError::Config(other.to_string()),
    }
}

pub fn file_stem(id: ActivationId) -> String {
    format!("xor_{}", id.name().to_ascii_lowercase())
}

/// Trains a single neuron, falls back to the grid search, and writes the
/// certificate JSON and boundary CSV for whichever candidate wins.
pub fn run_xor(id: ActivationId, out_dir: &Path, seed: u64) -> Result<XorOutput, BenchError> {
    fs::create_dir_all(out_dir).map_err(BenchError::io(out_dir))?;
    let spec = TrainSpec {
        seed,
        ..TrainSpec::default()
    };
    let trained = train_single_neuron::<f64>(id, &spec).map_err(xor_err)?;
    let (cert, source) = if trained.certificate.is_valid() {
        (trained.certificate, CertificateSource::Trained)
    } else {
        let grid = grid_search_certificate::<f64>(id, GRID_BOUND, GRID_RESOLUTION).map_err(xor_err)?;
        if grid.is_valid() {
            (grid, CertificateSource::Grid)
        } else {
            (grid, CertificateSource::None)
        }
    };
    let record = cert.record(source);

    let stem = file_stem(id);
    let certificate_path = out_dir.join(format!("{stem}.json"));
    let mut w = BufWriter::new(File::create(&certificate_path).map_err(BenchError::io(&certificate_path))?);
    serde_json::to_writer_pretty(&mut w, &record)?;
    writeln!(w).map_err(BenchError::io(&certificate_path))?;

    let boundary_path = out_dir.join(format!("{stem}_boundary.csv"));
    let grid = decision_boundary_grid(&cert.neuron, -BOUNDARY_EXTENT, BOUNDARY_EXTENT, BOUNDARY_POINTS)
        .map_err(xor_err)?;
    let file = File::create(&boundary_path).map_err(BenchError::io(&boundary_path))?;
    grid.write_csv(BufWriter::new(file)).map_err(BenchError::io(&boundary_path))?;

    Ok(XorOutput {
        record,
        certificate_path,
        boundary_path,
    })
}

/// Runs every id; all artifacts are written before a failure is reported.
pub fn cmd_xor(ids: &[ActivationId], out_dir: &Path, seed: u64) -> Result<Vec<XorOutput>, BenchError> {
    let mut outputs = Vec::with_capacity(ids.len());
    let mut failed = Vec::new();
    for &id in ids {
        let out = run_xor(id, out_dir, seed)?;
        eprintln!(
            "{id}: w = [{:.4}, {:.4}], b = {:.4}, correct {}/4 ({:?})",
            out.record.w[0], out.record.w[1], out.record.b, out.record.correct, out.record.source
        );
        if !out.record.valid {
            failed.push(id.name().to_string());
        }
        outputs.push(out);
    }
    if !failed.is_empty() {
        return Err(BenchError::XorFailure { activations: failed });
    }
    Ok(outputs)
}
