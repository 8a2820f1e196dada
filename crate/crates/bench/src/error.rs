use std::path::PathBuf;

use osc_core::data::DataError;
use osc_core::nn::NnError;
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_CONTRADICTION: i32 = 4;
pub const EXIT_XOR_FAILURE: i32 = 5;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Data(DataError),
    #[error("{count} property contradiction(s); see the report")]
    Contradiction { count: usize },
    #[error("no XOR certificate for {}", .activations.join(", "))]
    XorFailure { activations: Vec<String> },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<DataError> for BenchError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::Config(msg) => BenchError::Config(msg),
            other => BenchError::Data(other),
        }
    }
}

impl BenchError {
    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Self {
        let path = path.into();
        move |source| BenchError::Io { path, source }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => EXIT_CONFIG,
            BenchError::Data(_) | BenchError::Parse { .. } => EXIT_DATA,
            BenchError::Contradiction { .. } => EXIT_CONTRADICTION,
            BenchError::XorFailure { .. } => EXIT_XOR_FAILURE,
            BenchError::Nn(NnError::Config(_)) => EXIT_CONFIG,
            BenchError::Nn(_) | BenchError::Io { .. } | BenchError::Json(_) | BenchError::Csv(_) => EXIT_IO,
        }
    }
}
