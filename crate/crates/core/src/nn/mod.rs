//! Small CPU convolutional network engine.

mod checkpoint;
mod model;
pub mod ops;
mod optim;
mod train;

use thiserror::Error;

use crate::tensor::TensorError;

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC};
pub use model::{
    architecture, build_model, build_model_for, LayerSpec, Network, NetworkConfig, CHANNELS,
    CLASSES, DROPOUT_RATE, INPUT_SHAPE, PENULTIMATE_UNITS,
};
pub use ops::Mode;
pub use optim::{adam_step, sgd_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use train::{evaluate_loss, evaluate_top1, train_epoch, DEFAULT_BATCH, DEFAULT_LR};

#[derive(Debug, Error)]
pub enum NnError {
    #[error(transparent)]
    Shape(#[from] TensorError),
    #[error("{op} expects a rank-{expected} tensor, got shape {actual:?}")]
    Rank {
        op: &'static str,
        expected: usize,
        actual: Vec<usize>,
    },
    #[error("max pool needs even spatial dims, got {height}x{width}")]
    OddPool { height: usize, width: usize },
    #[error("label {label} at position {index} is outside [0, {classes})")]
    Label {
        index: usize,
        label: usize,
        classes: usize,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("non-finite loss at batch {batch}")]
    Divergence { batch: usize },
    #[error("bad checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
