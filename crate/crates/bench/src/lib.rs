//! Command implementations behind the `osc` binary.

pub mod bench;
pub mod cli;
pub mod error;
pub mod plots;
pub mod properties;
pub mod xor_demo;

pub use bench::{cmd_bench, BenchConfig, RunRecord, SummaryRow};
pub use error::BenchError;
pub use plots::cmd_emit_plots;
pub use properties::cmd_properties;
pub use xor_demo::cmd_xor;
