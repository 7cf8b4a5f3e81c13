//! Files, run pipeline and command-line interface around `pavecast-core`.
//!
//! Records and windows are CSV, checkpoints and the run manifest are JSON,
//! training logs are JSON lines and run configuration is TOML.

pub mod checkpoint;
pub mod cli;
pub mod config;
pub mod csvio;
pub mod error;
pub mod pipeline;
pub mod report;

pub use checkpoint::Checkpoint;
pub use config::RunConfig;
pub use error::{Error, Result};
pub use pipeline::{run_pipeline, run_training, RunSummary};
