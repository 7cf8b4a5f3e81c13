use std::io;
use std::path::PathBuf;

use pavecast_core::baselines::BaselineError;
use pavecast_core::metrics::MetricsError;
use pavecast_core::sequence::SequenceError;
use pavecast_core::synthetic::SyntheticError;
use pavecast_core::transformer::TransformerError;
use pavecast_core::{TensorError, ValidationReport};
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: missing column `{column}`", path.display())]
    MissingColumn { path: PathBuf, column: String },
    #[error("{}: line {line}: column `{column}`: cannot parse `{value}`", path.display())]
    Cell {
        path: PathBuf,
        line: u64,
        column: String,
        value: String,
    },
    #[error("{}: line {line}: {message}", path.display())]
    Row { path: PathBuf, line: u64, message: String },
    #[error("{}: duplicate (section_id, month) = ({section_id}, {month}) on lines {first_line} and {line}", path.display())]
    Duplicate {
        path: PathBuf,
        section_id: String,
        month: u32,
        first_line: u64,
        line: u64,
    },
    #[error("validation failed with {} violation(s):\n{report}", report.len())]
    Validation { report: ValidationReport },
    #[error("configuration: {0}")]
    Config(String),
    #[error("incompatible input: {0}")]
    Compatibility(String),
    #[error(transparent)]
    Sequence(#[from] SequenceError),
    #[error(transparent)]
    Synthetic(#[from] SyntheticError),
    #[error("transformer: {0}")]
    Transformer(#[from] TransformerError),
    #[error("{kind}: {source}")]
    Baseline { kind: String, source: BaselineError },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("{0}")]
    Format(String),
    #[error("{stage}: {source}")]
    Stage { stage: String, source: Box<Error> },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn at_stage(self, stage: impl Into<String>) -> Self {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// Process exit status: 1 validation failure, 2 configuration error,
    /// 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::MissingColumn { .. }
            | Error::Cell { .. }
            | Error::Row { .. }
            | Error::Duplicate { .. }
            | Error::Validation { .. } => 1,
            Error::Io { .. } | Error::Config(_) | Error::Compatibility(_) | Error::Format(_) => 2,
            Error::Synthetic(_) => 2,
            Error::Sequence(e) => match e {
                SequenceError::ZeroLength | SequenceError::BadRatio(_) => 2,
                _ => 1,
            },
            Error::Transformer(e) => match e {
                TransformerError::Config(_) => 2,
                TransformerError::EmptyData(_) => 1,
                _ => 3,
            },
            Error::Baseline { source, .. } => match source {
                BaselineError::Param(_) => 2,
                BaselineError::Design(_) => 1,
                _ => 3,
            },
            Error::Metrics(e) => match e {
                MetricsError::Empty | MetricsError::Length { .. } => 1,
                _ => 3,
            },
            Error::Tensor(_) => 3,
            Error::Stage { source, .. } => source.exit_code(),
        }
    }
}
