//! Numeric core for forecasting post-maintenance deterioration of pavement
//! skid resistance and macrotexture.
//!
//! The crate is `no_std` (it only needs `alloc`) and contains everything that
//! is pure computation: the inspection-record schema and synthetic generator,
//! the sliding-window dataset builder, a small dense tensor kernel with a
//! reverse-mode tape, the sequence-to-one Transformer regressor, the eight
//! baseline regressors, and the evaluation metrics. File formats, the run
//! pipeline and the command-line interface live in the `pavecast` crate.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod baselines;
pub mod metrics;
pub mod optim;
pub mod records;
pub mod seed;
pub mod sequence;
pub mod synthetic;
pub mod tensor;
pub mod transformer;

pub use metrics::{compare, compute_metrics, EvaluationReport, Forecaster, MetricTriple};
pub use records::{InspectionRecord, Provenance, RangeTable, RecordSet, ValidationReport};
pub use sequence::{Scaler, SectionSeries, SplitMode, Task, WindowSample, WindowSpec};
pub use synthetic::{generate_synthetic, SyntheticConfig};
pub use tensor::{Matrix, Tape, TensorError, Var};
pub use transformer::{TransformerConfig, TransformerParams};
