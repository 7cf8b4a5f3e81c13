//! Regression metrics and model comparison.

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sequence::{Task, WindowSample};
use crate::tensor::{Matrix, TensorError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("length mismatch: {targets} targets vs {predictions} predictions")]
    Length { targets: usize, predictions: usize },
    #[error("metrics need at least one value")]
    Empty,
    #[error("r2 undefined for constant targets (rmse {rmse}, mae {mae})")]
    R2Undefined { rmse: f64, mae: f64 },
    #[error("model `{model}` failed to predict: {source}")]
    Predict { model: String, source: TensorError },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTriple {
    pub r2: f64,
    pub rmse: f64,
    pub mae: f64,
}

/// R² (against the mean of `y`), RMSE and MAE.
pub fn compute_metrics(y: &[f64], y_hat: &[f64]) -> Result<MetricTriple, MetricsError> {
    if y.len() != y_hat.len() {
        return Err(MetricsError::Length {
            targets: y.len(),
            predictions: y_hat.len(),
        });
    }
    if y.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let mut abs = 0.0;
    for (a, b) in y.iter().zip(y_hat) {
        let e = a - b;
        ss_res += e * e;
        abs += e.abs();
        ss_tot += (a - mean) * (a - mean);
    }
    let rmse = libm::sqrt(ss_res / n);
    let mae = abs / n;
    if ss_tot == 0.0 {
        return Err(MetricsError::R2Undefined { rmse, mae });
    }
    Ok(MetricTriple {
        r2: 1.0 - ss_res / ss_tot,
        rmse,
        mae,
    })
}

/// Anything that maps windows to scalar forecasts.
pub trait Forecaster {
    fn name(&self) -> &str;
    fn predict(&self, windows: &[Matrix]) -> Result<Vec<f64>, TensorError>;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub model: String,
    pub metrics: MetricTriple,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub target: Task,
    /// Rows in descending r2 order; ties keep input order.
    pub rows: Vec<ReportRow>,
    pub split: String,
    pub seed: u64,
}

impl EvaluationReport {
    /// Builds a report from unsorted rows.
    pub fn new(target: Task, mut rows: Vec<ReportRow>, split: String, seed: u64) -> Self {
        rows.sort_by(|a, b| b.metrics.r2.total_cmp(&a.metrics.r2));
        EvaluationReport {
            target,
            rows,
            split,
            seed,
        }
    }

    pub fn row(&self, model: &str) -> Option<&MetricTriple> {
        self.rows.iter().find(|r| r.model == model).map(|r| &r.metrics)
    }
}

/// Scores every model on `test` and ranks them.
pub fn compare(
    models: &[&dyn Forecaster],
    test: &[WindowSample],
    target: Task,
    split: &str,
    seed: u64,
) -> Result<EvaluationReport, MetricsError> {
    if test.is_empty() {
        return Err(MetricsError::Empty);
    }
    let windows: Vec<Matrix> = test.iter().map(|s| s.window.clone()).collect();
    let y: Vec<f64> = test.iter().map(|s| s.target).collect();
    let mut rows = Vec::with_capacity(models.len());
    for m in models {
        let y_hat = m.predict(&windows).map_err(|source| MetricsError::Predict {
            model: m.name().into(),
            source,
        })?;
        rows.push(ReportRow {
            model: m.name().into(),
            metrics: compute_metrics(&y, &y_hat)?,
        });
    }
    Ok(EvaluationReport::new(target, rows, split.into(), seed))
}
