use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{BaselineError, DesignMatrix};
use crate::tensor::Matrix;

/// Stores the training set; prediction averages the `k` nearest targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub x: Matrix,
    pub y: Vec<f64>,
}

pub fn fit_knn(d: &DesignMatrix, k: usize) -> Result<KnnModel, BaselineError> {
    if k == 0 {
        return Err(BaselineError::Param("k must be at least 1"));
    }
    if k > d.n() {
        return Err(BaselineError::Param("k exceeds the number of training rows"));
    }
    Ok(KnnModel {
        k,
        x: d.x.clone(),
        y: d.y.clone(),
    })
}

impl KnnModel {
    /// Training rows ordered by (squared Euclidean distance, row index).
    pub fn neighbours(&self, query: &[f64]) -> Vec<usize> {
        let mut dist: Vec<(f64, usize)> = (0..self.x.rows())
            .map(|r| {
                let d = self.x.row(r).iter().zip(query).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
                (d, r)
            })
            .collect();
        dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        dist.into_iter().map(|(_, r)| r).collect()
    }

    pub fn predict_row(&self, query: &[f64]) -> f64 {
        let nearest = self.neighbours(query);
        nearest[..self.k].iter().map(|&r| self.y[r]).sum::<f64>() / self.k as f64
    }
}
