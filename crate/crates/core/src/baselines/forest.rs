use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::tree::{grow, Tree};
use super::{BaselineError, DesignMatrix, FitConfig};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

impl Forest {
    /// Per-tree predictions, in tree order.
    pub fn tree_predictions(&self, x: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|t| t.predict_row(x)).collect()
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.tree_predictions(x).iter().sum::<f64>() / self.trees.len() as f64
    }
}

/// Bootstrap-aggregated CART. Tree `t` draws from the stream
/// `forest/tree/<t>`; each split considers `ceil(feature_fraction * p)`
/// features sampled without replacement.
pub fn fit_forest(d: &DesignMatrix, cfg: &FitConfig) -> Result<Forest, BaselineError> {
    if cfg.forest_trees == 0 {
        return Err(BaselineError::Param("n_trees must be at least 1"));
    }
    if !(cfg.forest_feature_fraction > 0.0 && cfg.forest_feature_fraction <= 1.0) {
        return Err(BaselineError::Param("feature_fraction must lie in (0, 1]"));
    }
    let (n, p) = (d.n(), d.p());
    let per_split = (libm::ceil(cfg.forest_feature_fraction * p as f64) as usize).clamp(1, p);
    let trees = (0..cfg.forest_trees)
        .map(|t| {
            let mut rng = seed::stream(cfg.seed, &alloc::format!("forest/tree/{t}"));
            let rows: Vec<usize> = if cfg.forest_bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut features = |p: usize| -> Vec<usize> {
                if per_split >= p {
                    return (0..p).collect();
                }
                let mut chosen = sample(&mut rng, p, per_split).into_vec();
                chosen.sort_unstable();
                chosen
            };
            grow(&d.x, &d.y, rows, &cfg.tree, &mut features)
        })
        .collect();
    Ok(Forest { trees })
}
