use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::tree::{fit_tree, Tree, TreeConfig};
use super::{BaselineError, DesignMatrix, FitConfig};

/// Squared-error gradient boosting over CART trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedModel {
    pub base: f64,
    pub shrinkage: f64,
    pub trees: Vec<Tree>,
    /// Training MSE after each round.
    pub train_mse: Vec<f64>,
}

impl BoostedModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.trees
            .iter()
            .fold(self.base, |f, t| f + self.shrinkage * t.predict_row(x))
    }
}

pub fn fit_gbt(d: &DesignMatrix, cfg: &FitConfig) -> Result<BoostedModel, BaselineError> {
    if cfg.gbt_rounds == 0 {
        return Err(BaselineError::Param("n_rounds must be at least 1"));
    }
    if !(cfg.gbt_shrinkage > 0.0 && cfg.gbt_shrinkage <= 1.0) {
        return Err(BaselineError::Param("shrinkage must lie in (0, 1]"));
    }
    let tree_cfg = TreeConfig {
        max_depth: cfg.gbt_max_depth,
        min_samples_leaf: cfg.tree.min_samples_leaf,
    };
    let base = d.mean_target();
    let mut fitted: Vec<f64> = alloc::vec![base; d.n()];
    let mut trees = Vec::with_capacity(cfg.gbt_rounds);
    let mut train_mse = Vec::with_capacity(cfg.gbt_rounds);
    for _ in 0..cfg.gbt_rounds {
        let residuals: Vec<f64> = d.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
        let tree = fit_tree(&DesignMatrix { x: d.x.clone(), y: residuals }, &tree_cfg);
        for (r, f) in fitted.iter_mut().enumerate() {
            *f += cfg.gbt_shrinkage * tree.predict_row(d.x.row(r));
        }
        trees.push(tree);
        let mse = d.y.iter().zip(&fitted).map(|(y, f)| (y - f) * (y - f)).sum::<f64>() / d.n() as f64;
        train_mse.push(mse);
    }
    Ok(BoostedModel {
        base,
        shrinkage: cfg.gbt_shrinkage,
        trees,
        train_mse,
    })
}
