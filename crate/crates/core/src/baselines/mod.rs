//! The eight comparison regressors. All consume flattened windows.

mod forest;
mod gbt;
mod knn;
mod linear;
mod mlp;
mod tree;

pub use forest::{fit_forest, Forest};
pub use gbt::{fit_gbt, BoostedModel};
pub use knn::{fit_knn, KnnModel};
pub use linear::{fit_linear, LinearKind, LinearModel};
pub use mlp::{fit_mlp, mlp_loss_on_tape, MlpModel};
pub use tree::{fit_tree, Tree, TreeConfig, TreeNode};

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::Forecaster;
use crate::sequence::{flatten, WindowSample};
use crate::tensor::{Matrix, TensorError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BaselineError {
    #[error("singular normal equations; the design is rank-deficient, use ridge with lambda > 0")]
    Singular,
    #[error("invalid parameter: {0}")]
    Param(&'static str),
    #[error("design matrix: {0}")]
    Design(&'static str),
    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Flattened, scaled windows and their targets.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub x: Matrix,
    pub y: Vec<f64>,
}

impl DesignMatrix {
    pub fn new(x: Matrix, y: Vec<f64>) -> Result<Self, BaselineError> {
        if x.rows() != y.len() {
            return Err(BaselineError::Design("one target per row required"));
        }
        if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(BaselineError::Design("non-finite entry"));
        }
        Ok(DesignMatrix { x, y })
    }

    pub fn from_samples(samples: &[WindowSample]) -> Result<Self, BaselineError> {
        let (x, y) = crate::sequence::design_rows(samples).ok_or(BaselineError::Design("no samples"))?;
        DesignMatrix::new(x, y)
    }

    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn p(&self) -> usize {
        self.x.cols()
    }

    /// Keeps only `columns`, in the given order.
    pub fn select(&self, columns: &[usize]) -> DesignMatrix {
        DesignMatrix {
            x: select_matrix_columns(&self.x, columns),
            y: self.y.clone(),
        }
    }

    pub fn mean_target(&self) -> f64 {
        self.y.iter().sum::<f64>() / self.y.len() as f64
    }
}

pub(crate) fn select_matrix_columns(x: &Matrix, columns: &[usize]) -> Matrix {
    let mut data = Vec::with_capacity(x.rows() * columns.len());
    for r in 0..x.rows() {
        let row = x.row(r);
        data.extend(columns.iter().map(|&c| row[c]));
    }
    debug_assert!(!columns.is_empty());
    Matrix::from_parts(x.rows(), columns.len(), data)
}

const DEPENDENCE_TOL: f64 = 1e-8;

/// Greedy maximal set of columns whose centred versions are linearly
/// independent: constant columns and columns that are affine combinations of
/// earlier kept columns are dropped. A column is dependent when its
/// component orthogonal to the kept ones has norm below `1e-8` of its own.
pub fn informative_columns(x: &Matrix) -> Vec<usize> {
    let n = x.rows();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut kept = Vec::new();
    for c in 0..x.cols() {
        let mut col = x.column(c);
        if col.iter().all(|&v| v == col[0]) {
            continue;
        }
        let scale = col.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let mean = col.iter().sum::<f64>() / n as f64;
        col.iter_mut().for_each(|v| *v -= mean);
        let norm = libm::sqrt(col.iter().map(|v| v * v).sum::<f64>());
        if norm <= 1e-12 * scale * libm::sqrt(n as f64) {
            continue;
        }
        for _ in 0..2 {
            for q in &basis {
                let proj: f64 = q.iter().zip(&col).map(|(a, b)| a * b).sum();
                col.iter_mut().zip(q).for_each(|(v, qv)| *v -= proj * qv);
            }
        }
        let rest = libm::sqrt(col.iter().map(|v| v * v).sum::<f64>());
        if rest <= DEPENDENCE_TOL * norm {
            continue;
        }
        col.iter_mut().for_each(|v| *v /= rest);
        basis.push(col);
        kept.push(c);
    }
    kept
}

/// Model identifiers used on the command line and in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Transformer,
    Linear,
    Ridge,
    Lasso,
    Knn,
    Tree,
    Forest,
    Gbt,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 9] = [
        ModelKind::Transformer,
        ModelKind::Linear,
        ModelKind::Ridge,
        ModelKind::Lasso,
        ModelKind::Knn,
        ModelKind::Tree,
        ModelKind::Forest,
        ModelKind::Gbt,
        ModelKind::Mlp,
    ];

    pub fn key(self) -> &'static str {
        match self {
            ModelKind::Transformer => "transformer",
            ModelKind::Linear => "linear",
            ModelKind::Ridge => "ridge",
            ModelKind::Lasso => "lasso",
            ModelKind::Knn => "knn",
            ModelKind::Tree => "tree",
            ModelKind::Forest => "forest",
            ModelKind::Gbt => "gbt",
            ModelKind::Mlp => "mlp",
        }
    }

    /// Row label in comparison reports.
    pub fn display_name(self) -> &'static str {
        match self {
            ModelKind::Transformer => "Transformer",
            ModelKind::Linear => "Linear Regression",
            ModelKind::Ridge => "Ridge Regression",
            ModelKind::Lasso => "Lasso Regression",
            ModelKind::Knn => "k-Nearest Neighbors",
            ModelKind::Tree => "Decision Tree",
            ModelKind::Forest => "Random Forest",
            ModelKind::Gbt => "Gradient Boosted Trees",
            ModelKind::Mlp => "MLP Regressor",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let alias = match s {
            "ols" => "linear",
            "xgboost" | "boosting" => "gbt",
            "random_forest" | "rf" => "forest",
            "decision_tree" => "tree",
            other => other,
        };
        ModelKind::ALL
            .into_iter()
            .find(|k| k.key() == alias)
            .ok_or_else(|| alloc::format!("unknown model `{s}`"))
    }
}

/// Hyperparameters for every baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub ridge_lambda: f64,
    pub lasso_lambda: f64,
    pub knn_k: usize,
    pub tree: TreeConfig,
    pub forest_trees: usize,
    pub forest_feature_fraction: f64,
    pub forest_bootstrap: bool,
    pub gbt_rounds: usize,
    pub gbt_shrinkage: f64,
    pub gbt_max_depth: usize,
    pub mlp_hidden: usize,
    pub mlp_learning_rate: f64,
    pub mlp_epochs: usize,
    pub mlp_batch_size: usize,
    pub seed: u64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            ridge_lambda: 1.0,
            lasso_lambda: 1.0,
            knn_k: 5,
            tree: TreeConfig::default(),
            forest_trees: 200,
            forest_feature_fraction: 1.0 / 3.0,
            forest_bootstrap: true,
            gbt_rounds: 200,
            gbt_shrinkage: 0.1,
            gbt_max_depth: 3,
            mlp_hidden: 64,
            mlp_learning_rate: 1e-3,
            mlp_epochs: 500,
            mlp_batch_size: 16,
            seed: 0,
        }
    }
}

impl FitConfig {
    pub fn validate(&self) -> Result<(), BaselineError> {
        if !(self.ridge_lambda >= 0.0) || !(self.lasso_lambda >= 0.0) {
            return Err(BaselineError::Param("lambda must be non-negative"));
        }
        if self.knn_k == 0 {
            return Err(BaselineError::Param("k must be at least 1"));
        }
        if self.tree.min_samples_leaf == 0 {
            return Err(BaselineError::Param("min_samples_leaf must be at least 1"));
        }
        if self.forest_trees == 0 {
            return Err(BaselineError::Param("n_trees must be at least 1"));
        }
        if !(self.forest_feature_fraction > 0.0 && self.forest_feature_fraction <= 1.0) {
            return Err(BaselineError::Param("feature_fraction must lie in (0, 1]"));
        }
        if self.gbt_rounds == 0 {
            return Err(BaselineError::Param("n_rounds must be at least 1"));
        }
        if !(self.gbt_shrinkage > 0.0 && self.gbt_shrinkage <= 1.0) {
            return Err(BaselineError::Param("shrinkage must lie in (0, 1]"));
        }
        if self.mlp_hidden == 0 || self.mlp_batch_size == 0 {
            return Err(BaselineError::Param("mlp hidden width and batch size must be at least 1"));
        }
        if !(self.mlp_learning_rate > 0.0) {
            return Err(BaselineError::Param("mlp learning rate must be positive"));
        }
        Ok(())
    }
}

/// Any fitted baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BaselineModel {
    Linear(LinearModel),
    Knn(KnnModel),
    Tree(Tree),
    Forest(Forest),
    Boosted(BoostedModel),
    Mlp(MlpModel),
}

impl BaselineModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        match self {
            BaselineModel::Linear(m) => m.predict_row(x),
            BaselineModel::Knn(m) => m.predict_row(x),
            BaselineModel::Tree(m) => m.predict_row(x),
            BaselineModel::Forest(m) => m.predict_row(x),
            BaselineModel::Boosted(m) => m.predict_row(x),
            BaselineModel::Mlp(m) => m.predict_row(x),
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<f64> {
        (0..x.rows()).map(|r| self.predict_row(x.row(r))).collect()
    }
}

/// Fits the baseline `kind` on `design` (columns as given).
pub fn fit(kind: ModelKind, design: &DesignMatrix, cfg: &FitConfig) -> Result<BaselineModel, BaselineError> {
    cfg.validate()?;
    Ok(match kind {
        ModelKind::Linear => BaselineModel::Linear(fit_linear(LinearKind::Ols, design, 0.0)?),
        ModelKind::Ridge => BaselineModel::Linear(fit_linear(LinearKind::Ridge, design, cfg.ridge_lambda)?),
        ModelKind::Lasso => BaselineModel::Linear(fit_linear(LinearKind::Lasso, design, cfg.lasso_lambda)?),
        ModelKind::Knn => BaselineModel::Knn(fit_knn(design, cfg.knn_k)?),
        ModelKind::Tree => BaselineModel::Tree(fit_tree(design, &cfg.tree)),
        ModelKind::Forest => BaselineModel::Forest(fit_forest(design, cfg)?),
        ModelKind::Gbt => BaselineModel::Boosted(fit_gbt(design, cfg)?),
        ModelKind::Mlp => BaselineModel::Mlp(fit_mlp(design, cfg)?),
        ModelKind::Transformer => return Err(BaselineError::Param("the transformer is not a baseline")),
    })
}

/// A baseline plus the window columns it was trained on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedBaseline {
    pub kind: ModelKind,
    /// Indices into the flattened window.
    pub columns: Vec<usize>,
    pub model: BaselineModel,
}

impl FittedBaseline {
    /// Fits on the full flattened window. The linear family first drops
    /// columns that are constant or affinely dependent on the training
    /// design, since its normal equations are singular otherwise.
    pub fn fit(kind: ModelKind, train: &DesignMatrix, cfg: &FitConfig) -> Result<Self, BaselineError> {
        let columns = match kind {
            ModelKind::Linear | ModelKind::Ridge | ModelKind::Lasso => informative_columns(&train.x),
            _ => (0..train.p()).collect(),
        };
        if columns.is_empty() {
            return Err(BaselineError::Design("every feature column is constant"));
        }
        let model = fit(kind, &train.select(&columns), cfg)?;
        Ok(FittedBaseline { kind, columns, model })
    }

    pub fn predict_flat(&self, x: &Matrix) -> Vec<f64> {
        self.model.predict(&select_matrix_columns(x, &self.columns))
    }
}

impl Forecaster for FittedBaseline {
    fn name(&self) -> &str {
        self.kind.display_name()
    }

    fn predict(&self, windows: &[Matrix]) -> Result<Vec<f64>, TensorError> {
        let Some(first) = windows.first() else {
            return Ok(Vec::new());
        };
        let p = first.data().len();
        if self.columns.iter().any(|&c| c >= p) {
            return Err(TensorError::Invalid("window narrower than the fitted feature set"));
        }
        let mut out = Vec::with_capacity(windows.len());
        for w in windows {
            if w.data().len() != p {
                return Err(TensorError::shape("window", first, w));
            }
            let row = flatten(w);
            let x: Vec<f64> = self.columns.iter().map(|&c| row[c]).collect();
            out.push(self.model.predict_row(&x));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn informative_columns_drop_constant_and_dependent() {
        let x = Matrix::from_rows(&[
            alloc::vec![1.0, 5.0, 3.0, 2.0, 1.0],
            alloc::vec![2.0, 5.0, 5.0, 2.5, 0.0],
            alloc::vec![3.0, 5.0, 7.0, 2.0, 4.0],
            alloc::vec![4.0, 5.0, 9.0, 1.0, 2.0],
        ])
        .unwrap();
        assert_eq!(informative_columns(&x), alloc::vec![0, 3, 4]);
    }

    #[test]
    fn model_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.key().parse::<ModelKind>().unwrap(), k);
        }
        assert_eq!("xgboost".parse::<ModelKind>().unwrap(), ModelKind::Gbt);
        assert!("svm".parse::<ModelKind>().is_err());
    }
}
