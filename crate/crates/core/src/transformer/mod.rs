//! Sequence-to-one Transformer encoder regressor.
//!
//! A window `X` (`L x d_x`) is embedded as `X Eᵀ + P`, passed through `N`
//! post-norm encoder layers (multi-head self-attention, then a ReLU
//! feed-forward block, each followed by residual addition and layer
//! normalisation), and the final row feeds a one-hidden-layer ReLU head.

mod model;
mod params;
mod train;

pub use model::{
    embed, encoder_layer, forward, forward_traced, mse_loss, positional_encoding, predict, tape_forward,
    ForwardTrace, LayerTrace, TrainedTransformer,
};
pub use params::{LayerParams, ParamSet, TransformerParams};
pub use train::{holdout, run_epochs, train, EarlyStopping, EpochRecord, StopDecision, TrainingLog};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::TensorError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TransformerError {
    #[error("invalid transformer config: {0}")]
    Config(&'static str),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    /// Layer 0 is the embedding, `1..=N` the encoder layers, `N + 1` the head.
    #[error("non-finite value after layer {layer}")]
    NonFinite { layer: usize },
    #[error("training diverged at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("{0} set is empty")]
    EmptyData(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformerConfig {
    pub d_x: usize,
    pub d_model: usize,
    pub heads: usize,
    pub d_k: usize,
    pub layers: usize,
    pub d_ff: usize,
    pub window_length: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl TransformerConfig {
    /// Default architecture and schedule for inputs of width `d_x`.
    pub fn new(d_x: usize, window_length: usize) -> Self {
        TransformerConfig {
            d_x,
            d_model: 32,
            heads: 4,
            d_k: 8,
            layers: 2,
            d_ff: 64,
            window_length,
            learning_rate: 1e-3,
            max_epochs: 500,
            patience: 25,
            batch_size: 16,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), TransformerError> {
        if self.d_x == 0
            || self.d_model == 0
            || self.heads == 0
            || self.d_k == 0
            || self.d_ff == 0
            || self.window_length == 0
        {
            return Err(TransformerError::Config("dimensions must be at least 1"));
        }
        if self.heads * self.d_k != self.d_model {
            return Err(TransformerError::Config("heads * d_k must equal d_model"));
        }
        if self.patience == 0 {
            return Err(TransformerError::Config("patience must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(TransformerError::Config("batch_size must be at least 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(TransformerError::Config("learning_rate must be positive"));
        }
        Ok(())
    }

    /// Hidden width of the regression head.
    pub fn d_head(&self) -> usize {
        self.d_model
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(TransformerConfig::new(11, 4).validate().is_ok());
        let mut c = TransformerConfig::new(11, 4);
        c.d_k = 7;
        assert_eq!(c.validate(), Err(TransformerError::Config("heads * d_k must equal d_model")));
        let mut c = TransformerConfig::new(11, 4);
        c.patience = 0;
        assert!(c.validate().is_err());
        let mut c = TransformerConfig::new(11, 4);
        c.layers = 0;
        assert!(c.validate().is_ok());
    }
}
