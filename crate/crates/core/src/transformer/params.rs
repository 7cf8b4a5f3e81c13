use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::TransformerConfig;
use crate::optim::glorot_uniform;
use crate::tensor::Matrix;

/// Weights of one encoder layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerParams<T> {
    /// Per head, `d_model x d_k`.
    pub w_q: Vec<T>,
    pub w_k: Vec<T>,
    pub w_v: Vec<T>,
    /// `H*d_k x d_model`.
    pub w_o: T,
    pub ln1_gain: T,
    pub ln1_bias: T,
    /// `d_model x d_ff`.
    pub ff_w1: T,
    pub ff_b1: T,
    /// `d_ff x d_model`.
    pub ff_w2: T,
    pub ff_b2: T,
    pub ln2_gain: T,
    pub ln2_bias: T,
}

/// Every learned tensor of the model. `T` is `Matrix` for stored weights and
/// [`Var`](crate::tensor::Var) while recording on a tape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSet<T> {
    /// `d_model x d_x`.
    pub embedding: T,
    pub layers: Vec<LayerParams<T>>,
    /// `d_model x d_head`.
    pub head_w1: T,
    pub head_b1: T,
    /// `d_head x 1`.
    pub head_w2: T,
    /// `1 x 1`.
    pub head_b2: T,
}

pub type TransformerParams = ParamSet<Matrix>;

impl<T> LayerParams<T> {
    pub fn map<U>(&self, f: &mut impl FnMut(&T) -> U) -> LayerParams<U> {
        LayerParams {
            w_q: self.w_q.iter().map(&mut *f).collect(),
            w_k: self.w_k.iter().map(&mut *f).collect(),
            w_v: self.w_v.iter().map(&mut *f).collect(),
            w_o: f(&self.w_o),
            ln1_gain: f(&self.ln1_gain),
            ln1_bias: f(&self.ln1_bias),
            ff_w1: f(&self.ff_w1),
            ff_b1: f(&self.ff_b1),
            ff_w2: f(&self.ff_w2),
            ff_b2: f(&self.ff_b2),
            ln2_gain: f(&self.ln2_gain),
            ln2_bias: f(&self.ln2_bias),
        }
    }

    fn refs<'a>(&'a self, out: &mut Vec<&'a T>) {
        out.extend(self.w_q.iter());
        out.extend(self.w_k.iter());
        out.extend(self.w_v.iter());
        out.extend([
            &self.w_o,
            &self.ln1_gain,
            &self.ln1_bias,
            &self.ff_w1,
            &self.ff_b1,
            &self.ff_w2,
            &self.ff_b2,
            &self.ln2_gain,
            &self.ln2_bias,
        ]);
    }

    fn refs_mut<'a>(&'a mut self, out: &mut Vec<&'a mut T>) {
        out.extend(self.w_q.iter_mut());
        out.extend(self.w_k.iter_mut());
        out.extend(self.w_v.iter_mut());
        out.extend([
            &mut self.w_o,
            &mut self.ln1_gain,
            &mut self.ln1_bias,
            &mut self.ff_w1,
            &mut self.ff_b1,
            &mut self.ff_w2,
            &mut self.ff_b2,
            &mut self.ln2_gain,
            &mut self.ln2_bias,
        ]);
    }
}

impl<T> ParamSet<T> {
    pub fn map<U>(&self, mut f: impl FnMut(&T) -> U) -> ParamSet<U> {
        ParamSet {
            embedding: f(&self.embedding),
            layers: self.layers.iter().map(|l| l.map(&mut f)).collect(),
            head_w1: f(&self.head_w1),
            head_b1: f(&self.head_b1),
            head_w2: f(&self.head_w2),
            head_b2: f(&self.head_b2),
        }
    }

    /// All tensors in canonical order: embedding, each layer (queries, keys,
    /// values per head, then output projection, first norm, feed-forward,
    /// second norm), head.
    pub fn tensors(&self) -> Vec<&T> {
        let mut out = alloc::vec![&self.embedding];
        for l in &self.layers {
            l.refs(&mut out);
        }
        out.extend([&self.head_w1, &self.head_b1, &self.head_w2, &self.head_b2]);
        out
    }

    /// Same structure, filled from `values` in canonical order.
    pub fn with_values<U: Clone>(&self, values: &[U]) -> Option<ParamSet<U>> {
        if values.len() != self.tensors().len() {
            return None;
        }
        let mut it = values.iter();
        Some(self.map(|_| it.next().cloned().expect("length checked")))
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut T> {
        let mut out = alloc::vec![&mut self.embedding];
        for l in &mut self.layers {
            l.refs_mut(&mut out);
        }
        out.extend([&mut self.head_w1, &mut self.head_b1, &mut self.head_w2, &mut self.head_b2]);
        out
    }
}

impl ParamSet<Matrix> {
    /// Glorot-uniform weights, zero biases, unit layer-norm gains and an
    /// output bias of `output_bias`.
    pub fn init<R: Rng>(config: &TransformerConfig, rng: &mut R, output_bias: f64) -> Self {
        let d = config.d_model;
        let layers = (0..config.layers)
            .map(|_| {
                let mut per_head = || -> Vec<Matrix> {
                    (0..config.heads).map(|_| glorot_uniform(rng, d, config.d_k)).collect()
                };
                let w_q = per_head();
                let w_k = per_head();
                let w_v = per_head();
                LayerParams {
                    w_q,
                    w_k,
                    w_v,
                    w_o: glorot_uniform(rng, config.heads * config.d_k, d),
                    ln1_gain: Matrix::filled(1, d, 1.0),
                    ln1_bias: Matrix::zeros(1, d),
                    ff_w1: glorot_uniform(rng, d, config.d_ff),
                    ff_b1: Matrix::zeros(1, config.d_ff),
                    ff_w2: glorot_uniform(rng, config.d_ff, d),
                    ff_b2: Matrix::zeros(1, d),
                    ln2_gain: Matrix::filled(1, d, 1.0),
                    ln2_bias: Matrix::zeros(1, d),
                }
            })
            .collect();
        let embedding = glorot_uniform(rng, d, config.d_x);
        ParamSet {
            embedding,
            layers,
            head_w1: glorot_uniform(rng, d, config.d_head()),
            head_b1: Matrix::zeros(1, config.d_head()),
            head_w2: glorot_uniform(rng, config.d_head(), 1),
            head_b2: Matrix::filled(1, 1, output_bias),
        }
    }

    /// Every weight set to `weight`, biases 0, layer-norm gains 1.
    pub fn constant(config: &TransformerConfig, weight: f64) -> Self {
        let d = config.d_model;
        let w = |r, c| Matrix::filled(r, c, weight);
        ParamSet {
            embedding: w(d, config.d_x),
            layers: (0..config.layers)
                .map(|_| LayerParams {
                    w_q: (0..config.heads).map(|_| w(d, config.d_k)).collect(),
                    w_k: (0..config.heads).map(|_| w(d, config.d_k)).collect(),
                    w_v: (0..config.heads).map(|_| w(d, config.d_k)).collect(),
                    w_o: w(config.heads * config.d_k, d),
                    ln1_gain: Matrix::filled(1, d, 1.0),
                    ln1_bias: Matrix::zeros(1, d),
                    ff_w1: w(d, config.d_ff),
                    ff_b1: Matrix::zeros(1, config.d_ff),
                    ff_w2: w(config.d_ff, d),
                    ff_b2: Matrix::zeros(1, d),
                    ln2_gain: Matrix::filled(1, d, 1.0),
                    ln2_bias: Matrix::zeros(1, d),
                })
                .collect(),
            head_w1: w(d, config.d_head()),
            head_b1: Matrix::zeros(1, config.d_head()),
            head_w2: w(config.d_head(), 1),
            head_b2: Matrix::zeros(1, 1),
        }
    }

    /// Checks every tensor shape against `config`.
    pub fn matches(&self, config: &TransformerConfig) -> bool {
        let expected = ParamSet::constant(config, 0.0);
        self.layers.len() == expected.layers.len()
            && self.tensors().len() == expected.tensors().len()
            && self.layers.iter().all(|l| l.w_q.len() == config.heads)
            && self
                .tensors()
                .iter()
                .zip(expected.tensors())
                .all(|(a, b)| a.shape() == b.shape())
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|m| m.is_finite())
    }

    pub fn count(&self) -> usize {
        self.tensors().iter().map(|m| m.data().len()).sum()
    }
}
