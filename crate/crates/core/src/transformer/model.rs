use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::params::{LayerParams, ParamSet, TransformerParams};
use super::{TransformerConfig, TransformerError};
use crate::metrics::Forecaster;
use crate::tensor::{Matrix, Tape, TensorError, Var, LAYER_NORM_EPS};

/// Sinusoidal table: row `t`, column `2k` holds `sin(t / 10000^(2k/d))`,
/// column `2k+1` the matching cosine.
pub fn positional_encoding(length: usize, d_model: usize) -> Matrix {
    let mut p = Matrix::zeros(length.max(1), d_model.max(1));
    for t in 0..length {
        for k in 0..d_model.div_ceil(2) {
            let angle = t as f64 / libm::pow(10000.0, (2 * k) as f64 / d_model as f64);
            p[(t, 2 * k)] = libm::sin(angle);
            if 2 * k + 1 < d_model {
                p[(t, 2 * k + 1)] = libm::cos(angle);
            }
        }
    }
    p
}

fn tiled(p: &Matrix, copies: usize) -> Matrix {
    let parts: Vec<&Matrix> = (0..copies).map(|_| p).collect();
    Matrix::vstack(&parts).expect("equal widths")
}

fn check(tape: &Tape, v: Var, layer: usize) -> Result<(), TransformerError> {
    if tape.value(v).is_finite() {
        Ok(())
    } else {
        Err(TransformerError::NonFinite { layer })
    }
}

fn embed_on_tape(tape: &mut Tape, x: Var, embedding: Var, pos: Var) -> Result<Var, TensorError> {
    let et = tape.transpose(embedding);
    let projected = tape.matmul(x, et)?;
    tape.add(projected, pos)
}

struct LayerVars {
    attention: Vec<Var>,
    output: Var,
}

fn layer_on_tape(
    tape: &mut Tape,
    h: Var,
    p: &LayerParams<Var>,
    config: &TransformerConfig,
) -> Result<LayerVars, TensorError> {
    let block = config.window_length;
    let scale = 1.0 / libm::sqrt(config.d_k as f64);
    let mut heads = Vec::with_capacity(config.heads);
    let mut attention = Vec::with_capacity(config.heads);
    for i in 0..config.heads {
        let q = tape.matmul(h, p.w_q[i])?;
        let k = tape.matmul(h, p.w_k[i])?;
        let v = tape.matmul(h, p.w_v[i])?;
        let scores = tape.attention_scores(q, k, block, scale)?;
        let a = tape.softmax_rows(scores);
        attention.push(a);
        heads.push(tape.attention_mix(a, v, block)?);
    }
    let concat = tape.concat_cols(&heads)?;
    let mha = tape.matmul(concat, p.w_o)?;
    let res1 = tape.add(h, mha)?;
    let h1 = tape.layer_norm_rows(res1, p.ln1_gain, p.ln1_bias, LAYER_NORM_EPS)?;
    let f1 = tape.matmul(h1, p.ff_w1)?;
    let f1 = tape.add_row(f1, p.ff_b1)?;
    let f1 = tape.relu(f1);
    let f2 = tape.matmul(f1, p.ff_w2)?;
    let f2 = tape.add_row(f2, p.ff_b2)?;
    let res2 = tape.add(h1, f2)?;
    let output = tape.layer_norm_rows(res2, p.ln2_gain, p.ln2_bias, LAYER_NORM_EPS)?;
    Ok(LayerVars { attention, output })
}

fn head_on_tape(tape: &mut Tape, last: Var, p: &ParamSet<Var>) -> Result<Var, TensorError> {
    let z = tape.matmul(last, p.head_w1)?;
    let z = tape.add_row(z, p.head_b1)?;
    let z = tape.relu(z);
    let y = tape.matmul(z, p.head_w2)?;
    tape.add_row(y, p.head_b2)
}

struct Graph {
    embedded: Var,
    layers: Vec<LayerVars>,
    output: Var,
}

fn stack_windows(windows: &[&Matrix], config: &TransformerConfig) -> Result<Matrix, TransformerError> {
    for w in windows {
        if w.shape() != (config.window_length, config.d_x) {
            return Err(TensorError::Shape {
                op: "window",
                left_rows: config.window_length,
                left_cols: config.d_x,
                right_rows: w.rows(),
                right_cols: w.cols(),
            }
            .into());
        }
    }
    Ok(Matrix::vstack(windows)?)
}

fn build(
    tape: &mut Tape,
    p: &ParamSet<Var>,
    windows: &[&Matrix],
    config: &TransformerConfig,
) -> Result<Graph, TransformerError> {
    let x = stack_windows(windows, config)?;
    let batch = windows.len();
    let x = tape.leaf(x);
    let pos = tape.leaf(tiled(&positional_encoding(config.window_length, config.d_model), batch));
    let embedded = embed_on_tape(tape, x, p.embedding, pos)?;
    check(tape, embedded, 0)?;
    let mut h = embedded;
    let mut layers = Vec::with_capacity(config.layers);
    for (l, lp) in p.layers.iter().enumerate() {
        let vars = layer_on_tape(tape, h, lp, config)?;
        check(tape, vars.output, l + 1)?;
        h = vars.output;
        layers.push(vars);
    }
    let last_rows: Vec<usize> = (0..batch).map(|b| (b + 1) * config.window_length - 1).collect();
    let last = tape.select_rows(h, &last_rows)?;
    let output = head_on_tape(tape, last, p)?;
    check(tape, output, config.layers + 1)?;
    Ok(Graph {
        embedded,
        layers,
        output,
    })
}

/// Records the batched forward pass of `windows` and returns the `B x 1`
/// prediction column.
pub fn tape_forward(
    tape: &mut Tape,
    params: &ParamSet<Var>,
    windows: &[&Matrix],
    config: &TransformerConfig,
) -> Result<Var, TransformerError> {
    if windows.is_empty() {
        return Err(TransformerError::EmptyData("window"));
    }
    Ok(build(tape, params, windows, config)?.output)
}

fn check_params(params: &TransformerParams, config: &TransformerConfig) -> Result<(), TransformerError> {
    config.validate()?;
    if !params.matches(config) {
        return Err(TransformerError::Config("parameter shapes do not match the config"));
    }
    Ok(())
}

/// `X Eᵀ + P` for one window.
pub fn embed(window: &Matrix, params: &TransformerParams, table: &Matrix) -> Result<Matrix, TransformerError> {
    let mut tape = Tape::new();
    let x = tape.leaf(window.clone());
    let e = tape.leaf(params.embedding.clone());
    let pos = tape.leaf(table.clone());
    let out = embed_on_tape(&mut tape, x, e, pos)?;
    Ok(tape.value(out).clone())
}

/// One encoder layer applied to a single `L x d_model` sequence.
pub fn encoder_layer(
    h: &Matrix,
    layer: &LayerParams<Matrix>,
    config: &TransformerConfig,
) -> Result<Matrix, TransformerError> {
    if h.rows() != config.window_length {
        return Err(TransformerError::Config("encoder input must have window_length rows"));
    }
    let mut tape = Tape::new();
    let hv = tape.leaf(h.clone());
    let vars = layer.map(&mut |m: &Matrix| tape.leaf(m.clone()));
    let out = layer_on_tape(&mut tape, hv, &vars, config)?;
    Ok(tape.value(out.output).clone())
}

/// Intermediate values of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub embedded: Matrix,
    pub layers: Vec<LayerTrace>,
    pub prediction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerTrace {
    /// Per head, `L x L` attention weights.
    pub attention: Vec<Matrix>,
    pub output: Matrix,
}

pub fn forward_traced(
    window: &Matrix,
    params: &TransformerParams,
    config: &TransformerConfig,
) -> Result<ForwardTrace, TransformerError> {
    check_params(params, config)?;
    let mut tape = Tape::new();
    let vars = params.map(|m| tape.leaf(m.clone()));
    let g = build(&mut tape, &vars, &[window], config)?;
    Ok(ForwardTrace {
        embedded: tape.value(g.embedded).clone(),
        layers: g
            .layers
            .iter()
            .map(|l| LayerTrace {
                attention: l.attention.iter().map(|&a| tape.value(a).clone()).collect(),
                output: tape.value(l.output).clone(),
            })
            .collect(),
        prediction: tape.value(g.output)[(0, 0)],
    })
}

pub fn forward(window: &Matrix, params: &TransformerParams, config: &TransformerConfig) -> Result<f64, TransformerError> {
    Ok(predict(params, config, core::slice::from_ref(window))?[0])
}

const PREDICT_CHUNK: usize = 256;

/// Forecast for every window, in input order.
pub fn predict(
    params: &TransformerParams,
    config: &TransformerConfig,
    windows: &[Matrix],
) -> Result<Vec<f64>, TransformerError> {
    check_params(params, config)?;
    let mut out = Vec::with_capacity(windows.len());
    for chunk in windows.chunks(PREDICT_CHUNK) {
        let refs: Vec<&Matrix> = chunk.iter().collect();
        let mut tape = Tape::new();
        let vars = params.map(|m| tape.leaf(m.clone()));
        let y = tape_forward(&mut tape, &vars, &refs, config)?;
        out.extend_from_slice(tape.value(y).data());
    }
    Ok(out)
}

/// Mean squared error over a batch.
pub fn mse_loss(
    windows: &[Matrix],
    targets: &[f64],
    params: &TransformerParams,
    config: &TransformerConfig,
) -> Result<f64, TransformerError> {
    if windows.is_empty() {
        return Err(TransformerError::EmptyData("batch"));
    }
    if windows.len() != targets.len() {
        return Err(TransformerError::Config("one target per window required"));
    }
    let y_hat = predict(params, config, windows)?;
    Ok(y_hat.iter().zip(targets).map(|(p, y)| (y - p) * (y - p)).sum::<f64>() / targets.len() as f64)
}

/// Trained weights bundled with their config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedTransformer {
    pub config: TransformerConfig,
    pub params: TransformerParams,
}

impl Forecaster for TrainedTransformer {
    fn name(&self) -> &str {
        "Transformer"
    }

    fn predict(&self, windows: &[Matrix]) -> Result<Vec<f64>, TensorError> {
        predict(&self.params, &self.config, windows).map_err(|e| match e {
            TransformerError::Tensor(t) => t,
            _ => TensorError::Invalid("transformer forward failed"),
        })
    }
}
