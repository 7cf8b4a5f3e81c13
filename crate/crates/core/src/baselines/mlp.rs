use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{BaselineError, DesignMatrix, FitConfig};
use crate::optim::{glorot_uniform, Adam};
use crate::seed;
use crate::tensor::{Matrix, Tape, TensorError, Var};

/// One hidden ReLU layer and a linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// `p x hidden`.
    pub w1: Matrix,
    pub b1: Matrix,
    /// `hidden x 1`.
    pub w2: Matrix,
    pub b2: Matrix,
    /// Sample-weighted mean minibatch loss per epoch.
    pub epoch_mse: Vec<f64>,
}

impl MlpModel {
    pub fn params(&self) -> [&Matrix; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub fn predict_row(&self, x: &[f64]) -> f64 {
        let hidden = self.w1.cols();
        let mut out = self.b2[(0, 0)];
        for j in 0..hidden {
            let mut z = self.b1[(0, j)];
            for (i, v) in x.iter().enumerate() {
                z += v * self.w1[(i, j)];
            }
            out += z.max(0.0) * self.w2[(j, 0)];
        }
        out
    }
}

/// MSE of the network `[w1, b1, w2, b2]` on `x`, recorded on `tape`.
pub fn mlp_loss_on_tape(tape: &mut Tape, params: &[Var], x: &Matrix, y: &[f64]) -> Result<Var, TensorError> {
    let [w1, b1, w2, b2] = params else {
        return Err(TensorError::Invalid("mlp expects four parameters"));
    };
    let xv = tape.leaf(x.clone());
    let h = tape.matmul(xv, *w1)?;
    let h = tape.add_row(h, *b1)?;
    let h = tape.relu(h);
    let out = tape.matmul(h, *w2)?;
    let out = tape.add_row(out, *b2)?;
    tape.mse(out, y)
}

fn rows_of(x: &Matrix, idx: &[usize]) -> Matrix {
    let mut data = Vec::with_capacity(idx.len() * x.cols());
    for &r in idx {
        data.extend_from_slice(x.row(r));
    }
    Matrix::from_parts(idx.len(), x.cols(), data)
}

/// Minibatch Adam for a fixed number of epochs. Weights are Glorot-uniform
/// from the `mlp/init` stream, the output bias starts at the target mean.
pub fn fit_mlp(d: &DesignMatrix, cfg: &FitConfig) -> Result<MlpModel, BaselineError> {
    if cfg.mlp_hidden == 0 || cfg.mlp_batch_size == 0 {
        return Err(BaselineError::Param("mlp hidden width and batch size must be at least 1"));
    }
    let mut init = seed::stream(cfg.seed, "mlp/init");
    let mut shuffle = seed::stream(cfg.seed, "mlp/shuffle");
    let mut params = [
        glorot_uniform(&mut init, d.p(), cfg.mlp_hidden),
        Matrix::zeros(1, cfg.mlp_hidden),
        glorot_uniform(&mut init, cfg.mlp_hidden, 1),
        Matrix::filled(1, 1, d.mean_target()),
    ];
    let mut adam = Adam::new(cfg.mlp_learning_rate, params.iter());
    let mut order: Vec<usize> = (0..d.n()).collect();
    let mut epoch_mse = Vec::with_capacity(cfg.mlp_epochs);
    for epoch in 1..=cfg.mlp_epochs {
        order.shuffle(&mut shuffle);
        let mut total = 0.0;
        for batch in order.chunks(cfg.mlp_batch_size) {
            let x = rows_of(&d.x, batch);
            let y: Vec<f64> = batch.iter().map(|&i| d.y[i]).collect();
            let mut tape = Tape::new();
            let vars: Vec<Var> = params.iter().map(|m| tape.leaf(m.clone())).collect();
            let loss = mlp_loss_on_tape(&mut tape, &vars, &x, &y)?;
            let value = tape.value(loss)[(0, 0)];
            if !value.is_finite() {
                return Err(BaselineError::Divergence { epoch });
            }
            total += value * batch.len() as f64;
            let grads = tape.backward(loss)?;
            let grads: Vec<Matrix> = vars.iter().zip(&params).map(|(&v, p)| grads.get_or_zeros(v, p)).collect();
            adam.step(params.iter_mut(), &grads);
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(BaselineError::Divergence { epoch });
        }
        epoch_mse.push(total / d.n() as f64);
    }
    let [w1, b1, w2, b2] = params;
    Ok(MlpModel {
        w1,
        b1,
        w2,
        b2,
        epoch_mse,
    })
}
