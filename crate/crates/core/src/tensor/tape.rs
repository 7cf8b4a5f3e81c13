//! Reverse-mode differentiation over whole matrices.
//!
//! Every operation appends a node holding its value; node indices are
//! therefore a topological order and the reverse sweep simply walks the node
//! list backwards, visiting each node after all of its consumers.

use alloc::vec;
use alloc::vec::Vec;

use super::matrix::{dot, matmul_nt, matmul_tn, matmul_unchecked, normalize};
use super::{Matrix, TensorError};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Transpose(Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    Relu(Var),
    SoftmaxRows(Var),
    LayerNormRows {
        x: Var,
        gain: Var,
        bias: Var,
        x_hat: Matrix,
        inv_std: Vec<f64>,
    },
    AttentionScores {
        q: Var,
        k: Var,
        block: usize,
        scale: f64,
    },
    AttentionMix {
        weights: Var,
        values: Var,
        block: usize,
    },
    ConcatCols(Vec<Var>),
    SelectRows(Var, Vec<usize>),
    Mse(Var, Vec<f64>),
    Sum(Var),
}

#[derive(Debug, Clone)]
struct Node {
    value: Matrix,
    op: Op,
}

/// Records matrix operations for a single reverse sweep. Not shared across
/// threads while recording.
#[derive(Debug, Default, Clone)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Adjoints produced by [`Tape::backward`], indexed by [`Var`].
#[derive(Debug, Clone)]
pub struct Gradients {
    grads: Vec<Option<Matrix>>,
}

impl Gradients {
    /// Gradient of the output with respect to `v`, or `None` when `v` does
    /// not influence the output.
    pub fn get(&self, v: Var) -> Option<&Matrix> {
        self.grads.get(v.0).and_then(Option::as_ref)
    }

    /// Like [`get`](Self::get), but returns zeros shaped like `like` when `v`
    /// was disconnected.
    pub fn get_or_zeros(&self, v: Var, like: &Matrix) -> Matrix {
        self.get(v)
            .cloned()
            .unwrap_or_else(|| Matrix::zeros(like.rows(), like.cols()))
    }

    pub fn take(&mut self, v: Var) -> Option<Matrix> {
        self.grads.get_mut(v.0).and_then(Option::take)
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Matrix {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Matrix, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Records an input (parameter or constant).
    pub fn leaf(&mut self, value: Matrix) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.cols() != bv.rows() {
            return Err(TensorError::shape("matmul", av, bv));
        }
        let out = matmul_unchecked(av, bv);
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    pub fn transpose(&mut self, a: Var) -> Var {
        let out = self.value(a).transpose();
        self.push(out, Op::Transpose(a))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var, TensorError> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(TensorError::shape("add", av, bv));
        }
        let mut out = av.clone();
        out.add_assign(bv);
        Ok(self.push(out, Op::Add(a, b)))
    }

    /// Adds the `1 x c` row `bias` to every row of `x`.
    pub fn add_row(&mut self, x: Var, bias: Var) -> Result<Var, TensorError> {
        let (xv, bv) = (self.value(x), self.value(bias));
        if bv.rows() != 1 || bv.cols() != xv.cols() {
            return Err(TensorError::shape("add_row", xv, bv));
        }
        let mut out = xv.clone();
        for r in 0..out.rows() {
            for (o, b) in out.row_mut(r).iter_mut().zip(bv.data()) {
                *o += b;
            }
        }
        Ok(self.push(out, Op::AddRow(x, bias)))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let out = self.value(x).map(|v| v * factor);
        self.push(out, Op::Scale(x, factor))
    }

    pub fn relu(&mut self, x: Var) -> Var {
        let out = self.value(x).map(|v| if v > 0.0 { v } else { 0.0 });
        self.push(out, Op::Relu(x))
    }

    pub fn softmax_rows(&mut self, x: Var) -> Var {
        let out = super::softmax_rows(self.value(x));
        self.push(out, Op::SoftmaxRows(x))
    }

    /// Row-wise layer normalisation with `1 x d` gain and bias.
    pub fn layer_norm_rows(&mut self, x: Var, gain: Var, bias: Var, eps: f64) -> Result<Var, TensorError> {
        let (xv, gv, bv) = (self.value(x), self.value(gain), self.value(bias));
        if gv.rows() != 1 || gv.cols() != xv.cols() {
            return Err(TensorError::shape("layer_norm", xv, gv));
        }
        if bv.shape() != gv.shape() {
            return Err(TensorError::shape("layer_norm", gv, bv));
        }
        if !(eps > 0.0) {
            return Err(TensorError::Invalid("layer_norm eps must be positive"));
        }
        let (rows, cols) = xv.shape();
        let mut x_hat = Matrix::zeros(rows, cols);
        let mut inv_std = Vec::with_capacity(rows);
        let mut out = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let (normed, inv) = normalize(xv.row(r), eps);
            inv_std.push(inv);
            for c in 0..cols {
                x_hat[(r, c)] = normed[c];
                out[(r, c)] = normed[c] * gv.data()[c] + bv.data()[c];
            }
        }
        Ok(self.push(
            out,
            Op::LayerNormRows {
                x,
                gain,
                bias,
                x_hat,
                inv_std,
            },
        ))
    }

    /// Block-diagonal scaled scores. `q` and `k` stack `B` sequences of
    /// `block` rows each; row `b*block + i` of the `(B*block) x block` output
    /// holds `scale * q_i · k_j` for the keys `j` of the same sequence.
    pub fn attention_scores(&mut self, q: Var, k: Var, block: usize, scale: f64) -> Result<Var, TensorError> {
        let (qv, kv) = (self.value(q), self.value(k));
        if qv.shape() != kv.shape() || block == 0 || qv.rows() % block != 0 {
            return Err(TensorError::shape("attention_scores", qv, kv));
        }
        let n = qv.rows();
        let mut out = Matrix::zeros(n, block);
        for start in (0..n).step_by(block) {
            for i in 0..block {
                for j in 0..block {
                    out[(start + i, j)] = scale * dot(qv.row(start + i), kv.row(start + j));
                }
            }
        }
        Ok(self.push(out, Op::AttentionScores { q, k, block, scale }))
    }

    /// Block-diagonal mixing: row `b*block + i` of the output is
    /// `Σ_j weights[b*block + i, j] * values[b*block + j, :]`.
    pub fn attention_mix(&mut self, weights: Var, values: Var, block: usize) -> Result<Var, TensorError> {
        let (wv, vv) = (self.value(weights), self.value(values));
        if wv.cols() != block || wv.rows() != vv.rows() || block == 0 || wv.rows() % block != 0 {
            return Err(TensorError::shape("attention_mix", wv, vv));
        }
        let (n, d) = (vv.rows(), vv.cols());
        let mut out = Matrix::zeros(n, d);
        for start in (0..n).step_by(block) {
            for i in 0..block {
                let out_row = out.row_mut(start + i);
                for j in 0..block {
                    let w = wv[(start + i, j)];
                    for (o, v) in out_row.iter_mut().zip(vv.row(start + j)) {
                        *o += w * v;
                    }
                }
            }
        }
        Ok(self.push(out, Op::AttentionMix { weights, values, block }))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Result<Var, TensorError> {
        let first = *parts.first().ok_or(TensorError::Invalid("concat of nothing"))?;
        let rows = self.value(first).rows();
        let mut cols = 0;
        for &p in parts {
            let pv = self.value(p);
            if pv.rows() != rows {
                return Err(TensorError::shape("concat_cols", self.value(first), pv));
            }
            cols += pv.cols();
        }
        let mut out = Matrix::zeros(rows, cols);
        for r in 0..rows {
            let mut offset = 0;
            for &p in parts {
                let src = self.nodes[p.0].value.row(r);
                out.row_mut(r)[offset..offset + src.len()].copy_from_slice(src);
                offset += src.len();
            }
        }
        Ok(self.push(out, Op::ConcatCols(parts.to_vec())))
    }

    pub fn select_rows(&mut self, x: Var, rows: &[usize]) -> Result<Var, TensorError> {
        let xv = self.value(x);
        if rows.is_empty() || rows.iter().any(|&r| r >= xv.rows()) {
            return Err(TensorError::Invalid("select_rows index out of range"));
        }
        let mut data = Vec::with_capacity(rows.len() * xv.cols());
        for &r in rows {
            data.extend_from_slice(xv.row(r));
        }
        let out = Matrix::from_parts(rows.len(), xv.cols(), data);
        Ok(self.push(out, Op::SelectRows(x, rows.to_vec())))
    }

    /// Mean squared error of an `n x 1` prediction column against `targets`.
    pub fn mse(&mut self, predictions: Var, targets: &[f64]) -> Result<Var, TensorError> {
        let pv = self.value(predictions);
        if pv.cols() != 1 || pv.rows() != targets.len() {
            return Err(TensorError::Invalid("mse expects an n x 1 prediction column"));
        }
        let n = targets.len() as f64;
        let loss = pv
            .data()
            .iter()
            .zip(targets)
            .map(|(p, y)| (y - p) * (y - p))
            .sum::<f64>()
            / n;
        Ok(self.push(Matrix::filled(1, 1, loss), Op::Mse(predictions, targets.to_vec())))
    }

    pub fn sum(&mut self, x: Var) -> Var {
        let s = self.value(x).sum();
        self.push(Matrix::filled(1, 1, s), Op::Sum(x))
    }

    /// Reverse sweep from a `1 x 1` output.
    pub fn backward(&self, output: Var) -> Result<Gradients, TensorError> {
        if self.value(output).shape() != (1, 1) {
            return Err(TensorError::Invalid("backward requires a scalar output"));
        }
        let mut grads: Vec<Option<Matrix>> = vec![None; output.0 + 1];
        grads[output.0] = Some(Matrix::filled(1, 1, 1.0));

        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (av, bv) = (self.value(*a), self.value(*b));
                    accumulate(&mut grads, *a, matmul_nt(&g, bv));
                    accumulate(&mut grads, *b, matmul_tn(av, &g));
                }
                Op::Transpose(a) => accumulate(&mut grads, *a, g.transpose()),
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, g.clone());
                    accumulate(&mut grads, *b, g.clone());
                }
                Op::AddRow(x, bias) => {
                    let mut gb = Matrix::zeros(1, g.cols());
                    for r in 0..g.rows() {
                        for (o, v) in gb.data_mut().iter_mut().zip(g.row(r)) {
                            *o += v;
                        }
                    }
                    accumulate(&mut grads, *bias, gb);
                    accumulate(&mut grads, *x, g.clone());
                }
                Op::Scale(x, factor) => accumulate(&mut grads, *x, g.map(|v| v * factor)),
                Op::Relu(x) => {
                    let xv = self.value(*x);
                    let mut gx = g.clone();
                    for (o, &v) in gx.data_mut().iter_mut().zip(xv.data()) {
                        if v <= 0.0 {
                            *o = 0.0;
                        }
                    }
                    accumulate(&mut grads, *x, gx);
                }
                Op::SoftmaxRows(x) => {
                    let y = &node.value;
                    let mut gx = Matrix::zeros(y.rows(), y.cols());
                    for r in 0..y.rows() {
                        let inner = dot(g.row(r), y.row(r));
                        for c in 0..y.cols() {
                            gx[(r, c)] = y[(r, c)] * (g[(r, c)] - inner);
                        }
                    }
                    accumulate(&mut grads, *x, gx);
                }
                Op::LayerNormRows {
                    x,
                    gain,
                    bias,
                    x_hat,
                    inv_std,
                } => {
                    let gv = self.value(*gain);
                    let (rows, cols) = x_hat.shape();
                    let d = cols as f64;
                    let mut g_gain = Matrix::zeros(1, cols);
                    let mut g_bias = Matrix::zeros(1, cols);
                    let mut gx = Matrix::zeros(rows, cols);
                    for r in 0..rows {
                        let mut sum_dxh = 0.0;
                        let mut sum_dxh_xh = 0.0;
                        for c in 0..cols {
                            let gi = g[(r, c)];
                            g_gain.data_mut()[c] += gi * x_hat[(r, c)];
                            g_bias.data_mut()[c] += gi;
                            let dxh = gi * gv.data()[c];
                            sum_dxh += dxh;
                            sum_dxh_xh += dxh * x_hat[(r, c)];
                        }
                        for c in 0..cols {
                            let dxh = g[(r, c)] * gv.data()[c];
                            gx[(r, c)] = inv_std[r] / d * (d * dxh - sum_dxh - x_hat[(r, c)] * sum_dxh_xh);
                        }
                    }
                    accumulate(&mut grads, *gain, g_gain);
                    accumulate(&mut grads, *bias, g_bias);
                    accumulate(&mut grads, *x, gx);
                }
                Op::AttentionScores { q, k, block, scale } => {
                    let (qv, kv) = (self.value(*q), self.value(*k));
                    let (n, dk) = qv.shape();
                    let mut gq = Matrix::zeros(n, dk);
                    let mut gk = Matrix::zeros(n, dk);
                    for start in (0..n).step_by(*block) {
                        for i in 0..*block {
                            for j in 0..*block {
                                let s = scale * g[(start + i, j)];
                                if s == 0.0 {
                                    continue;
                                }
                                for c in 0..dk {
                                    gq[(start + i, c)] += s * kv[(start + j, c)];
                                    gk[(start + j, c)] += s * qv[(start + i, c)];
                                }
                            }
                        }
                    }
                    accumulate(&mut grads, *q, gq);
                    accumulate(&mut grads, *k, gk);
                }
                Op::AttentionMix { weights, values, block } => {
                    let (wv, vv) = (self.value(*weights), self.value(*values));
                    let (n, dv) = vv.shape();
                    let mut gw = Matrix::zeros(n, *block);
                    let mut gv = Matrix::zeros(n, dv);
                    for start in (0..n).step_by(*block) {
                        for i in 0..*block {
                            for j in 0..*block {
                                gw[(start + i, j)] = dot(g.row(start + i), vv.row(start + j));
                                let w = wv[(start + i, j)];
                                for c in 0..dv {
                                    gv[(start + j, c)] += w * g[(start + i, c)];
                                }
                            }
                        }
                    }
                    accumulate(&mut grads, *weights, gw);
                    accumulate(&mut grads, *values, gv);
                }
                Op::ConcatCols(parts) => {
                    let mut offset = 0;
                    for &p in parts {
                        let pc = self.value(p).cols();
                        let mut gp = Matrix::zeros(g.rows(), pc);
                        for r in 0..g.rows() {
                            gp.row_mut(r).copy_from_slice(&g.row(r)[offset..offset + pc]);
                        }
                        accumulate(&mut grads, p, gp);
                        offset += pc;
                    }
                }
                Op::SelectRows(x, rows) => {
                    let xv = self.value(*x);
                    let mut gx = Matrix::zeros(xv.rows(), xv.cols());
                    for (i, &r) in rows.iter().enumerate() {
                        for (o, v) in gx.row_mut(r).iter_mut().zip(g.row(i)) {
                            *o += v;
                        }
                    }
                    accumulate(&mut grads, *x, gx);
                }
                Op::Mse(p, targets) => {
                    let pv = self.value(*p);
                    let n = targets.len() as f64;
                    let upstream = g[(0, 0)];
                    let data = pv
                        .data()
                        .iter()
                        .zip(targets)
                        .map(|(p, y)| upstream * 2.0 * (p - y) / n)
                        .collect();
                    accumulate(&mut grads, *p, Matrix::from_parts(pv.rows(), 1, data));
                }
                Op::Sum(x) => {
                    let xv = self.value(*x);
                    accumulate(&mut grads, *x, Matrix::filled(xv.rows(), xv.cols(), g[(0, 0)]));
                }
            }
            grads[idx] = Some(g);
        }
        Ok(Gradients { grads })
    }
}

fn accumulate(grads: &mut [Option<Matrix>], v: Var, g: Matrix) {
    match &mut grads[v.0] {
        Some(existing) => existing.add_assign(&g),
        slot @ None => *slot = Some(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_of_product_gradient() {
        let mut tape = Tape::new();
        let a = tape.leaf(Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap());
        let b = tape.leaf(Matrix::from_rows(&[vec![5.0, -1.0], vec![6.0, 0.5]]).unwrap());
        let c = tape.matmul(a, b).unwrap();
        let s = tape.sum(c);
        let grads = tape.backward(s).unwrap();
        // d sum(AB) / dA = ones · Bᵀ
        let ga = grads.get(a).unwrap();
        assert_eq!(ga.data(), &[4.0, 6.5, 4.0, 6.5]);
    }

    #[test]
    fn reused_node_accumulates() {
        let mut tape = Tape::new();
        let x = tape.leaf(Matrix::filled(1, 1, 3.0));
        let y = tape.add(x, x).unwrap();
        let grads = tape.backward(y).unwrap();
        assert_eq!(grads.get(x).unwrap()[(0, 0)], 2.0);
    }

    #[test]
    fn disconnected_leaf_has_no_gradient() {
        let mut tape = Tape::new();
        let x = tape.leaf(Matrix::filled(1, 1, 3.0));
        let unused = tape.leaf(Matrix::filled(2, 2, 1.0));
        let s = tape.sum(x);
        let grads = tape.backward(s).unwrap();
        assert!(grads.get(unused).is_none());
        assert_eq!(grads.get_or_zeros(unused, tape.value(unused)), Matrix::zeros(2, 2));
    }

    #[test]
    fn backward_rejects_non_scalar() {
        let mut tape = Tape::new();
        let x = tape.leaf(Matrix::zeros(2, 1));
        assert!(tape.backward(x).is_err());
    }
}
