use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::{BaselineError, DesignMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearKind {
    Ols,
    Ridge,
    Lasso,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub kind: LinearKind,
    pub lambda: f64,
    pub intercept: f64,
    pub coef: Vec<f64>,
}

impl LinearModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(x).map(|(b, v)| b * v).sum::<f64>()
    }
}

const PIVOT_TOL: f64 = 1e-10;
const LASSO_TOL: f64 = 1e-8;
const LASSO_MAX_SWEEPS: usize = 100_000;

struct Centered {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    x_mean: Vec<f64>,
    y_mean: f64,
}

/// Column-major centred copy of the design.
fn center(d: &DesignMatrix) -> Centered {
    let (n, p) = (d.n(), d.p());
    let y_mean = d.mean_target();
    let mut x = Vec::with_capacity(p);
    let mut x_mean = Vec::with_capacity(p);
    for c in 0..p {
        let col = d.x.column(c);
        let m = col.iter().sum::<f64>() / n as f64;
        x.push(col.iter().map(|v| v - m).collect());
        x_mean.push(m);
    }
    Centered {
        x,
        y: d.y.iter().map(|v| v - y_mean).collect(),
        x_mean,
        y_mean,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `A x = b` for symmetric positive-definite `A` (row-major, `p x p`).
fn cholesky_solve(mut a: Vec<f64>, b: &[f64], p: usize) -> Result<Vec<f64>, BaselineError> {
    let max_diag = (0..p).map(|i| a[i * p + i].abs()).fold(0.0, f64::max);
    let floor = PIVOT_TOL * max_diag.max(f64::MIN_POSITIVE);
    for j in 0..p {
        let mut d = a[j * p + j];
        for k in 0..j {
            d -= a[j * p + k] * a[j * p + k];
        }
        if !(d > floor) {
            return Err(BaselineError::Singular);
        }
        let d = libm::sqrt(d);
        a[j * p + j] = d;
        for i in j + 1..p {
            let mut s = a[i * p + j];
            for k in 0..j {
                s -= a[i * p + k] * a[j * p + k];
            }
            a[i * p + j] = s / d;
        }
    }
    let mut z = vec![0.0; p];
    for i in 0..p {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * p + k] * z[k];
        }
        z[i] = s / a[i * p + i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let mut s = z[i];
        for k in i + 1..p {
            s -= a[k * p + i] * x[k];
        }
        x[i] = s / a[i * p + i];
    }
    Ok(x)
}

fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

/// OLS and ridge solve `(XcᵀXc + λI) β = Xcᵀyc` on centred data; lasso
/// minimises `½‖yc − Xcβ‖² + λ‖β‖₁` by cyclic coordinate descent. The
/// intercept is recovered from the means and never penalised.
pub fn fit_linear(kind: LinearKind, d: &DesignMatrix, lambda: f64) -> Result<LinearModel, BaselineError> {
    if !(lambda >= 0.0) {
        return Err(BaselineError::Param("lambda must be non-negative"));
    }
    let lambda = if kind == LinearKind::Ols { 0.0 } else { lambda };
    let c = center(d);
    let p = d.p();
    let coef = match kind {
        LinearKind::Ols | LinearKind::Ridge => {
            let mut gram = vec![0.0; p * p];
            for i in 0..p {
                for j in 0..=i {
                    let v = dot(&c.x[i], &c.x[j]);
                    gram[i * p + j] = v;
                    gram[j * p + i] = v;
                }
                gram[i * p + i] += lambda;
            }
            let rhs: Vec<f64> = c.x.iter().map(|col| dot(col, &c.y)).collect();
            cholesky_solve(gram, &rhs, p)?
        }
        LinearKind::Lasso => lasso(&c, lambda),
    };
    let intercept = c.y_mean - dot(&coef, &c.x_mean);
    Ok(LinearModel {
        kind,
        lambda,
        intercept,
        coef,
    })
}

fn lasso(c: &Centered, lambda: f64) -> Vec<f64> {
    let p = c.x.len();
    let norms: Vec<f64> = c.x.iter().map(|col| dot(col, col)).collect();
    let mut beta = vec![0.0; p];
    let mut resid = c.y.clone();
    for _ in 0..LASSO_MAX_SWEEPS {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            if norms[j] == 0.0 {
                continue;
            }
            let col = &c.x[j];
            let rho = dot(col, &resid) + norms[j] * beta[j];
            let updated = soft_threshold(rho, lambda) / norms[j];
            let delta = updated - beta[j];
            if delta != 0.0 {
                for (r, x) in resid.iter_mut().zip(col) {
                    *r -= delta * x;
                }
                beta[j] = updated;
            }
            max_change = max_change.max(delta.abs());
        }
        if max_change < LASSO_TOL {
            break;
        }
    }
    beta
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tensor::Matrix;

    #[test]
    fn two_point_ols() {
        let d = DesignMatrix::new(Matrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap(), vec![1.0, 3.0]).unwrap();
        let m = fit_linear(LinearKind::Ols, &d, 0.0).unwrap();
        assert!((m.intercept - 1.0).abs() < 1e-12);
        assert!((m.coef[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient_ols_is_singular() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0]]).unwrap();
        let d = DesignMatrix::new(x, vec![1.0, 2.0, 4.0]).unwrap();
        let err = fit_linear(LinearKind::Ols, &d, 0.0).unwrap_err();
        assert_eq!(err, BaselineError::Singular);
        assert!(err.to_string().contains("ridge"));
        assert!(fit_linear(LinearKind::Ridge, &d, 1.0).is_ok());
    }

    #[test]
    fn soft_threshold_cases() {
        assert_eq!(soft_threshold(3.0, 1.0), 2.0);
        assert_eq!(soft_threshold(-3.0, 1.0), -2.0);
        assert_eq!(soft_threshold(0.5, 1.0), 0.0);
    }
}
