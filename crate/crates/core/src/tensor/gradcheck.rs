use alloc::vec::Vec;

use super::{Matrix, Tape, TensorError, Var};

/// Outcome of [`grad_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    /// Max over coordinates of `|g_fd - g_ad| / max(1, |g_fd|, |g_ad|)`.
    pub max_rel_error: f64,
    /// `(parameter index, flat coordinate)` where the maximum occurred.
    pub worst: (usize, usize),
    pub coordinates: usize,
    pub passed: bool,
}

/// Compares the taped gradient of a scalar function against central
/// differences `(f(θ + h e_i) - f(θ - h e_i)) / 2h` over every coordinate of
/// every parameter.
///
/// `f` receives a fresh tape and the parameter handles, and returns the
/// `1 x 1` output.
pub fn grad_check<F>(f: F, params: &[Matrix], h: f64, tol: f64) -> Result<GradCheckReport, TensorError>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var, TensorError>,
{
    if !(h > 0.0) {
        return Err(TensorError::Invalid("finite-difference step must be positive"));
    }
    let evaluate = |values: &[Matrix]| -> Result<f64, TensorError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = values.iter().map(|m| tape.leaf(m.clone())).collect();
        let out = f(&mut tape, &vars)?;
        let v = tape.value(out);
        if v.shape() != (1, 1) {
            return Err(TensorError::Invalid("grad_check function must return a scalar"));
        }
        let v = v[(0, 0)];
        if v.is_finite() {
            Ok(v)
        } else {
            Err(TensorError::Evaluation)
        }
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|m| tape.leaf(m.clone())).collect();
    let out = f(&mut tape, &vars)?;
    if !tape.value(out)[(0, 0)].is_finite() {
        return Err(TensorError::Evaluation);
    }
    let grads = tape.backward(out)?;
    let analytic: Vec<Matrix> = vars
        .iter()
        .zip(params)
        .map(|(&v, p)| grads.get_or_zeros(v, p))
        .collect();

    let mut work: Vec<Matrix> = params.to_vec();
    let mut max_rel_error: f64 = 0.0;
    let mut worst = (0, 0);
    let mut coordinates = 0;
    for p in 0..params.len() {
        for i in 0..params[p].data().len() {
            let original = params[p].data()[i];
            work[p].data_mut()[i] = original + h;
            let plus = evaluate(&work)?;
            work[p].data_mut()[i] = original - h;
            let minus = evaluate(&work)?;
            work[p].data_mut()[i] = original;

            let fd = (plus - minus) / (2.0 * h);
            let ad = analytic[p].data()[i];
            let denom = 1.0_f64.max(fd.abs()).max(ad.abs());
            let err = (fd - ad).abs() / denom;
            if err > max_rel_error {
                max_rel_error = err;
                worst = (p, i);
            }
            coordinates += 1;
        }
    }
    Ok(GradCheckReport {
        max_rel_error,
        worst,
        coordinates,
        passed: max_rel_error <= tol,
    })
}
