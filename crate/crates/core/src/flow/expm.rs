//! Matrix exponential and the closed-form solution for a frozen geospin matrix.
//!
//! With `W0` held fixed, `dv/dt = −W0 v` has `v(t) = expm(−W0 t) v0` (column
//! vectors), and the position is `u(t) = u0 + v0 t + û(W0, t)` with
//! `û = Σ_{m≥1} (−W0)^m t^{m+1} / (m+1)! · v0`.

use crate::error::{Error, Result};
use crate::linalg::Matrix;

const TAYLOR_TERMS: usize = 18;
const SERIES_TOL: f64 = 1e-15;
pub const SERIES_MAX_TERMS: usize = 500;

/// Scaling and squaring around a truncated Taylor series.
pub fn expm(m: &Matrix) -> Result<Matrix> {
    if !m.is_finite() {
        return Err(Error::Overflow("matrix has non-finite entries".into()));
    }
    let n = m.dim();
    let norm = m.norm1();
    // scale so that the norm is at most 1/2
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    if s > 1000 {
        return Err(Error::Overflow(format!("norm {norm:e} is too large")));
    }
    let a = m.scale(0.5f64.powi(s));
    let mut result = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=TAYLOR_TERMS {
        term = term.matmul(&a).scale(1.0 / k as f64);
        result = result.add(&term);
    }
    for _ in 0..s {
        result = result.matmul(&result);
        if !result.is_finite() {
            return Err(Error::Overflow(format!("squaring overflowed (norm {norm:e})")));
        }
    }
    Ok(result)
}

fn check_dims(w0: &Matrix, v: &[f64]) -> Result<()> {
    if v.len() != w0.dim() {
        return Err(Error::DimensionMismatch {
            expected: w0.dim(),
            got: v.len(),
        });
    }
    Ok(())
}

/// `v(t) = expm(−W0 t) v0`
pub fn constant_w_velocity(w0: &Matrix, v0: &[f64], t: f64) -> Result<Vec<f64>> {
    check_dims(w0, v0)?;
    Ok(expm(&w0.scale(-t))?.mul_vec(v0))
}

/// `û(W0, t) = Σ_{m≥1} (−W0)^m t^{m+1} / (m+1)! · v0`, summed term by term with no
/// inversion of `W0`. Stops once a term falls below `1e-15` relative to
/// `max(1, |û|)`; vanishes exactly when `W0 = 0`.
pub fn position_correction(w0: &Matrix, v0: &[f64], t: f64) -> Result<Vec<f64>> {
    check_dims(w0, v0)?;
    let n = v0.len();
    let mut sum = vec![0.0; n];
    // term_m = (−W0 t)^m v0 t / (m+1)!
    let mut term: Vec<f64> = v0.iter().map(|x| x * t).collect();
    for m in 1..=SERIES_MAX_TERMS {
        let next = w0.mul_vec(&term);
        let c = -t / (m + 1) as f64;
        term = next.into_iter().map(|x| x * c).collect();
        let size = term.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        if !size.is_finite() {
            return Err(Error::Overflow("position series diverged numerically".into()));
        }
        for (s, x) in sum.iter_mut().zip(&term) {
            *s += x;
        }
        let scale = sum.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        if size < SERIES_TOL * scale {
            return Ok(sum);
        }
    }
    Err(Error::SeriesNotConverged(SERIES_MAX_TERMS))
}

/// `u(t) = u0 + v0 t + û(W0, t)`
pub fn constant_w_position(w0: &Matrix, v0: &[f64], u0: &[f64], t: f64) -> Result<Vec<f64>> {
    check_dims(w0, u0)?;
    let hat = position_correction(w0, v0, t)?;
    Ok((0..v0.len()).map(|k| (v0[k] * t + u0[k]) + hat[k]).collect())
}
