//! Dirichlet (periodic sinc) kernel and continuous-time evaluation of the
//! pg and bg functions through band-limited interpolation of their samples.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::transform::{CoefficientSet, TransformPlan};
use crate::Mode;

type C = Complex64;

/// Periodic sinc of period `n` samples, `D(0) = 1` and `D(k) = 0` at the other integers.
///
/// Odd `n` uses the symmetric frequency range `−(n−1)/2..=(n−1)/2` and is
/// real. Even `n` uses `−n/2..n/2−1`, which carries the phase `e^{−jπt/n}`
/// off the sample grid.
pub fn dirichlet_eval(n: usize, t: f64) -> C {
    assert!(n >= 1, "Dirichlet kernel needs n ≥ 1");
    if n == 1 {
        return C::new(1.0, 0.0);
    }
    let nf = n as f64;
    // both parities are n-periodic, so reduce to (−n/2, n/2]
    let t = t - nf * (t / nf).round();
    let ratio = if t == 0.0 {
        1.0
    } else if t.abs() < 1e-8 {
        let x = PI * t;
        1.0 - x * x * (1.0 - 1.0 / (nf * nf)) / 6.0
    } else {
        (PI * t).sin() / (nf * (PI * t / nf).sin())
    };
    if n % 2 == 1 {
        C::new(ratio, 0.0)
    } else {
        C::from_polar(ratio, -PI * t / nf)
    }
}

/// Band-limited interpolation `Σ_i x[i]·D(t − i)`; exact at integer `t`.
pub fn interpolate(x: &[C], t: f64) -> Result<C> {
    if x.is_empty() {
        return Err(Error::invalid("cannot interpolate an empty signal"));
    }
    let n = x.len();
    if t.fract() == 0.0 && t.abs() < 1e15 {
        let k = (t as i64).rem_euclid(n as i64) as usize;
        return Ok(x[k]);
    }
    Ok(x.iter()
        .enumerate()
        .map(|(i, &v)| v * dirichlet_eval(n, t - i as f64))
        .sum())
}

/// Interpolate at many points.
pub fn interpolate_many(x: &[C], ts: &[f64]) -> Result<Vec<C>> {
    ts.iter().map(|&t| interpolate(x, t)).collect()
}

/// `factor` points per sample over one period `[0, n)`.
pub fn oversampled_grid(n: usize, factor: usize) -> Vec<f64> {
    (0..n * factor).map(|i| i as f64 / factor as f64).collect()
}

/// Continuous pg function `g̃_m(t) = Σ_i G[i][m]·D(t − i)`.
pub fn pg_eval(plan: &TransformPlan, m: usize, t: f64) -> Result<C> {
    if m >= plan.n() {
        return Err(Error::invalid(format!("cell index {m} out of range for N = {}", plan.n())));
    }
    interpolate(&plan.gabor().column(m), t)
}

/// Continuous bg function `Σ_i B[i][m]·D(t − i)`.
pub fn bg_eval(plan: &TransformPlan, m: usize, t: f64) -> Result<C> {
    interpolate(&plan.biorthogonal_column(m)?, t)
}

/// Evaluate the expansion described by a full coefficient set at arbitrary times.
pub fn synthesize_at(plan: &TransformPlan, coeffs: &CoefficientSet, ts: &[f64]) -> Result<Vec<C>> {
    if coeffs.values.len() != plan.n() {
        return Err(Error::shape(format!(
            "coefficient set has {} values, plan expects {}",
            coeffs.values.len(),
            plan.n()
        )));
    }
    let samples = match coeffs.mode {
        Mode::Pg => plan.apply_g(&coeffs.values),
        Mode::Pgb => plan.solve_gh(&coeffs.values),
        Mode::Dft => return Err(Error::Mode { expected: "pg or pgb", found: Mode::Dft }),
    };
    interpolate_many(&samples, ts)
}
