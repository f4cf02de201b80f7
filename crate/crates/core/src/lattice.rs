//! Critically sampled Gabor lattice and the sampled Gaussian matrix `G`.
//!
//! A signal of `N = n_time · n_freq` unit-spaced samples is covered by
//! `n_time × n_freq` phase-space cells of area `Δt·Δω = 2π`, one Gaussian per
//! cell. Column `j` of `G` holds the periodized Gaussian of cell `(n, l)`
//! sampled at `t_k = k`, with `j = (n − 1)·n_freq + (l − 1)`.
//!
//! Because every time cell is the previous one shifted by `Δt = n_freq`
//! samples, `G` is block circulant: the entry only depends on the row offset
//! inside a time cell, the frequency index, and `(q − n) mod n_time`.
//! [`GaborMatrix`] stores just those `n_time` generating blocks.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Image terms of the periodized Gaussian are summed until they drop below this.
pub const WRAP_CUTOFF: f64 = 1e-16;

/// Geometry of the time-frequency grid and the Gaussian width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeConfig {
    pub n_time: usize,
    pub n_freq: usize,
    pub n_total: usize,
    /// Time spacing in samples, `N / n_time`.
    pub dt: f64,
    /// Frequency spacing in rad/sample, `2π / n_freq`.
    pub dw: f64,
    /// Gaussian width parameter `Δω / (2Δt) = π / n_freq²`.
    pub alpha: f64,
    pub t0: f64,
    pub w0: f64,
}

/// Build the lattice for an `n_time × n_freq` grid.
///
/// Time centres sit in the middle of cells that tile `[−½, N − ½)`, the
/// span of the `N` sample cells, so `t0 = −(Δt + 1)/2`. Frequency centres
/// are symmetric about zero with `w0 = −(2π + Δω)/2`.
pub fn build_config(n_time: usize, n_freq: usize) -> Result<LatticeConfig> {
    if n_time == 0 || n_freq == 0 {
        return Err(Error::invalid(format!(
            "lattice dimensions must be positive, got {n_time}×{n_freq}"
        )));
    }
    let n_total = n_time
        .checked_mul(n_freq)
        .ok_or_else(|| Error::invalid("lattice size overflows"))?;
    let dt = n_freq as f64;
    let dw = 2.0 * PI / n_freq as f64;
    Ok(LatticeConfig {
        n_time,
        n_freq,
        n_total,
        dt,
        dw,
        alpha: PI / (n_freq as f64 * n_freq as f64),
        t0: -(dt + 1.0) / 2.0,
        w0: -(2.0 * PI + dw) / 2.0,
    })
}

impl LatticeConfig {
    /// Centre of time cell `n` (1-based).
    pub fn time_center(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    /// Centre of frequency cell `l` (1-based).
    pub fn freq_center(&self, l: usize) -> f64 {
        self.w0 + l as f64 * self.dw
    }

    /// Linear column index of the 1-based cell `(n, l)`.
    pub fn cell_index(&self, n: usize, l: usize) -> Result<usize> {
        self.check_cell(n, l)?;
        Ok((n - 1) * self.n_freq + (l - 1))
    }

    /// 1-based cell `(n, l)` of linear column index `j`.
    pub fn cell_of(&self, j: usize) -> Result<(usize, usize)> {
        if j >= self.n_total {
            return Err(Error::invalid(format!(
                "cell index {j} out of range for N = {}",
                self.n_total
            )));
        }
        Ok((j / self.n_freq + 1, j % self.n_freq + 1))
    }

    fn check_cell(&self, n: usize, l: usize) -> Result<()> {
        if n == 0 || n > self.n_time || l == 0 || l > self.n_freq {
            return Err(Error::invalid(format!(
                "cell ({n}, {l}) outside the {}×{} lattice",
                self.n_time, self.n_freq
            )));
        }
        Ok(())
    }

    fn norm(&self) -> f64 {
        (2.0 * self.alpha / PI).powf(0.25)
    }

    /// Periodized modulated Gaussian as a function of the offset `tau` from
    /// its centre.
    pub(crate) fn periodized(&self, tau: f64, omega: f64) -> Complex64 {
        let norm = self.norm();
        let period = self.n_total as f64;
        let term = |u: f64| norm * Complex64::new(-self.alpha * u * u, omega * u).exp();
        let mut acc = term(tau);
        for dir in [1.0, -1.0] {
            let mut p = 1.0;
            loop {
                let u = tau + dir * p * period;
                let mag = norm * (-self.alpha * u * u).exp();
                if mag < WRAP_CUTOFF && u * dir > 0.0 {
                    break;
                }
                acc += term(u);
                p += 1.0;
            }
        }
        acc
    }
}

/// Periodized Gaussian of cell `(n, l)` (1-based) at sample `k`.
pub fn gaussian_sample(config: &LatticeConfig, cell: (usize, usize), k: usize) -> Result<Complex64> {
    let (n, l) = cell;
    config.check_cell(n, l)?;
    if k >= config.n_total {
        return Err(Error::invalid(format!(
            "sample index {k} out of range for N = {}",
            config.n_total
        )));
    }
    Ok(config.periodized(k as f64 - config.time_center(n), config.freq_center(l)))
}

/// Plain (non-periodic) Gaussian of cell `(n, l)` at continuous time `t`.
pub fn plain_gaussian(config: &LatticeConfig, cell: (usize, usize), t: f64) -> Result<Complex64> {
    let (n, l) = cell;
    config.check_cell(n, l)?;
    let tau = t - config.time_center(n);
    Ok(config.norm() * Complex64::new(-config.alpha * tau * tau, config.freq_center(l) * tau).exp())
}

/// The `N × N` matrix of Gaussian samples, stored as its circulant generating blocks.
#[derive(Debug, Clone)]
pub struct GaborMatrix {
    config: LatticeConfig,
    /// Layout `[s][r][l]`: entry for block offset `s`, row `r` inside a time
    /// cell and frequency index `l`.
    blocks: Vec<Complex64>,
}

pub fn build_gabor_matrix(config: &LatticeConfig) -> GaborMatrix {
    let nt = config.n_time;
    let nf = config.n_freq;
    let first_center = config.time_center(1);
    let mut blocks = Vec::with_capacity(nt * nf * nf);
    for s in 0..nt {
        for r in 0..nf {
            let tau = r as f64 + s as f64 * config.dt - first_center;
            for l in 1..=nf {
                blocks.push(config.periodized(tau, config.freq_center(l)));
            }
        }
    }
    GaborMatrix { config: *config, blocks }
}

impl GaborMatrix {
    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.config.n_total
    }

    /// Generating block for circulant offset `s`, row-major `n_freq × n_freq`.
    pub fn block(&self, s: usize) -> &[Complex64] {
        let sz = self.config.n_freq * self.config.n_freq;
        &self.blocks[s * sz..(s + 1) * sz]
    }

    /// Entry `G[k][j]`.
    pub fn get(&self, k: usize, j: usize) -> Complex64 {
        let nt = self.config.n_time;
        let nf = self.config.n_freq;
        let (q, r) = (k / nf, k % nf);
        let (n0, l0) = (j / nf, j % nf);
        let s = (q + nt - n0) % nt;
        self.blocks[(s * nf + r) * nf + l0]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.n()).map(|k| self.get(k, j)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |k, j| self.get(k, j))
    }

    /// Add `delta` to a single entry of the generating blocks. Every column
    /// sharing that block entry changes with it.
    pub fn perturb(&mut self, s: usize, r: usize, l: usize, delta: Complex64) {
        let nf = self.config.n_freq;
        self.blocks[(s * nf + r) * nf + l] += delta;
    }
}
