//! Exact analysis and synthesis on the critically sampled lattice.
//!
//! Two coefficient families share one index layout:
//!
//! * **pgb** (biorthogonal exchange): `d = G†x`, synthesis `x = B d` with
//!   `B = (G†)⁻¹`. The analysis vectors are the localized Gaussians.
//! * **pg**: `c = G⁻¹x`, synthesis `x = G c`. This is the discrete Gabor
//!   expansion; `c = S⁻¹G†x` with `S = G†G`.
//!
//! `G` is block circulant, so a DFT over the time-cell index turns it into
//! `n_time` independent `n_freq × n_freq` blocks `Â_θ`. Every product and
//! solve with `G`, `G†` or `S` runs blockwise on LU factors of those blocks.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Mode, Result};
use crate::lattice::{build_gabor_matrix, GaborMatrix, LatticeConfig};
use crate::linalg::{adjoint, matmul, Lu};
use crate::signal::Signal1D;

type C = Complex64;

/// Plans with a larger condition estimate carry a warning.
pub const COND_WARN: f64 = 1e8;
/// Plans with a larger condition estimate are rejected.
pub const COND_FAIL: f64 = 1e12;
/// Relative imaginary residual below which synthesis of a real input is returned as real.
pub const REAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
struct SpectralBlock {
    a: Vec<C>,
    ah: Vec<C>,
    lu: Lu,
    lu_h: Lu,
}

#[derive(Clone, Copy)]
enum BlockOp {
    Mul,
    MulAdjoint,
    Solve,
    SolveAdjoint,
}

/// `G` together with the blockwise factorizations needed to solve with `G`, `G†` and `S`.
#[derive(Clone)]
pub struct TransformPlan {
    config: LatticeConfig,
    g: GaborMatrix,
    blocks: Vec<SpectralBlock>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    cond_estimate: f64,
    warning: Option<String>,
}

impl std::fmt::Debug for TransformPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TransformPlan")
            .field("config", &self.config)
            .field("cond_estimate", &self.cond_estimate)
            .field("warning", &self.warning)
            .finish()
    }
}

pub fn build_plan(config: &LatticeConfig) -> Result<TransformPlan> {
    TransformPlan::from_matrix(build_gabor_matrix(config))
}

impl TransformPlan {
    /// Factorize an explicitly supplied Gaussian matrix.
    pub fn from_matrix(g: GaborMatrix) -> Result<Self> {
        let config = *g.config();
        let nt = config.n_time;
        let nf = config.n_freq;
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(nt);
        let ifft = planner.plan_fft_inverse(nt);

        let mut raw = Vec::with_capacity(nt * nf * nf);
        for s in 0..nt {
            raw.extend_from_slice(g.block(s));
        }
        let hat = spectral_forward(&*fft, &raw, nt, nf, nf);

        let mut sigma_max = 0.0f64;
        let mut sigma_min = f64::INFINITY;
        let mut blocks = Vec::with_capacity(nt);
        for a in hat.chunks(nf * nf) {
            let dense = DMatrix::from_row_slice(nf, nf, a);
            let sv = dense.singular_values();
            sigma_max = sigma_max.max(sv.max());
            sigma_min = sigma_min.min(sv.min());
            let ah = adjoint(a, nf);
            let lu = Lu::factor(a, nf).map_err(|_| Error::IllConditioned {
                cond: f64::INFINITY,
                limit: COND_FAIL,
            })?;
            let lu_h = Lu::factor(&ah, nf).map_err(|_| Error::IllConditioned {
                cond: f64::INFINITY,
                limit: COND_FAIL,
            })?;
            blocks.push(SpectralBlock { a: a.to_vec(), ah, lu, lu_h });
        }
        let cond_estimate = if sigma_min > 0.0 { sigma_max / sigma_min } else { f64::INFINITY };
        if !(cond_estimate <= COND_FAIL) {
            return Err(Error::IllConditioned { cond: cond_estimate, limit: COND_FAIL });
        }
        let warning = (cond_estimate > COND_WARN).then(|| {
            let msg = format!(
                "Gaussian matrix for the {}×{} lattice has condition estimate {cond_estimate:.3e}",
                nt, nf
            );
            log::warn!("{msg}");
            msg
        });
        Ok(TransformPlan { config, g, blocks, fft, ifft, cond_estimate, warning })
    }

    pub fn config(&self) -> &LatticeConfig {
        &self.config
    }

    pub fn n(&self) -> usize {
        self.config.n_total
    }

    pub fn gabor(&self) -> &GaborMatrix {
        &self.g
    }

    /// 2-norm condition number of `G`, exact up to rounding (blockwise singular values).
    pub fn cond_estimate(&self) -> f64 {
        self.cond_estimate
    }

    pub fn warning(&self) -> Option<&str> {
        self.warning.as_deref()
    }

    fn apply_blocks(&self, data: &mut [C], m: usize, op: BlockOp) {
        let nt = self.config.n_time;
        let nf = self.config.n_freq;
        assert_eq!(data.len(), nt * nf * m, "batch length must be N·m");
        let mut spec = spectral_forward(&*self.fft, data, nt, nf, m);
        spec.par_chunks_mut(nf * m).zip(self.blocks.par_iter()).for_each(|(slab, blk)| match op {
            BlockOp::Mul | BlockOp::MulAdjoint => {
                let a = if matches!(op, BlockOp::Mul) { &blk.a } else { &blk.ah };
                let mut out = vec![C::new(0.0, 0.0); nf * m];
                matmul(a, slab, nf, nf, m, &mut out);
                slab.copy_from_slice(&out);
            }
            BlockOp::Solve => blk.lu.solve_rows(slab, m),
            BlockOp::SolveAdjoint => blk.lu_h.solve_rows(slab, m),
        });
        spectral_inverse(&*self.ifft, &spec, nt, nf, m, data);
    }

    /// Batched products and solves act on every column of a row-major `N × m` array.
    pub fn apply_g_batch(&self, data: &mut [C], m: usize) {
        self.apply_blocks(data, m, BlockOp::Mul);
    }

    pub fn apply_gh_batch(&self, data: &mut [C], m: usize) {
        self.apply_blocks(data, m, BlockOp::MulAdjoint);
    }

    pub fn solve_g_batch(&self, data: &mut [C], m: usize) {
        self.apply_blocks(data, m, BlockOp::Solve);
    }

    pub fn solve_gh_batch(&self, data: &mut [C], m: usize) {
        self.apply_blocks(data, m, BlockOp::SolveAdjoint);
    }

    /// `G v`
    pub fn apply_g(&self, v: &[C]) -> Vec<C> {
        let mut out = v.to_vec();
        self.apply_g_batch(&mut out, 1);
        out
    }

    /// `G† y`
    pub fn apply_gh(&self, y: &[C]) -> Vec<C> {
        let mut out = y.to_vec();
        self.apply_gh_batch(&mut out, 1);
        out
    }

    /// Solve `G v = y`.
    pub fn solve_g(&self, y: &[C]) -> Vec<C> {
        let mut out = y.to_vec();
        self.solve_g_batch(&mut out, 1);
        out
    }

    /// Solve `G† x = d`, i.e. `x = B d`.
    pub fn solve_gh(&self, d: &[C]) -> Vec<C> {
        let mut out = d.to_vec();
        self.solve_gh_batch(&mut out, 1);
        out
    }

    /// `S v = G†G v`
    pub fn apply_s(&self, v: &[C]) -> Vec<C> {
        self.apply_gh(&self.apply_g(v))
    }

    /// Solve `S v = w`.
    pub fn solve_s(&self, w: &[C]) -> Vec<C> {
        self.solve_g(&self.solve_gh(w))
    }

    /// Column `m` of the biorthogonal matrix `B`.
    pub fn biorthogonal_column(&self, m: usize) -> Result<Vec<C>> {
        check_index(m, self.n())?;
        let mut e = vec![C::new(0.0, 0.0); self.n()];
        e[m] = C::new(1.0, 0.0);
        Ok(self.solve_gh(&e))
    }

    /// Block-circulant form of `S` (`inverse = false`) or `S⁻¹` (`inverse = true`).
    pub fn overlap_operator(&self, inverse: bool) -> BlockCirculant {
        let nt = self.config.n_time;
        let nf = self.config.n_freq;
        let mut hat = Vec::with_capacity(nt * nf * nf);
        for blk in &self.blocks {
            if inverse {
                let mut slab = vec![C::new(0.0, 0.0); nf * nf];
                for i in 0..nf {
                    slab[i * nf + i] = C::new(1.0, 0.0);
                }
                blk.lu_h.solve_rows(&mut slab, nf);
                blk.lu.solve_rows(&mut slab, nf);
                hat.extend_from_slice(&slab);
            } else {
                let mut out = vec![C::new(0.0, 0.0); nf * nf];
                matmul(&blk.ah, &blk.a, nf, nf, nf, &mut out);
                hat.extend_from_slice(&out);
            }
        }
        let mut blocks = vec![C::new(0.0, 0.0); nt * nf * nf];
        spectral_inverse(&*self.ifft, &hat, nt, nf, nf, &mut blocks);
        BlockCirculant { n_time: nt, n_freq: nf, blocks }
    }
}

/// Hermitian block-circulant matrix with `n_freq × n_freq` blocks:
/// entry `(i, j)` depends on `(n_i − n_j) mod n_time` and the two frequency indices.
#[derive(Debug, Clone)]
pub struct BlockCirculant {
    n_time: usize,
    n_freq: usize,
    blocks: Vec<C>,
}

impl BlockCirculant {
    pub fn get(&self, i: usize, j: usize) -> C {
        let nf = self.n_freq;
        let s = (i / nf + self.n_time - j / nf) % self.n_time;
        self.blocks[(s * nf + i % nf) * nf + j % nf]
    }

    /// Dense principal submatrix on `idx`, row-major.
    pub fn submatrix(&self, idx: &[usize]) -> Vec<C> {
        let k = idx.len();
        let mut out = vec![C::new(0.0, 0.0); k * k];
        out.par_chunks_mut(k.max(1)).zip(idx.par_iter()).for_each(|(row, &i)| {
            for (o, &j) in row.iter_mut().zip(idx) {
                *o = self.get(i, j);
            }
        });
        out
    }
}

/// DFT over the block index of a `[b][i][col]` array (`nt × inner × m`),
/// returned in `[θ][i][col]` layout.
fn spectral_forward(fft: &dyn Fft<f64>, data: &[C], nt: usize, inner: usize, m: usize) -> Vec<C> {
    if nt == 1 {
        return data.to_vec();
    }
    let lanes = inner * m;
    let mut buf = vec![C::new(0.0, 0.0); nt * lanes];
    for b in 0..nt {
        for lane in 0..lanes {
            buf[lane * nt + b] = data[b * lanes + lane];
        }
    }
    fft.process(&mut buf);
    let mut out = vec![C::new(0.0, 0.0); nt * lanes];
    for lane in 0..lanes {
        for th in 0..nt {
            out[th * lanes + lane] = buf[lane * nt + th];
        }
    }
    out
}

fn spectral_inverse(ifft: &dyn Fft<f64>, spec: &[C], nt: usize, inner: usize, m: usize, out: &mut [C]) {
    if nt == 1 {
        out.copy_from_slice(spec);
        return;
    }
    let lanes = inner * m;
    let mut buf = vec![C::new(0.0, 0.0); nt * lanes];
    for th in 0..nt {
        for lane in 0..lanes {
            buf[lane * nt + th] = spec[th * lanes + lane];
        }
    }
    ifft.process(&mut buf);
    let scale = 1.0 / nt as f64;
    for lane in 0..lanes {
        for b in 0..nt {
            out[b * lanes + lane] = buf[lane * nt + b] * scale;
        }
    }
}

fn check_index(m: usize, n: usize) -> Result<()> {
    if m >= n {
        return Err(Error::invalid(format!("cell index {m} out of range for N = {n}")));
    }
    Ok(())
}

/// Dense coefficients indexed by lattice cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    pub mode: Mode,
    pub values: Vec<C>,
    pub config: LatticeConfig,
    /// Whether the analysed signal was real-valued.
    pub real_input: bool,
}

impl CoefficientSet {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn check(&self, plan: &TransformPlan, expected: Mode) -> Result<()> {
        if self.mode != expected {
            return Err(Error::Mode { expected: expected.as_str(), found: self.mode });
        }
        if self.values.len() != plan.n() {
            return Err(Error::shape(format!(
                "coefficient set has {} values, plan expects {}",
                self.values.len(),
                plan.n()
            )));
        }
        Ok(())
    }
}

fn check_signal(plan: &TransformPlan, x: &Signal1D) -> Result<()> {
    if x.len() != plan.n() {
        return Err(Error::invalid(format!(
            "signal has {} samples, lattice expects {}",
            x.len(),
            plan.n()
        )));
    }
    x.check_finite()
}

fn finish(values: Vec<C>, real_input: bool) -> Signal1D {
    let out = Signal1D::from_complex(values);
    if !real_input {
        return out;
    }
    let residual = out.imag_residual();
    match out.clone().into_real_checked(REAL_TOL) {
        Ok(real) => real,
        Err(_) => {
            log::warn!("real input reconstructed with imaginary residual {residual:.3e}");
            out
        }
    }
}

/// `d = G†x`: inner products with the localized pg functions.
pub fn forward_pgb(plan: &TransformPlan, x: &Signal1D) -> Result<CoefficientSet> {
    check_signal(plan, x)?;
    Ok(CoefficientSet {
        mode: Mode::Pgb,
        values: plan.apply_gh(&x.samples),
        config: plan.config,
        real_input: x.real,
    })
}

/// `x = B d`, computed as the solution of `G†x = d`.
pub fn inverse_pgb(plan: &TransformPlan, d: &CoefficientSet) -> Result<Signal1D> {
    d.check(plan, Mode::Pgb)?;
    Ok(finish(plan.solve_gh(&d.values), d.real_input))
}

/// `c = S⁻¹G†x`, computed as the solution of `G c = x`.
pub fn forward_pg(plan: &TransformPlan, x: &Signal1D) -> Result<CoefficientSet> {
    check_signal(plan, x)?;
    Ok(CoefficientSet {
        mode: Mode::Pg,
        values: plan.solve_g(&x.samples),
        config: plan.config,
        real_input: x.real,
    })
}

/// `x = G c`
pub fn inverse_pg(plan: &TransformPlan, c: &CoefficientSet) -> Result<Signal1D> {
    c.check(plan, Mode::Pg)?;
    Ok(finish(plan.apply_g(&c.values), c.real_input))
}

/// Dense `B = (G†)⁻¹`, one solve per column.
pub fn biorthogonal_matrix(plan: &TransformPlan) -> DMatrix<C> {
    let n = plan.n();
    let mut eye = vec![C::new(0.0, 0.0); n * n];
    for i in 0..n {
        eye[i * n + i] = C::new(1.0, 0.0);
    }
    plan.solve_gh_batch(&mut eye, n);
    DMatrix::from_row_slice(n, n, &eye)
}

/// Dense `S = G†G`.
pub fn overlap_matrix(plan: &TransformPlan) -> DMatrix<C> {
    let n = plan.n();
    let op = plan.overlap_operator(false);
    DMatrix::from_fn(n, n, |i, j| op.get(i, j))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::build_config;

    fn plan(nt: usize, nf: usize) -> TransformPlan {
        build_plan(&build_config(nt, nf).unwrap()).unwrap()
    }

    fn pseudo_random(n: usize, seed: u64) -> Vec<C> {
        let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        (0..n).map(|_| C::new(next(), next())).collect()
    }

    #[test]
    fn block_products_match_dense() {
        for (nt, nf) in [(1, 1), (1, 5), (4, 1), (3, 4), (4, 4), (5, 3)] {
            let p = plan(nt, nf);
            let g = p.gabor().to_dense();
            let v = pseudo_random(p.n(), 7);
            let dv = nalgebra::DVector::from_vec(v.clone());
            let want = &g * &dv;
            let got = p.apply_g(&v);
            for (a, b) in got.iter().zip(want.iter()) {
                assert!((a - b).norm() < 1e-12, "{nt}×{nf}");
            }
            let want_h = g.adjoint() * &dv;
            let got_h = p.apply_gh(&v);
            for (a, b) in got_h.iter().zip(want_h.iter()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn overlap_is_hermitian() {
        let p = plan(8, 8);
        let s = overlap_matrix(&p);
        let diff = (&s - s.adjoint()).camax();
        assert!(diff < 1e-12);
        let g = p.gabor().to_dense();
        let direct = g.adjoint() * &g;
        assert!((&s - direct).camax() < 1e-12);
    }

    #[test]
    fn single_cell_plan() {
        let p = plan(1, 1);
        let g0 = p.gabor().get(0, 0);
        let s = overlap_matrix(&p);
        assert!((s[(0, 0)].re - g0.norm_sqr()).abs() < 1e-14);
        let b = biorthogonal_matrix(&p);
        assert!((b[(0, 0)] - C::new(1.0, 0.0) / g0.conj()).norm() < 1e-14);
    }

    #[test]
    fn mode_and_length_checked() {
        let p = plan(2, 2);
        let x = Signal1D::from_complex(pseudo_random(4, 1));
        let d = forward_pgb(&p, &x).unwrap();
        assert!(matches!(inverse_pg(&p, &d), Err(Error::Mode { .. })));
        let short = Signal1D::from_complex(pseudo_random(3, 1));
        assert!(matches!(forward_pgb(&p, &short), Err(Error::InvalidArgument(_))));
        assert!(matches!(forward_pg(&p, &short), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn real_input_comes_back_real() {
        let p = plan(4, 4);
        let x = Signal1D::from_real(&(0..16).map(|k| (k as f64 * 0.4).sin()).collect::<Vec<_>>());
        let back = inverse_pgb(&p, &forward_pgb(&p, &x).unwrap()).unwrap();
        assert!(back.real);
        for (a, b) in back.samples.iter().zip(&x.samples) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_of_unit_coefficients() {
        let p = plan(4, 4);
        let b = biorthogonal_matrix(&p);
        for k in [0, 5, 15] {
            let mut e = vec![C::new(0.0, 0.0); 16];
            e[k] = C::new(1.0, 0.0);
            let set = CoefficientSet { mode: Mode::Pgb, values: e.clone(), config: *p.config(), real_input: false };
            let x = inverse_pgb(&p, &set).unwrap();
            for i in 0..16 {
                assert!((x.samples[i] - b[(i, k)]).norm() < 1e-12);
            }
            let set = CoefficientSet { mode: Mode::Pg, values: e, config: *p.config(), real_input: false };
            let x = inverse_pg(&p, &set).unwrap();
            for i in 0..16 {
                assert!((x.samples[i] - p.gabor().get(i, k)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn overlap_inverse_operator() {
        let p = plan(4, 3);
        let s = overlap_matrix(&p);
        let inv = p.overlap_operator(true);
        let n = p.n();
        let dense_inv = DMatrix::from_fn(n, n, |i, j| inv.get(i, j));
        let prod = &s * dense_inv;
        let eye = DMatrix::<C>::identity(n, n);
        assert!((prod - eye).camax() < 1e-11);
    }
}
