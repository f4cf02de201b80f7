//! Top-K selection, sparse synthesis, least-squares refinement of the kept
//! coefficients, the DFT baseline and error metrics.

use std::cmp::Ordering;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Mode, Result};
use crate::lattice::{plain_gaussian, LatticeConfig};
use crate::linalg::{cond1_estimate_hermitian, Cholesky};
use crate::signal::{l2, Signal1D};
use crate::transform::{forward_pg, forward_pgb, CoefficientSet, TransformPlan, COND_FAIL};

type C = Complex64;

/// Peak value used for PSNR of 8-bit data.
pub const PEAK_8BIT: f64 = 255.0;

/// Index geometry a sparse coefficient list refers to.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Layout {
    Lattice1(LatticeConfig),
    /// Row-major grid; `rows` is the lattice of the vertical axis.
    Lattice2 { rows: LatticeConfig, cols: LatticeConfig },
    Dft1 { n: usize },
    Dft2 { rows: usize, cols: usize },
}

impl Layout {
    pub fn n_total(&self) -> usize {
        match self {
            Layout::Lattice1(c) => c.n_total,
            Layout::Lattice2 { rows, cols } => rows.n_total * cols.n_total,
            Layout::Dft1 { n } => *n,
            Layout::Dft2 { rows, cols } => rows * cols,
        }
    }

    pub fn dims(&self) -> usize {
        match self {
            Layout::Lattice1(_) | Layout::Dft1 { .. } => 1,
            Layout::Lattice2 { .. } | Layout::Dft2 { .. } => 2,
        }
    }
}

/// The kept coefficients of a compressed signal, sorted by linear index.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCoefficients {
    pub mode: Mode,
    pub layout: Layout,
    pub entries: Vec<(usize, C)>,
    /// Whether the values were refined by least squares.
    pub porat: bool,
}

impl SparseCoefficients {
    pub fn n_total(&self) -> usize {
        self.layout.n_total()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn indices(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.0).collect()
    }

    /// Zero-filled dense vector.
    pub fn to_dense(&self) -> Vec<C> {
        let mut out = vec![C::new(0.0, 0.0); self.n_total()];
        for &(i, v) in &self.entries {
            out[i] = v;
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_total();
        if self.entries.len() > n {
            return Err(Error::invalid(format!("{} entries exceed N = {n}", self.entries.len())));
        }
        let dft_layout = matches!(self.layout, Layout::Dft1 { .. } | Layout::Dft2 { .. });
        if dft_layout != (self.mode == Mode::Dft) {
            return Err(Error::invalid(format!("mode {} does not match the index layout", self.mode)));
        }
        let mut prev: Option<usize> = None;
        for &(i, _) in &self.entries {
            if i >= n {
                return Err(Error::invalid(format!("index {i} out of range for N = {n}")));
            }
            if let Some(p) = prev {
                if i <= p {
                    return Err(Error::invalid(format!("index {i} is not strictly increasing")));
                }
            }
            prev = Some(i);
        }
        Ok(())
    }
}

/// Indices of the `k` largest magnitudes, ties resolved toward the lower
/// index, returned in increasing order.
pub fn top_k_indices(values: &[C], k: usize) -> Result<Vec<usize>> {
    if k > values.len() {
        return Err(Error::invalid(format!("k = {k} exceeds N = {}", values.len())));
    }
    let mags: Vec<f64> = values.iter().map(|v| v.norm()).collect();
    let rank = |a: &usize, b: &usize| -> Ordering {
        mags[*b].partial_cmp(&mags[*a]).unwrap_or(Ordering::Equal).then(a.cmp(b))
    };
    let mut idx: Vec<usize> = (0..values.len()).collect();
    if k < idx.len() && k > 0 {
        idx.select_nth_unstable_by(k - 1, rank);
    }
    idx.truncate(k);
    idx.sort_unstable();
    Ok(idx)
}

fn gather(values: &[C], idx: &[usize]) -> Vec<(usize, C)> {
    idx.iter().map(|&i| (i, values[i])).collect()
}

pub fn top_k(coeffs: &CoefficientSet, k: usize) -> Result<SparseCoefficients> {
    let idx = top_k_indices(&coeffs.values, k)?;
    Ok(SparseCoefficients {
        mode: coeffs.mode,
        layout: Layout::Lattice1(coeffs.config),
        entries: gather(&coeffs.values, &idx),
        porat: false,
    })
}

fn check_lattice_1d(plan: &TransformPlan, sparse: &SparseCoefficients) -> Result<()> {
    match sparse.mode {
        Mode::Pgb | Mode::Pg => {}
        Mode::Dft => return Err(Error::Mode { expected: "pg or pgb", found: Mode::Dft }),
    }
    match sparse.layout {
        Layout::Lattice1(c) if c.n_total == plan.n() => {}
        other => {
            return Err(Error::shape(format!(
                "sparse layout {other:?} does not match a 1-D lattice of N = {}",
                plan.n()
            )))
        }
    }
    sparse.validate()
}

/// Zero-filled synthesis from the kept coefficients: `Σ B[:,n]·d_n` (pgb) or `Σ G[:,n]·c_n` (pg).
pub fn reconstruct_sparse(plan: &TransformPlan, sparse: &SparseCoefficients) -> Result<Signal1D> {
    check_lattice_1d(plan, sparse)?;
    let dense = sparse.to_dense();
    let samples = match sparse.mode {
        Mode::Pgb => plan.solve_gh(&dense),
        _ => plan.apply_g(&dense),
    };
    Ok(Signal1D::from_complex(samples))
}

/// Recompute the kept values as the least-squares fit of `x` in the span of
/// the kept synthesis vectors.
///
/// The normal matrix is the principal submatrix of `S⁻¹` (pgb, since
/// `B†B = S⁻¹`) or `S` (pg), and the right-hand side is `(G⁻¹x)` or `(G†x)`
/// restricted to the kept set.
pub fn porat_correct(
    plan: &TransformPlan,
    sparse: &SparseCoefficients,
    x: &Signal1D,
) -> Result<SparseCoefficients> {
    check_lattice_1d(plan, sparse)?;
    if x.len() != plan.n() {
        return Err(Error::invalid(format!(
            "signal has {} samples, lattice expects {}",
            x.len(),
            plan.n()
        )));
    }
    let idx = sparse.indices();
    let k = idx.len();
    let (normal, rhs_full) = match sparse.mode {
        Mode::Pgb => (plan.overlap_operator(true), plan.solve_g(&x.samples)),
        _ => (plan.overlap_operator(false), plan.apply_gh(&x.samples)),
    };
    let mut values: Vec<C> = idx.iter().map(|&i| rhs_full[i]).collect();
    if k > 0 {
        let a = normal.submatrix(&idx);
        let chol = Cholesky::factor(&a, k)
            .map_err(|_| Error::IllConditioned { cond: f64::INFINITY, limit: COND_FAIL })?;
        let cond = cond1_estimate_hermitian(&a, k, |v| chol.solve(v));
        if !(cond <= COND_FAIL) {
            return Err(Error::IllConditioned { cond, limit: COND_FAIL });
        }
        chol.solve(&mut values);
    }
    Ok(SparseCoefficients {
        mode: sparse.mode,
        layout: sparse.layout,
        entries: idx.into_iter().zip(values).collect(),
        porat: true,
    })
}

/// Unitary DFT, `X_q = N^{-1/2} Σ_k x_k e^{−2πi qk/N}`.
pub fn unitary_dft(x: &[C], inverse: bool) -> Vec<C> {
    let n = x.len();
    let mut buf = x.to_vec();
    if n == 0 {
        return buf;
    }
    let mut planner = FftPlanner::new();
    let fft = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
    fft.process(&mut buf);
    let scale = 1.0 / (n as f64).sqrt();
    buf.iter_mut().for_each(|v| *v *= scale);
    buf
}

/// Keep the `k` largest unitary DFT bins (each complex bin counts once) and invert.
pub fn dft_topk(x: &Signal1D, k: usize) -> Result<(SparseCoefficients, Signal1D)> {
    if x.is_empty() {
        return Err(Error::invalid("empty signal"));
    }
    let spec = unitary_dft(&x.samples, false);
    let idx = top_k_indices(&spec, k)?;
    let sparse = SparseCoefficients {
        mode: Mode::Dft,
        layout: Layout::Dft1 { n: x.len() },
        entries: gather(&spec, &idx),
        porat: false,
    };
    let recon = Signal1D::from_complex(unitary_dft(&sparse.to_dense(), true));
    Ok((sparse, recon))
}

/// Synthesis of a 1-D DFT sparse set.
pub fn reconstruct_dft(sparse: &SparseCoefficients) -> Result<Signal1D> {
    match sparse.layout {
        Layout::Dft1 { .. } => {}
        other => return Err(Error::shape(format!("expected a 1-D DFT layout, found {other:?}"))),
    }
    sparse.validate()?;
    Ok(Signal1D::from_complex(unitary_dft(&sparse.to_dense(), true)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    pub l2_error: f64,
    pub mse: f64,
    /// dB; `+∞` for an exact reconstruction.
    pub psnr: f64,
}

pub fn compute_metrics_with_peak(x: &[C], xhat: &[C], peak: f64) -> Result<ErrorMetrics> {
    if x.len() != xhat.len() {
        return Err(Error::invalid(format!(
            "reference has {} samples, reconstruction has {}",
            x.len(),
            xhat.len()
        )));
    }
    if x.is_empty() {
        return Err(Error::invalid("empty signals"));
    }
    let sq: f64 = x.iter().zip(xhat).map(|(a, b)| (a - b).norm_sqr()).sum();
    let mse = sq / x.len() as f64;
    let psnr = if mse == 0.0 { f64::INFINITY } else { 10.0 * (peak * peak / mse).log10() };
    Ok(ErrorMetrics { l2_error: sq.sqrt(), mse, psnr })
}

pub fn compute_metrics(x: &[C], xhat: &[C]) -> Result<ErrorMetrics> {
    compute_metrics_with_peak(x, xhat, PEAK_8BIT)
}

/// Fraction of coefficient energy carried by the kept entries.
pub fn retained_energy(full: &[C], sparse: &SparseCoefficients) -> f64 {
    let total: f64 = full.iter().map(|v| v.norm_sqr()).sum();
    if total == 0.0 {
        return 1.0;
    }
    sparse.entries.iter().map(|(i, _)| full[*i].norm_sqr()).sum::<f64>() / total
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub k: usize,
    pub mode: Mode,
    pub porat: bool,
    pub metrics: ErrorMetrics,
}

/// Reconstruction error against the number of kept coefficients.
///
/// Rows follow `k_list`, then `modes`, then uncorrected before corrected.
/// The DFT rows never carry a correction since its basis is orthonormal.
pub fn error_vs_k_sweep(
    plan: &TransformPlan,
    x: &Signal1D,
    k_list: &[usize],
    modes: &[Mode],
    porat: bool,
) -> Result<Vec<SweepRow>> {
    if let Some(&bad) = k_list.iter().find(|&&k| k > x.len()) {
        return Err(Error::invalid(format!("k = {bad} exceeds N = {}", x.len())));
    }
    let pgb = modes.contains(&Mode::Pgb).then(|| forward_pgb(plan, x)).transpose()?;
    let pg = modes.contains(&Mode::Pg).then(|| forward_pg(plan, x)).transpose()?;
    let mut rows = Vec::new();
    for &k in k_list {
        for &mode in modes {
            let coeffs = match mode {
                Mode::Pgb => pgb.as_ref(),
                Mode::Pg => pg.as_ref(),
                Mode::Dft => None,
            };
            match coeffs {
                Some(set) => {
                    let sparse = top_k(set, k)?;
                    let recon = reconstruct_sparse(plan, &sparse)?;
                    let metrics = compute_metrics(&x.samples, &recon.samples)?;
                    rows.push(SweepRow { k, mode, porat: false, metrics });
                    if porat {
                        let refined = porat_correct(plan, &sparse, x)?;
                        let recon = reconstruct_sparse(plan, &refined)?;
                        let metrics = compute_metrics(&x.samples, &recon.samples)?;
                        rows.push(SweepRow { k, mode, porat: true, metrics });
                    }
                }
                None => {
                    let (_, recon) = dft_topk(x, k)?;
                    let metrics = compute_metrics(&x.samples, &recon.samples)?;
                    rows.push(SweepRow { k, mode, porat: false, metrics });
                }
            }
        }
    }
    Ok(rows)
}

pub const SWEEP_HEADER: &str = "k,mode,porat,l2_error,mse,psnr";

/// Nine significant digits in scientific notation.
pub fn fmt_sig9(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.8e}")
    }
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.k,
            r.mode,
            u8::from(r.porat),
            fmt_sig9(r.metrics.l2_error),
            fmt_sig9(r.metrics.mse),
            fmt_sig9(r.metrics.psnr)
        )?;
    }
    Ok(())
}

/// Least-squares fit of `target` (sampled at `ts` with quadrature weight
/// `weight`) by the `N` plain, non-periodic Gaussians of the lattice.
///
/// The coefficients are the inner products with the basis biorthogonal to
/// the plain Gaussians under the same quadrature, `S⁻¹⟨g, s⟩`. Returns the
/// coefficients and the fitted values at `ts`.
pub fn standard_gabor_fit(
    config: &LatticeConfig,
    ts: &[f64],
    target: &[C],
    weight: f64,
) -> Result<(Vec<C>, Vec<C>)> {
    if ts.len() != target.len() {
        return Err(Error::invalid("sample times and target lengths differ"));
    }
    let n = config.n_total;
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let cell = config.cell_of(j)?;
        let col: Vec<C> = ts.iter().map(|&t| plain_gaussian(config, cell, t)).collect::<Result<_>>()?;
        cols.push(col);
    }
    let mut gram = vec![C::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in i..n {
            let v: C = cols[i].iter().zip(&cols[j]).map(|(a, b)| a.conj() * b).sum::<C>() * weight;
            gram[i * n + j] = v;
            gram[j * n + i] = v.conj();
        }
    }
    let mut coef: Vec<C> = cols
        .iter()
        .map(|c| c.iter().zip(target).map(|(a, b)| a.conj() * b).sum::<C>() * weight)
        .collect();
    let chol = Cholesky::factor(&gram, n)
        .map_err(|_| Error::IllConditioned { cond: f64::INFINITY, limit: COND_FAIL })?;
    chol.solve(&mut coef);
    let fit: Vec<C> = (0..ts.len())
        .map(|t| cols.iter().zip(&coef).map(|(c, a)| c[t] * a).sum())
        .collect();
    Ok((coef, fit))
}

/// Relative L2 distance, `‖a − b‖ / ‖b‖`.
pub fn relative_error(a: &[C], b: &[C]) -> f64 {
    let diff: Vec<C> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let nb = l2(b);
    if nb == 0.0 { l2(&diff) } else { l2(&diff) / nb }
}
