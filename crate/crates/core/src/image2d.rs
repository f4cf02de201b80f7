//! Separable 2-D transforms on grayscale images, global top-K compression
//! and conjugate-gradient refinement of the kept coefficients.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::compression::{
    compute_metrics, retained_energy, top_k_indices, ErrorMetrics, Layout, SparseCoefficients,
};
use crate::error::{Error, Mode, Result};
use crate::lattice::{build_config, LatticeConfig};
use crate::transform::{build_plan, TransformPlan};

type C = Complex64;

/// Per-axis lattice used for 512-sample image axes.
pub const DEFAULT_AXIS_LATTICE_512: (usize, usize) = (16, 32);
/// Imaginary residual tolerated when a full grid is synthesized to a real image.
pub const IMAG_TOL_2D: f64 = 1e-8;
pub const CG_TOL: f64 = 1e-6;
pub const CG_MAX_ITER: usize = 500;

/// Row-major grayscale image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn new(rows: usize, cols: usize, pixels: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid(format!("image must be at least 1×1, got {rows}×{cols}")));
        }
        if pixels.len() != rows * cols {
            return Err(Error::invalid(format!(
                "{} pixels do not fill a {rows}×{cols} image",
                pixels.len()
            )));
        }
        if pixels.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("image contains non-finite pixels"));
        }
        Ok(Image { rows, cols, pixels })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Image { rows, cols, pixels: vec![0.0; rows * cols] }
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.pixels[r * self.cols + c]
    }

    fn to_complex(&self) -> Vec<C> {
        self.pixels.iter().map(|&p| C::new(p, 0.0)).collect()
    }

    /// Pixels clamped to `[0, 255]` and rounded.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels.iter().map(|p| p.round().clamp(0.0, 255.0) as u8).collect()
    }
}

/// Dense 2-D coefficients, row-major `R × C`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientGrid2D {
    pub mode: Mode,
    pub values: Vec<C>,
    pub row_config: LatticeConfig,
    pub col_config: LatticeConfig,
}

impl CoefficientGrid2D {
    pub fn rows(&self) -> usize {
        self.row_config.n_total
    }

    pub fn cols(&self) -> usize {
        self.col_config.n_total
    }
}

/// Two 1-D plans: `rows` acts along the vertical axis (length `R`), `cols` along the horizontal one.
#[derive(Debug)]
pub struct Plan2D {
    pub rows: TransformPlan,
    pub cols: TransformPlan,
}

pub fn build_plan_2d(row_cfg: &LatticeConfig, col_cfg: &LatticeConfig) -> Result<Plan2D> {
    let rows = build_plan(row_cfg)?;
    let cols = if row_cfg == col_cfg { rows.clone() } else { build_plan(col_cfg)? };
    Ok(Plan2D { rows, cols })
}

/// A per-axis lattice for `n` samples: `(16, 32)` at 512, otherwise the
/// factorization `n_time × n_freq` with `n_freq` the divisor nearest `√(2n)`.
pub fn default_axis_lattice(n: usize) -> Result<(usize, usize)> {
    if n == 0 {
        return Err(Error::invalid("axis length must be positive"));
    }
    if n == 512 {
        return Ok(DEFAULT_AXIS_LATTICE_512);
    }
    let target = (2.0 * n as f64).sqrt();
    let nf = (1..=n)
        .filter(|d| n % d == 0)
        .min_by(|a, b| {
            let da = (*a as f64 - target).abs();
            let db = (*b as f64 - target).abs();
            da.partial_cmp(&db).unwrap().then(b.cmp(a))
        })
        .unwrap();
    Ok((n / nf, nf))
}

pub fn default_plan_2d(rows: usize, cols: usize) -> Result<Plan2D> {
    let (rt, rf) = default_axis_lattice(rows)?;
    let (ct, cf) = default_axis_lattice(cols)?;
    build_plan_2d(&build_config(rt, rf)?, &build_config(ct, cf)?)
}

#[derive(Clone, Copy)]
enum AxisOp {
    G,
    Gh,
    SolveG,
    SolveGh,
}

fn run(plan: &TransformPlan, op: AxisOp, data: &mut [C], m: usize) {
    match op {
        AxisOp::G => plan.apply_g_batch(data, m),
        AxisOp::Gh => plan.apply_gh_batch(data, m),
        AxisOp::SolveG => plan.solve_g_batch(data, m),
        AxisOp::SolveGh => plan.solve_gh_batch(data, m),
    }
}

fn transpose(data: &[C], rows: usize, cols: usize) -> Vec<C> {
    let mut out = vec![C::new(0.0, 0.0); data.len()];
    const TILE: usize = 32;
    for r0 in (0..rows).step_by(TILE) {
        for c0 in (0..cols).step_by(TILE) {
            for r in r0..(r0 + TILE).min(rows) {
                for c in c0..(c0 + TILE).min(cols) {
                    out[c * rows + r] = data[r * cols + c];
                }
            }
        }
    }
    out
}

impl Plan2D {
    pub fn shape(&self) -> (usize, usize) {
        (self.rows.n(), self.cols.n())
    }

    /// Apply `op` to every column with the row plan, then to every row with the column plan.
    fn separable(&self, op: AxisOp, data: &mut Vec<C>) {
        let (r, c) = self.shape();
        run(&self.rows, op, data, c);
        let mut t = transpose(data, r, c);
        run(&self.cols, op, &mut t, r);
        *data = transpose(&t, c, r);
    }

    fn check_shape(&self, rows: usize, cols: usize) -> Result<()> {
        if (rows, cols) != self.shape() {
            let (r, c) = self.shape();
            return Err(Error::invalid(format!(
                "image is {rows}×{cols}, plan expects {r}×{c}"
            )));
        }
        Ok(())
    }

    /// Synthesis operator of `mode` applied to a full grid.
    fn synthesize(&self, mode: Mode, mut values: Vec<C>) -> Result<Vec<C>> {
        let op = match mode {
            Mode::Pgb => AxisOp::SolveGh,
            Mode::Pg => AxisOp::G,
            Mode::Dft => return Err(Error::Mode { expected: "pg or pgb", found: mode }),
        };
        self.separable(op, &mut values);
        Ok(values)
    }

    /// Adjoint of the synthesis operator of `mode`: pgb synthesis `B⊗B` has
    /// adjoint `G⁻¹⊗G⁻¹`, pg synthesis `G⊗G` has adjoint `G†⊗G†`.
    fn synthesis_adjoint(&self, mode: Mode, mut image: Vec<C>) -> Vec<C> {
        let op = if mode == Mode::Pgb { AxisOp::SolveG } else { AxisOp::Gh };
        self.separable(op, &mut image);
        image
    }
}

/// `D = G_r† X conj(G_c)` (pgb) or `G_r⁻¹ X G_c⁻ᵀ` (pg).
pub fn forward_2d(plan: &Plan2D, mode: Mode, img: &Image) -> Result<CoefficientGrid2D> {
    plan.check_shape(img.rows, img.cols)?;
    let op = match mode {
        Mode::Pgb => AxisOp::Gh,
        Mode::Pg => AxisOp::SolveG,
        Mode::Dft => return Err(Error::Mode { expected: "pg or pgb", found: mode }),
    };
    let mut values = img.to_complex();
    plan.separable(op, &mut values);
    Ok(CoefficientGrid2D {
        mode,
        values,
        row_config: *plan.rows.config(),
        col_config: *plan.cols.config(),
    })
}

fn real_image(rows: usize, cols: usize, values: &[C]) -> Image {
    Image { rows, cols, pixels: values.iter().map(|v| v.re).collect() }
}

fn imag_ratio(values: &[C]) -> f64 {
    let total: f64 = values.iter().map(|v| v.norm_sqr()).sum();
    if total == 0.0 {
        return 0.0;
    }
    (values.iter().map(|v| v.im * v.im).sum::<f64>() / total).sqrt()
}

/// Exact inverse of [`forward_2d`]; fails if the synthesized image is not real.
pub fn inverse_2d(plan: &Plan2D, grid: &CoefficientGrid2D) -> Result<Image> {
    plan.check_shape(grid.rows(), grid.cols())?;
    if grid.values.len() != grid.rows() * grid.cols() {
        return Err(Error::shape("coefficient grid length does not match its configs"));
    }
    let values = plan.synthesize(grid.mode, grid.values.clone())?;
    let residual = imag_ratio(&values);
    if residual > IMAG_TOL_2D {
        return Err(Error::invalid(format!(
            "synthesized image has imaginary residual {residual:.3e}"
        )));
    }
    Ok(real_image(grid.rows(), grid.cols(), &values))
}

/// Zero-filled synthesis of a sparse 2-D set. The image is the real part.
pub fn reconstruct_sparse_2d(plan: &Plan2D, sparse: &SparseCoefficients) -> Result<Image> {
    let (r, c) = plan.shape();
    match (sparse.mode, sparse.layout) {
        (Mode::Dft, Layout::Dft2 { .. }) => reconstruct_dft_2d(sparse),
        (_, Layout::Lattice2 { rows, cols }) if rows.n_total == r && cols.n_total == c => {
            sparse.validate()?;
            let values = plan.synthesize(sparse.mode, sparse.to_dense())?;
            log::debug!("sparse 2-D synthesis imaginary residual {:.3e}", imag_ratio(&values));
            Ok(real_image(r, c, &values))
        }
        (_, layout) => Err(Error::shape(format!(
            "sparse layout {layout:?} does not match a {r}×{c} plan"
        ))),
    }
}

/// Synthesis of a 2-D DFT sparse set.
pub fn reconstruct_dft_2d(sparse: &SparseCoefficients) -> Result<Image> {
    let Layout::Dft2 { rows, cols } = sparse.layout else {
        return Err(Error::shape(format!("expected a 2-D DFT layout, found {:?}", sparse.layout)));
    };
    sparse.validate()?;
    Ok(real_image(rows, cols, &unitary_dft_2d(&sparse.to_dense(), rows, cols, true)))
}

/// Outcome of a compression run.
#[derive(Debug, Clone)]
pub struct Compressed2D {
    pub sparse: SparseCoefficients,
    pub reconstruction: Image,
    pub metrics: ErrorMetrics,
    /// Fraction of coefficient energy in the kept set, before refinement.
    pub retained_energy: f64,
    /// CG iterations spent on refinement, zero when not refined.
    pub iterations: usize,
}

pub fn image_metrics(reference: &Image, recon: &Image) -> Result<ErrorMetrics> {
    if (reference.rows, reference.cols) != (recon.rows, recon.cols) {
        return Err(Error::invalid("image shapes differ"));
    }
    compute_metrics(&reference.to_complex(), &recon.to_complex())
}

/// Keep the `k` largest coefficients of the full grid, optionally refine them, and reconstruct.
pub fn compress_2d(plan: &Plan2D, mode: Mode, img: &Image, k: usize, porat: bool) -> Result<Compressed2D> {
    compress_2d_with_tol(plan, mode, img, k, porat, CG_TOL)
}

/// [`compress_2d`] with an explicit refinement tolerance.
pub fn compress_2d_with_tol(
    plan: &Plan2D,
    mode: Mode,
    img: &Image,
    k: usize,
    porat: bool,
    tol: f64,
) -> Result<Compressed2D> {
    let grid = forward_2d(plan, mode, img)?;
    if k > grid.values.len() {
        return Err(Error::invalid(format!("k = {k} exceeds N = {}", grid.values.len())));
    }
    let idx = top_k_indices(&grid.values, k)?;
    let mut sparse = SparseCoefficients {
        mode,
        layout: Layout::Lattice2 { rows: grid.row_config, cols: grid.col_config },
        entries: idx.iter().map(|&i| (i, grid.values[i])).collect(),
        porat: false,
    };
    let retained_energy = retained_energy(&grid.values, &sparse);
    let mut iterations = 0;
    if porat && k > 0 {
        let out = porat_2d(plan, &sparse, img, tol, CG_MAX_ITER)?;
        iterations = out.iterations;
        sparse = out.sparse;
    }
    let reconstruction = reconstruct_sparse_2d(plan, &sparse)?;
    let metrics = image_metrics(img, &reconstruction)?;
    Ok(Compressed2D { sparse, reconstruction, metrics, retained_energy, iterations })
}

#[derive(Debug, Clone)]
pub struct PoratOutcome {
    pub sparse: SparseCoefficients,
    pub iterations: usize,
    /// Final relative residual of the normal equations.
    pub residual: f64,
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C]) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Least-squares refit of the kept coefficients by CG on the normal
/// equations `M'†M' d = M'†x`, starting from the current values.
pub fn porat_2d(
    plan: &Plan2D,
    sparse: &SparseCoefficients,
    img: &Image,
    tol: f64,
    max_iter: usize,
) -> Result<PoratOutcome> {
    plan.check_shape(img.rows, img.cols)?;
    match sparse.layout {
        Layout::Lattice2 { rows, cols } if (rows.n_total, cols.n_total) == plan.shape() => {}
        other => return Err(Error::shape(format!("sparse layout {other:?} does not match the plan"))),
    }
    sparse.validate()?;
    if sparse.is_empty() {
        return Err(Error::invalid("refinement needs a nonempty kept set"));
    }
    let mode = sparse.mode;
    let n = img.rows * img.cols;
    let idx = sparse.indices();

    let apply = |d: &[C]| -> Result<Vec<C>> {
        let mut full = vec![C::new(0.0, 0.0); n];
        for (&i, &v) in idx.iter().zip(d) {
            full[i] = v;
        }
        plan.synthesize(mode, full)
    };
    let adjoint = |y: Vec<C>| -> Vec<C> {
        let full = plan.synthesis_adjoint(mode, y);
        idx.iter().map(|&i| full[i]).collect()
    };
    let normal = |d: &[C]| -> Result<Vec<C>> { Ok(adjoint(apply(d)?)) };

    let x = img.to_complex();
    let rhs = adjoint(x);
    let rhs_norm = norm(&rhs);
    let mut d: Vec<C> = sparse.entries.iter().map(|e| e.1).collect();
    let finish = |d: Vec<C>, iterations: usize, residual: f64| PoratOutcome {
        sparse: SparseCoefficients {
            mode,
            layout: sparse.layout,
            entries: idx.iter().copied().zip(d).collect(),
            porat: true,
        },
        iterations,
        residual,
    };
    if rhs_norm == 0.0 {
        return Ok(finish(vec![C::new(0.0, 0.0); idx.len()], 0, 0.0));
    }
    let nd = normal(&d)?;
    let mut r: Vec<C> = rhs.iter().zip(&nd).map(|(a, b)| a - b).collect();
    let mut rr = dot(&r, &r).re;
    let mut rel = rr.sqrt() / rhs_norm;
    if rel < tol {
        return Ok(finish(d, 0, rel));
    }
    let mut p = r.clone();
    for it in 1..=max_iter {
        let q = normal(&p)?;
        let pq = dot(&p, &q).re;
        if pq <= 0.0 {
            break;
        }
        let step = rr / pq;
        for ((di, ri), (pi, qi)) in d.iter_mut().zip(r.iter_mut()).zip(p.iter().zip(&q)) {
            *di += step * pi;
            *ri -= step * qi;
        }
        let rr_new = dot(&r, &r).re;
        rel = rr_new.sqrt() / rhs_norm;
        if rel < tol {
            log::debug!("refinement converged after {it} iterations, residual {rel:.3e}");
            return Ok(finish(d, it, rel));
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, residual: rel })
}

/// Unitary 2-D DFT of a row-major `rows × cols` array.
pub fn unitary_dft_2d(data: &[C], rows: usize, cols: usize, inverse: bool) -> Vec<C> {
    let mut planner = FftPlanner::new();
    let plan_for = |planner: &mut FftPlanner<f64>, n: usize| {
        if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) }
    };
    let mut buf = data.to_vec();
    plan_for(&mut planner, cols).process(&mut buf);
    let mut t = transpose(&buf, rows, cols);
    plan_for(&mut planner, rows).process(&mut t);
    let mut out = transpose(&t, cols, rows);
    let scale = 1.0 / ((rows * cols) as f64).sqrt();
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// Keep the `k` largest bins of the unitary 2-D DFT.
pub fn dft_topk_2d(img: &Image, k: usize) -> Result<Compressed2D> {
    let spec = unitary_dft_2d(&img.to_complex(), img.rows, img.cols, false);
    let idx = top_k_indices(&spec, k)?;
    let sparse = SparseCoefficients {
        mode: Mode::Dft,
        layout: Layout::Dft2 { rows: img.rows, cols: img.cols },
        entries: idx.iter().map(|&i| (i, spec[i])).collect(),
        porat: false,
    };
    let reconstruction = reconstruct_dft_2d(&sparse)?;
    let metrics = image_metrics(img, &reconstruction)?;
    let retained_energy = retained_energy(&spec, &sparse);
    Ok(Compressed2D { sparse, reconstruction, metrics, retained_energy, iterations: 0 })
}
