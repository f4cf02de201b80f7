//! Built-in checks: dense oracles at small sizes plus the regressions that
//! need no external files. Output is a deterministic `check,status,detail` table.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pgb::compression::{dft_topk, porat_correct, reconstruct_sparse, standard_gabor_fit, top_k, error_vs_k_sweep};
use pgb::kernel::{oversampled_grid, pg_eval, synthesize_at};
use pgb::lattice::gaussian_sample;
use pgb::signalio::{chirp_value, default_chirp, default_pulse, synthetic_splat, DEFAULT_CHIRP};
use pgb::transform::{biorthogonal_matrix, forward_pg, forward_pgb, inverse_pg, inverse_pgb};
use pgb::{build_config, build_gabor_matrix, build_plan, Complex64, LatticeConfig, Mode, Result, Signal1D, TransformPlan};

type C = Complex64;

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

/// `G` straight from the sampled Gaussian formula, bypassing the plan.
fn reference_g(cfg: &LatticeConfig) -> DMatrix<C> {
    let n = cfg.n_total;
    DMatrix::from_fn(n, n, |k, j| gaussian_sample(cfg, cfg.cell_of(j).unwrap(), k).unwrap())
}

fn max_dev_from_identity(m: &DMatrix<C>) -> f64 {
    let mut worst: f64 = 0.0;
    for ((r, c), v) in m.iter().enumerate().map(|(i, v)| ((i % m.nrows(), i / m.nrows()), v)) {
        let want = if r == c { 1.0 } else { 0.0 };
        worst = worst.max((v - C::new(want, 0.0)).norm());
    }
    worst
}

fn rel(a: &[C], b: &[C]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let n: f64 = b.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
    if n == 0.0 { d } else { d / n }
}

fn random_signal(rng: &mut ChaCha8Rng, n: usize) -> Signal1D {
    Signal1D::from_complex((0..n).map(|_| C::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
}

fn biorthogonality(corrupt: bool) -> Result<Check> {
    let cfg = build_config(8, 8)?;
    let mut g = build_gabor_matrix(&cfg);
    if corrupt {
        g.perturb(0, 3, 5, C::new(1e-3, 0.0));
    }
    let plan = TransformPlan::from_matrix(g)?;
    let b = biorthogonal_matrix(&plan);
    let g_ref = reference_g(&cfg);
    let e1 = max_dev_from_identity(&(b.adjoint() * &g_ref));
    let e2 = max_dev_from_identity(&(&g_ref * b.adjoint()));
    let worst = e1.max(e2);
    Ok(Check { name: "biorthogonality_8x8", pass: worst < 1e-10, detail: format!("max_dev={worst:.2e}") })
}

fn round_trip() -> Result<Check> {
    let plan = build_plan(&build_config(8, 8)?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let x = random_signal(&mut rng, 64);
        let a = inverse_pgb(&plan, &forward_pgb(&plan, &x)?)?;
        let b = inverse_pg(&plan, &forward_pg(&plan, &x)?)?;
        worst = worst.max(rel(&a.samples, &x.samples)).max(rel(&b.samples, &x.samples));
    }
    Ok(Check { name: "round_trip_100", pass: worst < 1e-10, detail: format!("max_rel={worst:.2e}") })
}

fn dense_oracle() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    for nt in 1..=16 {
        for nf in 1..=16 / nt {
            let cfg = build_config(nt, nf)?;
            let plan = build_plan(&cfg)?;
            let g = reference_g(&cfg);
            let g_inv = g.clone().try_inverse().expect("oracle inversion failed");
            let gh_inv = g.adjoint().try_inverse().expect("oracle inversion failed");
            let x = random_signal(&mut rng, cfg.n_total);
            let xv = DMatrix::from_column_slice(cfg.n_total, 1, &x.samples);
            let c = forward_pg(&plan, &x)?;
            let d = forward_pgb(&plan, &x)?;
            worst = worst
                .max(rel(&c.values, (&g_inv * &xv).as_slice()))
                .max(rel(&d.values, (g.adjoint() * &xv).as_slice()))
                .max(rel(&inverse_pgb(&plan, &d)?.samples, (&gh_inv * DMatrix::from_column_slice(cfg.n_total, 1, &d.values)).as_slice()))
                .max(rel(&inverse_pg(&plan, &c)?.samples, (&g * DMatrix::from_column_slice(cfg.n_total, 1, &c.values)).as_slice()));
        }
    }
    Ok(Check { name: "dense_oracle_n16", pass: worst < 1e-10, detail: format!("max_rel={worst:.2e}") })
}

fn porat_oracle() -> Result<Check> {
    let cfg = build_config(8, 8)?;
    let plan = build_plan(&cfg)?;
    let g = reference_g(&cfg);
    let b = g.adjoint().try_inverse().expect("oracle inversion failed");
    let x = default_pulse();
    let xv = DMatrix::from_column_slice(64, 1, &x.samples);
    let mut worst: f64 = 0.0;
    for mode in [Mode::Pgb, Mode::Pg] {
        let set = if mode == Mode::Pgb { forward_pgb(&plan, &x)? } else { forward_pg(&plan, &x)? };
        let sparse = top_k(&set, 25)?;
        let fixed = porat_correct(&plan, &sparse, &x)?;
        let basis = if mode == Mode::Pgb { &b } else { &g };
        let idx = sparse.indices();
        let m = DMatrix::from_fn(64, idx.len(), |r, c| basis[(r, idx[c])]);
        let want = m.clone().svd(true, true).solve(&xv, 1e-14).expect("oracle solve failed");
        let got: Vec<C> = fixed.entries.iter().map(|e| e.1).collect();
        worst = worst.max(rel(&got, want.as_slice()));
    }
    Ok(Check { name: "porat_dense_ls", pass: worst < 1e-8, detail: format!("max_rel={worst:.2e}") })
}

fn dirichlet_samples() -> Result<Check> {
    let plan = build_plan(&build_config(8, 8)?)?;
    let mut worst: f64 = 0.0;
    for m in [0, 9, 36, 63] {
        for k in 0..64 {
            worst = worst.max((pg_eval(&plan, m, k as f64)? - plan.gabor().get(k, m)).norm());
        }
    }
    Ok(Check { name: "dirichlet_on_samples", pass: worst < 1e-12, detail: format!("max_dev={worst:.2e}") })
}

/// Continuous errors of the pg reconstruction and of the plain-Gaussian least-squares
/// fit of the reference chirp, on an 8× grid with quadrature weight 1/8.
pub fn chirp_errors() -> Result<(f64, f64)> {
    let cfg = build_config(8, 8)?;
    let plan = build_plan(&cfg)?;
    let x = default_chirp();
    let (alpha, t0, w0) = DEFAULT_CHIRP;
    let ts = oversampled_grid(64, 8);
    let target: Vec<C> = ts.iter().map(|&t| chirp_value(alpha, t0, w0, t)).collect();
    let w = 1.0 / 8.0;
    let err = |y: &[C]| (y.iter().zip(&target).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>() * w).sqrt();
    let pg = synthesize_at(&plan, &forward_pg(&plan, &x)?, &ts)?;
    let (_, fit) = standard_gabor_fit(&cfg, &ts, &target, w)?;
    Ok((err(&pg), err(&fit)))
}

fn chirp_ordering() -> Result<Check> {
    let (pg, std) = chirp_errors()?;
    Ok(Check {
        name: "chirp_pg_vs_standard",
        pass: pg < std / 10.0,
        detail: format!("pg={pg:.3e} standard={std:.3e}"),
    })
}

fn pulse() -> Result<Check> {
    let plan = build_plan(&build_config(8, 8)?)?;
    let x = default_pulse();
    let err = |set| -> Result<f64> {
        let y = reconstruct_sparse(&plan, &top_k(&set, 25)?)?;
        Ok(rel(&y.samples, &x.samples) * x.norm())
    };
    let b = err(forward_pgb(&plan, &x)?)?;
    let g = err(forward_pg(&plan, &x)?)?;
    Ok(Check {
        name: "pulse_k25",
        pass: b < 0.10 && g > 0.25 && b / g < 0.35,
        detail: format!("pgb={b:.4} pg={g:.4} ratio={:.3}", b / g),
    })
}

fn splat() -> Result<Check> {
    let plan = build_plan(&build_config(100, 100)?)?;
    let x = synthetic_splat(10_000, 1)?;
    let ks = [200, 500, 1000, 2000];
    let rows = error_vs_k_sweep(&plan, &x, &ks, &[Mode::Pgb], true)?;
    let mut pass = true;
    let mut detail = Vec::new();
    for (i, &k) in ks.iter().enumerate() {
        let plain = rows[2 * i].metrics.l2_error;
        let fixed = rows[2 * i + 1].metrics.l2_error;
        let dft = dft_topk(&x, k).map(|(_, y)| rel(&y.samples, &x.samples) * x.norm())?;
        pass &= plain < dft && fixed <= plain + 1e-12;
        detail.push(format!("k{k}:{plain:.3}/{dft:.3}"));
    }
    Ok(Check { name: "splat_pgb_below_dft", pass, detail: detail.join(" ") })
}

pub fn run(corrupt: bool) -> bool {
    let checks: Vec<(&'static str, Result<Check>)> = vec![
        ("biorthogonality_8x8", biorthogonality(corrupt)),
        ("round_trip_100", round_trip()),
        ("dense_oracle_n16", dense_oracle()),
        ("porat_dense_ls", porat_oracle()),
        ("dirichlet_on_samples", dirichlet_samples()),
        ("chirp_pg_vs_standard", chirp_ordering()),
        ("pulse_k25", pulse()),
        ("splat_pgb_below_dft", splat()),
    ];
    let mut all = true;
    println!("check,status,detail");
    for (name, result) in checks {
        let c = result.unwrap_or_else(|e| Check { name, pass: false, detail: format!("error: {e}") });
        all &= c.pass;
        println!("{},{},{}", c.name, if c.pass { "PASS" } else { "FAIL" }, c.detail);
    }
    all
}
