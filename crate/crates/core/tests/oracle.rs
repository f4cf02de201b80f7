mod common;

use common::*;
use pgb::compression::{porat_correct, standard_gabor_fit, top_k};
use pgb::kernel::{bg_eval, oversampled_grid, pg_eval};
use pgb::lattice::{gaussian_sample, plain_gaussian};
use pgb::transform::{biorthogonal_matrix, forward_pg, forward_pgb, overlap_matrix};
use pgb::{build_config, build_plan, Error, Signal1D, TransformPlan};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn column_matches_unwrapped_formula_on_8x8_lattice() {
    let cfg = build_config(8, 8).unwrap();
    for k in 0..64 {
        let direct: C = (-1..=1)
            .map(|p| {
                let tau = k as f64 + 64.0 * p as f64 - cfg.time_center(1);
                let w = cfg.freq_center(1);
                (2.0 * cfg.alpha / std::f64::consts::PI).powf(0.25) * C::from_polar((-cfg.alpha * tau * tau).exp(), w * tau)
            })
            .sum();
        let g = gaussian_sample(&cfg, (1, 1), k).unwrap();
        assert!((g - direct).norm() < 1e-15, "k={k}");
    }
}

#[test]
fn overlap_matches_dense_product() {
    for (nt, nf) in [(4, 4), (3, 5), (8, 2)] {
        let cfg = build_config(nt, nf).unwrap();
        let plan = build_plan(&cfg).unwrap();
        let g = dense_g(&cfg);
        let s = g.adjoint().mul(&g);
        let got = overlap_matrix(&plan);
        let n = cfg.n_total;
        for r in 0..n {
            for col in 0..n {
                assert!((got[(r, col)] - s.at(r, col)).norm() < 1e-12);
            }
        }
        let s_inv = gauss_jordan_inverse(&s);
        let op = plan.overlap_operator(true);
        for r in 0..n {
            for col in 0..n {
                assert!((op.get(r, col) - s_inv.at(r, col)).norm() < 1e-10);
            }
        }
    }
}

#[test]
fn biorthogonal_columns_match_gauss_jordan() {
    let cfg = build_config(4, 4).unwrap();
    let plan = build_plan(&cfg).unwrap();
    let b = gauss_jordan_inverse(&dense_g(&cfg).adjoint());
    let got = biorthogonal_matrix(&plan);
    for r in 0..16 {
        for col in 0..16 {
            assert!((got[(r, col)] - b.at(r, col)).norm() < 1e-12);
        }
    }
}

#[test]
fn larger_lattices_against_gauss_jordan() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for (nt, nf) in [(8, 8), (4, 16), (16, 4), (6, 6)] {
        let cfg = build_config(nt, nf).unwrap();
        let plan = build_plan(&cfg).unwrap();
        let g = dense_g(&cfg);
        let x = random_complex(&mut rng, cfg.n_total);
        let want = gauss_jordan_inverse(&g).apply(&x.samples);
        assert!(rel(&forward_pg(&plan, &x).unwrap().values, &want) < 1e-10);
    }
}

#[test]
fn porat_matches_lstsq_for_every_k() {
    let cfg = build_config(4, 4).unwrap();
    let plan = build_plan(&cfg).unwrap();
    let g = dense_g(&cfg);
    let b = gauss_jordan_inverse(&g.adjoint());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random_real(&mut rng, 16);
    for k in 1..=16 {
        for (set, basis) in [(forward_pgb(&plan, &x).unwrap(), &b), (forward_pg(&plan, &x).unwrap(), &g)] {
            let sparse = top_k(&set, k).unwrap();
            let fixed = porat_correct(&plan, &sparse, &x).unwrap();
            let want = lstsq(&basis.columns(&sparse.indices()), &x.samples);
            let got: Vec<C> = fixed.entries.iter().map(|e| e.1).collect();
            assert!(rel(&got, &want) < 1e-10, "k={k}");
        }
    }
}

#[test]
fn porat_rejects_wrong_length_and_empty_is_empty() {
    let plan = build_plan(&build_config(4, 4).unwrap()).unwrap();
    let x = Signal1D::from_real(&[1.0; 16]);
    let set = forward_pgb(&plan, &x).unwrap();
    let none = top_k(&set, 0).unwrap();
    assert!(porat_correct(&plan, &none, &x).unwrap().is_empty());
    let short = Signal1D::from_real(&[1.0; 8]);
    assert!(matches!(porat_correct(&plan, &top_k(&set, 3).unwrap(), &short), Err(Error::InvalidArgument(_))));
}

#[test]
fn ill_conditioned_matrix_is_rejected() {
    let cfg = build_config(2, 2).unwrap();
    let mut g = pgb::build_gabor_matrix(&cfg);
    // make the two generating blocks identical so the circulant has a zero mode
    let b0: Vec<C> = g.block(0).to_vec();
    let b1: Vec<C> = g.block(1).to_vec();
    for r in 0..2 {
        for l in 0..2 {
            g.perturb(1, r, l, b0[r * 2 + l] - b1[r * 2 + l]);
        }
    }
    assert!(matches!(TransformPlan::from_matrix(g), Err(Error::IllConditioned { .. })));
}

#[test]
fn bg_functions_are_biorthogonal_on_fine_grid() {
    // on the fine grid the Dirichlet interpolants keep ⟨b_m, g_j⟩ = δ_mj up to the grid weight
    let plan = build_plan(&build_config(4, 4).unwrap()).unwrap();
    let ts = oversampled_grid(16, 4);
    for (m, j) in [(0, 0), (3, 3), (2, 5), (7, 1)] {
        let ip: C = ts
            .iter()
            .map(|&t| bg_eval(&plan, m, t).unwrap().conj() * pg_eval(&plan, j, t).unwrap())
            .sum::<C>()
            / 4.0;
        let want = if m == j { 1.0 } else { 0.0 };
        assert!((ip - c(want, 0.0)).norm() < 1e-10, "({m},{j}) -> {ip}");
    }
}

#[test]
fn standard_fit_recovers_a_plain_gaussian() {
    let cfg = build_config(4, 4).unwrap();
    let ts = oversampled_grid(16, 8);
    let cell = cfg.cell_of(6).unwrap();
    let target: Vec<C> = ts.iter().map(|&t| plain_gaussian(&cfg, cell, t).unwrap()).collect();
    let (coef, fit) = standard_gabor_fit(&cfg, &ts, &target, 1.0 / 8.0).unwrap();
    for (j, v) in coef.iter().enumerate() {
        let want = if j == 6 { 1.0 } else { 0.0 };
        assert!((v - c(want, 0.0)).norm() < 1e-6, "j={j} {v}");
    }
    assert!(rel(&fit, &target) < 1e-8);
}
