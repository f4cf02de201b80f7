mod common;

use common::*;
use pgb::compression::{Layout, SparseCoefficients};
use pgb::image2d::{
    build_plan_2d, compress_2d, forward_2d, inverse_2d, porat_2d, reconstruct_sparse_2d, CoefficientGrid2D, Image,
};
use pgb::{build_config, Error, Mode};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn round_trip_random_32() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = build_config(4, 8).unwrap();
    let plan = build_plan_2d(&cfg, &cfg).unwrap();
    let img = random_image(&mut rng, 32, 32);
    for mode in [Mode::Pgb, Mode::Pg] {
        let back = inverse_2d(&plan, &forward_2d(&plan, mode, &img).unwrap()).unwrap();
        let a: Vec<C> = img.pixels.iter().map(|&p| c(p, 0.0)).collect();
        let b: Vec<C> = back.pixels.iter().map(|&p| c(p, 0.0)).collect();
        assert!(rel(&b, &a) < 1e-8);
    }
}

#[test]
fn single_coefficient_is_outer_product_of_basis_columns() {
    let rc = build_config(4, 4).unwrap();
    let cc = build_config(2, 4).unwrap();
    let plan = build_plan_2d(&rc, &cc).unwrap();
    let (i, j) = (5, 3);
    let g_r = dense_g(&rc);
    let g_c = dense_g(&cc);
    let b_r = gauss_jordan_inverse(&g_r.adjoint());
    let b_c = gauss_jordan_inverse(&g_c.adjoint());
    for (mode, br, bc) in [(Mode::Pgb, &b_r, &b_c), (Mode::Pg, &g_r, &g_c)] {
        let sparse = SparseCoefficients {
            mode,
            layout: Layout::Lattice2 { rows: rc, cols: cc },
            entries: vec![(i * 8 + j, c(1.0, 0.0))],
            porat: false,
        };
        let img = reconstruct_sparse_2d(&plan, &sparse).unwrap();
        for r in 0..16 {
            for col in 0..8 {
                let want = (br.at(r, i) * bc.at(col, j)).re;
                assert!((img.get(r, col) - want).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn complex_grid_is_not_silently_truncated() {
    let cfg = build_config(2, 2).unwrap();
    let plan = build_plan_2d(&cfg, &cfg).unwrap();
    let grid = CoefficientGrid2D {
        mode: Mode::Pgb,
        values: vec![c(0.0, 1.0); 16],
        row_config: cfg,
        col_config: cfg,
    };
    let mut vals = grid.values.clone();
    vals[3] = c(2.0, -1.0);
    let grid = CoefficientGrid2D { values: vals, ..grid };
    assert!(inverse_2d(&plan, &grid).is_err());
}

#[test]
fn porat_full_set_converges_to_dense_coefficients() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cfg = build_config(4, 4).unwrap();
    let plan = build_plan_2d(&cfg, &cfg).unwrap();
    let img = random_image(&mut rng, 16, 16);
    let grid = forward_2d(&plan, Mode::Pg, &img).unwrap();
    let zeros = SparseCoefficients {
        mode: Mode::Pg,
        layout: Layout::Lattice2 { rows: cfg, cols: cfg },
        entries: (0..256).map(|i| (i, c(0.0, 0.0))).collect(),
        porat: false,
    };
    let out = porat_2d(&plan, &zeros, &img, 1e-12, 500).unwrap();
    let got: Vec<C> = out.sparse.entries.iter().map(|e| e.1).collect();
    assert!(rel(&got, &grid.values) < 1e-9);
    assert!(out.residual < 1e-12);
}

#[test]
fn porat_reports_non_convergence() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = build_config(4, 4).unwrap();
    let plan = build_plan_2d(&cfg, &cfg).unwrap();
    let img = random_image(&mut rng, 16, 16);
    let sparse = SparseCoefficients {
        mode: Mode::Pgb,
        layout: Layout::Lattice2 { rows: cfg, cols: cfg },
        entries: (0..64).map(|i| (i * 4, c(0.0, 0.0))).collect(),
        porat: false,
    };
    match porat_2d(&plan, &sparse, &img, 1e-14, 1) {
        Err(Error::NoConvergence { iterations: 1, residual }) => assert!(residual > 0.0),
        other => panic!("{other:?}"),
    }
}

#[test]
fn shape_mismatch_is_rejected() {
    let cfg = build_config(4, 4).unwrap();
    let plan = build_plan_2d(&cfg, &cfg).unwrap();
    let img = Image::zeros(16, 8);
    assert!(matches!(forward_2d(&plan, Mode::Pgb, &img), Err(Error::InvalidArgument(_))));
    assert!(compress_2d(&plan, Mode::Pgb, &Image::zeros(16, 16), 300, false).is_err());
}

#[test]
fn scene_orderings_at_small_scale() {
    let img = synthetic_scene(64, 64, 3);
    let cfg = build_config(4, 16).unwrap();
    let plan = build_plan_2d(&cfg, &cfg).unwrap();
    let k = 64 * 64 / 100;
    let pgb = compress_2d(&plan, Mode::Pgb, &img, k, false).unwrap().metrics.mse;
    let pgb_p = compress_2d(&plan, Mode::Pgb, &img, k, true).unwrap().metrics.mse;
    let pg = compress_2d(&plan, Mode::Pg, &img, k, false).unwrap().metrics.mse;
    assert!(pgb_p <= pgb);
    assert!(pgb < pg);
}
