#![allow(dead_code)]

use pgb::image2d::Image;
use pgb::lattice::gaussian_sample;
use pgb::{Complex64, LatticeConfig, Signal1D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Row-major dense matrix.
#[derive(Clone, Debug)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<C>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Dense { rows, cols, a: vec![c(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Dense::zeros(n, n);
        for i in 0..n {
            m.a[i * n + i] = c(1.0, 0.0);
        }
        m
    }

    pub fn at(&self, r: usize, col: usize) -> C {
        self.a[r * self.cols + col]
    }

    pub fn set(&mut self, r: usize, col: usize, v: C) {
        self.a[r * self.cols + col] = v;
    }

    pub fn adjoint(&self) -> Dense {
        let mut m = Dense::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for col in 0..self.cols {
                m.set(col, r, self.at(r, col).conj());
            }
        }
        m
    }

    pub fn mul(&self, o: &Dense) -> Dense {
        assert_eq!(self.cols, o.rows);
        let mut m = Dense::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let f = self.at(i, k);
                for j in 0..o.cols {
                    m.a[i * o.cols + j] += f * o.at(k, j);
                }
            }
        }
        m
    }

    pub fn apply(&self, v: &[C]) -> Vec<C> {
        assert_eq!(self.cols, v.len());
        (0..self.rows).map(|r| (0..self.cols).map(|k| self.at(r, k) * v[k]).sum()).collect()
    }

    pub fn columns(&self, idx: &[usize]) -> Dense {
        let mut m = Dense::zeros(self.rows, idx.len());
        for r in 0..self.rows {
            for (j, &k) in idx.iter().enumerate() {
                m.set(r, j, self.at(r, k));
            }
        }
        m
    }

    pub fn kron(&self, o: &Dense) -> Dense {
        let mut m = Dense::zeros(self.rows * o.rows, self.cols * o.cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let f = self.at(i, j);
                for p in 0..o.rows {
                    for q in 0..o.cols {
                        m.set(i * o.rows + p, j * o.cols + q, f * o.at(p, q));
                    }
                }
            }
        }
        m
    }

    pub fn max_dev(&self, o: &Dense) -> f64 {
        self.a.iter().zip(&o.a).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }
}

/// Gauss-Jordan inversion with partial pivoting.
pub fn gauss_jordan_inverse(m: &Dense) -> Dense {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut a = m.clone();
    let mut inv = Dense::identity(n);
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a.at(x, col).norm().partial_cmp(&a.at(y, col).norm()).unwrap())
            .unwrap();
        assert!(a.at(piv, col).norm() > 1e-300, "singular matrix");
        for j in 0..n {
            a.a.swap(piv * n + j, col * n + j);
            inv.a.swap(piv * n + j, col * n + j);
        }
        let p = a.at(col, col);
        for j in 0..n {
            a.a[col * n + j] /= p;
            inv.a[col * n + j] /= p;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a.at(r, col);
            if f == c(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                let (ac, ic) = (a.at(col, j), inv.at(col, j));
                a.a[r * n + j] -= f * ac;
                inv.a[r * n + j] -= f * ic;
            }
        }
    }
    inv
}

/// Least squares `min ‖y − M d‖` through the normal equations and Gauss-Jordan.
pub fn lstsq(m: &Dense, y: &[C]) -> Vec<C> {
    let mh = m.adjoint();
    gauss_jordan_inverse(&mh.mul(m)).apply(&mh.apply(y))
}

/// `G` assembled entry by entry from the Gaussian formula.
pub fn dense_g(cfg: &LatticeConfig) -> Dense {
    let n = cfg.n_total;
    let mut g = Dense::zeros(n, n);
    for k in 0..n {
        for j in 0..n {
            g.set(k, j, gaussian_sample(cfg, cfg.cell_of(j).unwrap(), k).unwrap());
        }
    }
    g
}

pub fn norm(v: &[C]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn dist(a: &[C], b: &[C]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

pub fn rel(a: &[C], b: &[C]) -> f64 {
    let nb = norm(b);
    if nb == 0.0 { dist(a, b) } else { dist(a, b) / nb }
}

pub fn random_complex(rng: &mut ChaCha8Rng, n: usize) -> Signal1D {
    Signal1D::from_complex((0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
}

pub fn random_real(rng: &mut ChaCha8Rng, n: usize) -> Signal1D {
    Signal1D::from_real(&(0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>())
}

pub fn random_image(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Image {
    Image::new(rows, cols, (0..rows * cols).map(|_| rng.random_range(0..=255u32) as f64).collect()).unwrap()
}

/// Deterministic 8-bit scene with smooth shading, hard edges, texture and grain.
pub fn synthetic_scene(rows: usize, cols: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (rf, cf) = (rows as f64, cols as f64);
    let mut px = vec![0.0; rows * cols];
    for r in 0..rows {
        for col in 0..cols {
            let (y, x) = (r as f64 / rf, col as f64 / cf);
            let mut v = 70.0 + 110.0 * y + 20.0 * (3.0 * x).sin();
            if (x - 0.35).powi(2) + (y - 0.4).powi(2) < 0.04 {
                v = 40.0 + 30.0 * x;
            }
            if (0.6..0.9).contains(&x) && (0.15..0.55).contains(&y) {
                v = 215.0 - 40.0 * y;
            }
            if (0.1..0.45).contains(&x) && (0.7..0.92).contains(&y) {
                v += 35.0 * (2.0 * std::f64::consts::PI * 24.0 * x).sin();
            }
            let d = ((x - 0.75).powi(2) + (y - 0.78).powi(2)).sqrt();
            v += 60.0 * (-(d * d) / 0.004).exp();
            v += rng.random_range(-4.0..4.0);
            px[r * cols + col] = v.round().clamp(0.0, 255.0);
        }
    }
    Image::new(rows, cols, px).unwrap()
}
