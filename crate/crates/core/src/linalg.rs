//! Small dense complex kernels: LU with partial pivoting, Cholesky, and a
//! 1-norm condition estimator. Matrices are row-major slices.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

/// LU factorization `P·A = L·U` of a square matrix.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<C>,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &[C], n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut lu = a.to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        for col in 0..n {
            let (piv, best) = (col..n)
                .map(|r| (r, lu[r * n + col].norm()))
                .fold((col, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            if best == 0.0 || !best.is_finite() {
                return Err(Error::IllConditioned { cond: f64::INFINITY, limit: 0.0 });
            }
            if piv != col {
                for c in 0..n {
                    lu.swap(piv * n + c, col * n + c);
                }
                perm.swap(piv, col);
            }
            let inv = ONE / lu[col * n + col];
            for r in col + 1..n {
                let f = lu[r * n + col] * inv;
                lu[r * n + col] = f;
                if f != ZERO {
                    for c in col + 1..n {
                        let u = lu[col * n + c];
                        lu[r * n + c] -= f * u;
                    }
                }
            }
        }
        Ok(Lu { n, lu, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solve `A X = B` in place, where `b` is row-major `n × m`.
    pub fn solve_rows(&self, b: &mut [C], m: usize) {
        let n = self.n;
        assert_eq!(b.len(), n * m);
        let src = b.to_vec();
        for (r, &p) in self.perm.iter().enumerate() {
            b[r * m..(r + 1) * m].copy_from_slice(&src[p * m..(p + 1) * m]);
        }
        for r in 1..n {
            let (head, tail) = b.split_at_mut(r * m);
            let row = &mut tail[..m];
            for c in 0..r {
                let f = self.lu[r * n + c];
                if f != ZERO {
                    let prev = &head[c * m..(c + 1) * m];
                    for (x, &y) in row.iter_mut().zip(prev) {
                        *x -= f * y;
                    }
                }
            }
        }
        for r in (0..n).rev() {
            let (head, tail) = b.split_at_mut((r + 1) * m);
            let row = &mut head[r * m..];
            for c in r + 1..n {
                let f = self.lu[r * n + c];
                if f != ZERO {
                    let next = &tail[(c - r - 1) * m..(c - r) * m];
                    for (x, &y) in row.iter_mut().zip(next) {
                        *x -= f * y;
                    }
                }
            }
            let inv = ONE / self.lu[r * n + r];
            for x in row.iter_mut() {
                *x *= inv;
            }
        }
    }

    pub fn solve(&self, b: &mut [C]) {
        self.solve_rows(b, 1);
    }
}

/// Cholesky factorization `A = L·L†` of a Hermitian positive definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    l: Vec<C>,
}

impl Cholesky {
    /// Fails with an ill-conditioned error when a pivot is not positive.
    pub fn factor(a: &[C], n: usize) -> Result<Self> {
        assert_eq!(a.len(), n * n);
        let mut l = vec![ZERO; n * n];
        for j in 0..n {
            let row_j = &l[j * n..j * n + j];
            let d = a[j * n + j].re - row_j.iter().map(|x| x.norm_sqr()).sum::<f64>();
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::IllConditioned { cond: f64::INFINITY, limit: 0.0 });
            }
            let djj = d.sqrt();
            l[j * n + j] = C::new(djj, 0.0);
            let inv = 1.0 / djj;
            let (upper, lower) = l.split_at_mut((j + 1) * n);
            let row_j = &upper[j * n..j * n + j];
            lower.par_chunks_mut(n).enumerate().for_each(|(off, row_i)| {
                let i = j + 1 + off;
                let dot: C = row_i[..j]
                    .iter()
                    .zip(row_j)
                    .map(|(x, y)| x * y.conj())
                    .sum();
                row_i[j] = (a[i * n + j] - dot) * inv;
            });
        }
        Ok(Cholesky { n, l })
    }

    pub fn solve(&self, b: &mut [C]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            let s: C = row.iter().zip(&b[..i]).map(|(x, y)| x * y).sum();
            b[i] = (b[i] - s) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = ZERO;
            for k in i + 1..n {
                s += self.l[k * n + i].conj() * b[k];
            }
            b[i] = (b[i] - s) / self.l[i * n + i].re;
        }
    }
}

fn norm1(a: &[C], n: usize) -> f64 {
    (0..n)
        .map(|c| (0..n).map(|r| a[r * n + c].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Hager–Higham estimate of `‖A‖₁·‖A⁻¹‖₁` for a Hermitian matrix `a`,
/// given a solver for `A x = b`. Since `A` is Hermitian, `A⁻†` solves reuse it.
pub fn cond1_estimate_hermitian(a: &[C], n: usize, solve: impl Fn(&mut [C])) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let mut x = vec![C::new(1.0 / n as f64, 0.0); n];
    let mut est = 0.0;
    for _ in 0..5 {
        let mut y = x.clone();
        solve(&mut y);
        let new_est: f64 = y.iter().map(|v| v.norm()).sum();
        let mut z: Vec<C> = y
            .iter()
            .map(|v| if v.norm() > 0.0 { v / v.norm() } else { ONE })
            .collect();
        solve(&mut z);
        let (jmax, zmax) = z
            .iter()
            .enumerate()
            .map(|(i, v)| (i, v.norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let zx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
        let converged = new_est <= est || zmax <= zx;
        est = est.max(new_est);
        if converged {
            break;
        }
        x = vec![ZERO; n];
        x[jmax] = ONE;
    }
    est * norm1(a, n)
}

/// `out = A·B` for row-major `A (n×k)` and `B (k×m)`.
pub fn matmul(a: &[C], b: &[C], n: usize, k: usize, m: usize, out: &mut [C]) {
    assert_eq!(a.len(), n * k);
    assert_eq!(b.len(), k * m);
    assert_eq!(out.len(), n * m);
    out.iter_mut().for_each(|x| *x = ZERO);
    for i in 0..n {
        let orow = &mut out[i * m..(i + 1) * m];
        for p in 0..k {
            let f = a[i * k + p];
            if f == ZERO {
                continue;
            }
            let brow = &b[p * m..(p + 1) * m];
            for (o, &y) in orow.iter_mut().zip(brow) {
                *o += f * y;
            }
        }
    }
}

/// Conjugate transpose of a row-major square matrix.
pub fn adjoint(a: &[C], n: usize) -> Vec<C> {
    let mut out = vec![ZERO; n * n];
    for r in 0..n {
        for c in 0..n {
            out[c * n + r] = a[r * n + c].conj();
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_matrix(n: usize) -> Vec<C> {
        (0..n * n)
            .map(|i| {
                let x = i as f64;
                C::new((x * 0.37).sin() + if i % (n + 1) == 0 { 3.0 } else { 0.0 }, (x * 0.11).cos())
            })
            .collect()
    }

    #[test]
    fn lu_solves_multiple_rhs() {
        let n = 6;
        let a = sample_matrix(n);
        let lu = Lu::factor(&a, n).unwrap();
        let x: Vec<C> = (0..n * 2).map(|i| C::new(i as f64, -(i as f64) * 0.5)).collect();
        let mut b = vec![ZERO; n * 2];
        matmul(&a, &x, n, n, 2, &mut b);
        lu.solve_rows(&mut b, 2);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-12);
        }
    }

    #[test]
    fn lu_rejects_singular() {
        let a = vec![ONE, ONE, ONE, ONE];
        assert!(Lu::factor(&a, 2).is_err());
    }

    #[test]
    fn cholesky_matches_gram_solve() {
        let n = 5;
        let m = sample_matrix(n);
        let mh = adjoint(&m, n);
        let mut a = vec![ZERO; n * n];
        matmul(&mh, &m, n, n, n, &mut a);
        let ch = Cholesky::factor(&a, n).unwrap();
        let x: Vec<C> = (0..n).map(|i| C::new(1.0 + i as f64, 0.3)).collect();
        let mut b = vec![ZERO; n];
        matmul(&a, &x, n, n, 1, &mut b);
        ch.solve(&mut b);
        for (u, v) in b.iter().zip(&x) {
            assert!((u - v).norm() < 1e-10);
        }
        let cond = cond1_estimate_hermitian(&a, n, |v| ch.solve(v));
        assert!(cond >= 1.0 && cond.is_finite());
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = vec![ONE, C::new(2.0, 0.0), C::new(2.0, 0.0), ONE];
        assert!(Cholesky::factor(&a, 2).is_err());
    }

    #[test]
    fn condition_of_diagonal() {
        let a = vec![C::new(1.0, 0.0), ZERO, ZERO, C::new(1e-6, 0.0)];
        let ch = Cholesky::factor(&a, 2).unwrap();
        let est = cond1_estimate_hermitian(&a, 2, |v| ch.solve(v));
        assert!((est - 1e6).abs() / 1e6 < 1e-9);
    }
}
