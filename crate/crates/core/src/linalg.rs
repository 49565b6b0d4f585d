//! Cholesky factorization and the triangular solves built on it.

use crate::ndcore::matrix::{dot, Matrix};

/// Lower-triangular factor `L` with `L Lᵀ = A`.
#[derive(Clone, Debug, PartialEq)]
pub struct Cholesky {
    factor: Matrix,
}

impl Cholesky {
    /// Returns `None` when `a` is not numerically positive definite.
    pub fn new(a: &Matrix) -> Option<Self> {
        let n = a.rows();
        assert_eq!(n, a.cols(), "cholesky of a non-square matrix");
        let mut l = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s = {
                    let (li, lj) = (&l.row(i)[..j], &l.row(j)[..j]);
                    a[(i, j)] - dot(li, lj)
                };
                if i == j {
                    if s.is_nan() || s <= 0.0 || !s.is_finite() {
                        return None;
                    }
                    l[(i, i)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Some(Self { factor: l })
    }

    pub fn factor(&self) -> &Matrix {
        &self.factor
    }

    pub fn into_factor(self) -> Matrix {
        self.factor
    }

    pub fn from_factor(factor: Matrix) -> Self {
        Self { factor }
    }

    pub fn dim(&self) -> usize {
        self.factor.rows()
    }

    /// Solves `L x = b`.
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x = vec![0.0; n];
        for i in 0..n {
            let s = b[i] - dot(&self.factor.row(i)[..i], &x[..i]);
            x[i] = s / self.factor[(i, i)];
        }
        x
    }

    /// Solves `Lᵀ x = b`.
    pub fn solve_upper(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            x[i] /= self.factor[(i, i)];
            let xi = x[i];
            let row = self.factor.row(i);
            for k in 0..i {
                x[k] -= row[k] * xi;
            }
        }
        x
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        self.solve_upper(&self.solve_lower(b))
    }

    pub fn log_det(&self) -> f64 {
        2.0 * (0..self.dim()).map(|i| self.factor[(i, i)].ln()).sum::<f64>()
    }

    /// `L⁻¹`, lower triangular.
    pub fn inverse_factor(&self) -> Matrix {
        let n = self.dim();
        let l = &self.factor;
        let mut inv = Matrix::zeros(n, n);
        let mut acc = vec![0.0; n];
        for i in 0..n {
            acc[..i].iter_mut().for_each(|v| *v = 0.0);
            let li = l.row(i);
            for k in 0..i {
                let a = li[k];
                if a == 0.0 {
                    continue;
                }
                let inv_k = &inv.row(k)[..=k];
                for (acc_j, v) in acc[..=k].iter_mut().zip(inv_k) {
                    *acc_j += a * v;
                }
            }
            let d = l[(i, i)];
            let row = inv.row_mut(i);
            for j in 0..i {
                row[j] = -acc[j] / d;
            }
            row[i] = 1.0 / d;
        }
        inv
    }

    /// `A⁻¹ = L⁻ᵀ L⁻¹`, symmetric.
    pub fn inverse(&self) -> Matrix {
        let n = self.dim();
        let linv = self.inverse_factor();
        let mut out = Matrix::zeros(n, n);
        // A⁻¹_ij = Σ_k L⁻¹_ki L⁻¹_kj; accumulate the lower triangle row by row of L⁻¹.
        for k in 0..n {
            let r = &linv.row(k)[..=k];
            for i in 0..=k {
                let a = r[i];
                if a == 0.0 {
                    continue;
                }
                let out_row = &mut out.row_mut(i)[..=i];
                for (o, v) in out_row.iter_mut().zip(&r[..=i]) {
                    *o += a * v;
                }
            }
        }
        for i in 0..n {
            for j in 0..i {
                out[(j, i)] = out[(i, j)];
            }
        }
        out
    }
}
