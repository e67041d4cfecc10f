//! Minimal dense symmetric linear algebra for the model fitter.
//!
//! The fitter only ever needs one operation: solve the Newton system
//! `(XᵀWX + Λ) δ = g` for a symmetric positive-definite left-hand side, plus
//! the diagonal of its inverse for standard errors. A hand-rolled Cholesky on
//! a flat buffer covers both and keeps the crate free of heavyweight linear
//! algebra dependencies; the matrices involved are at most a few hundred
//! columns wide.

use crate::num::Float;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LinalgError {
    /// The matrix is not (numerically) positive definite. For a design matrix
    /// crossproduct this means linearly dependent columns.
    #[error("matrix is rank-deficient at column {col}")]
    RankDeficient { col: usize },
}

/// Dense symmetric matrix, full row-major storage. Accumulation routines write
/// only the lower triangle; [`SymMatrix::cholesky`] reads only the lower
/// triangle, so the upper half is never touched.
#[derive(Debug, Clone)]
pub struct SymMatrix<F> {
    n: usize,
    data: Vec<F>,
}

impl<F: Float> SymMatrix<F> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![F::zero(); n * n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        let (r, c) = if i >= j { (i, j) } else { (j, i) };
        self.data[r * self.n + c]
    }

    /// Add `w * v vᵀ` for a sparse vector `v` given as `(index, value)` pairs
    /// with strictly increasing indices.
    #[inline]
    pub fn add_scaled_outer(&mut self, v: &[(u32, F)], w: F) {
        for (a, &(i, vi)) in v.iter().enumerate() {
            let wi = w * vi;
            let row = (i as usize) * self.n;
            for &(j, vj) in &v[..=a] {
                self.data[row + j as usize] = self.data[row + j as usize] + wi * vj;
            }
        }
    }

    /// Add `v` to the diagonal entry `(i, i)`.
    #[inline]
    pub fn add_diag(&mut self, i: usize, v: F) {
        self.data[i * self.n + i] = self.data[i * self.n + i] + v;
    }

    /// Cholesky factorization `A = L Lᵀ`. Fails if a pivot falls below a
    /// scale-relative tolerance, which signals linearly dependent columns.
    pub fn cholesky(&self) -> Result<Cholesky<F>, LinalgError> {
        let n = self.n;
        let mut l = vec![F::zero(); n * n];
        let max_diag = (0..n).fold(F::zero(), |m, i| m.max(self.get(i, i).abs()));
        let tol = max_diag.max(F::one()) * F::epsilon() * F::of(n.max(4) as f64);
        for j in 0..n {
            let mut d = self.get(j, j);
            for k in 0..j {
                d = d - l[j * n + k] * l[j * n + k];
            }
            if d <= tol {
                return Err(LinalgError::RankDeficient { col: j });
            }
            let dj = d.sqrt();
            l[j * n + j] = dj;
            for i in (j + 1)..n {
                let mut s = self.get(i, j);
                for k in 0..j {
                    s = s - l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / dj;
            }
        }
        Ok(Cholesky { n, l })
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub struct Cholesky<F> {
    n: usize,
    l: Vec<F>,
}

impl<F: Float> Cholesky<F> {
    /// Solve `A x = b`.
    pub fn solve(&self, b: &[F]) -> Vec<F> {
        assert_eq!(b.len(), self.n);
        let n = self.n;
        let mut x = b.to_vec();
        // forward: L y = b
        for i in 0..n {
            let mut s = x[i];
            for k in 0..i {
                s = s - self.l[i * n + k] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in (i + 1)..n {
                s = s - self.l[k * n + i] * x[k];
            }
            x[i] = s / self.l[i * n + i];
        }
        x
    }

    /// Diagonal of `A⁻¹`, computed column by column from the factor:
    /// `(A⁻¹)ᵢᵢ = ‖L⁻¹ eᵢ‖²`.
    pub fn inverse_diag(&self) -> Vec<F> {
        let n = self.n;
        let mut out = vec![F::zero(); n];
        let mut col = vec![F::zero(); n];
        for i in 0..n {
            for c in col.iter_mut() {
                *c = F::zero();
            }
            // forward-solve L col = e_i; entries before i stay zero
            for r in i..n {
                let mut s = if r == i { F::one() } else { F::zero() };
                for k in i..r {
                    s = s - self.l[r * n + k] * col[k];
                }
                col[r] = s / self.l[r * n + r];
            }
            out[i] = col[i..].iter().map(|&v| v * v).sum();
        }
        out
    }
}
