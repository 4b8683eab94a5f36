use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{GpError, Result};
use crate::scalar::Real;

/// Cholesky factor together with the diagonal jitter that made it succeed.
#[derive(Debug, Clone)]
pub struct JitteredCholesky<T: Real> {
    pub chol: Cholesky<T, Dyn>,
    pub jitter: T,
}

/// Escalating-jitter Cholesky.
///
/// Tries `m + j I` for `j = 0` (when `try_plain`) and then `j = scale * first`,
/// `scale * first * 10`, ... up to `scale * last`.
pub fn cholesky_with_jitter<T: Real>(
    m: &DMatrix<T>,
    scale: T,
    first: f64,
    last: f64,
    try_plain: bool,
) -> Result<JitteredCholesky<T>> {
    let mut tried = Vec::new();
    if try_plain {
        tried.push(0.0);
        if let Some(chol) = Cholesky::new(m.clone()) {
            return Ok(JitteredCholesky {
                chol,
                jitter: T::zero(),
            });
        }
    }
    let mut level = first;
    while level <= last * (1.0 + 1e-9) {
        let jitter = scale * T::lit(level);
        tried.push(jitter.as_f64());
        let mut shifted = m.clone();
        for i in 0..shifted.nrows() {
            shifted[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(shifted) {
            return Ok(JitteredCholesky { chol, jitter });
        }
        level *= 10.0;
    }
    Err(GpError::Factorization { jitters: tried })
}

pub(crate) fn mean_diagonal<T: Real>(m: &DMatrix<T>) -> T {
    let n = m.nrows().max(1);
    m.diagonal().iter().fold(T::zero(), |a, &b| a + b) / T::from_usize_lossy(n)
}

pub(crate) fn max_diagonal<T: Real>(m: &DMatrix<T>) -> T {
    m.diagonal()
        .iter()
        .fold(T::zero(), |a, &b| if b > a { b } else { a })
}

/// `log det` from a Cholesky factor.
pub(crate) fn chol_logdet<T: Real>(chol: &Cholesky<T, Dyn>) -> T {
    let l = chol.l_dirty();
    (0..l.nrows()).fold(T::zero(), |acc, i| acc + l[(i, i)].ln()) * T::lit(2.0)
}

/// Eigendecomposition `K = U diag(s) U^T` of a symmetric PSD Gram matrix.
///
/// Once computed, every shifted system `K + c I` is diagonal in the `U` basis,
/// so quantities along a whole regularization path cost `O(n)` or `O(n^2)`
/// each instead of a fresh `O(n^3)` factorization.
#[derive(Debug, Clone)]
pub struct GramSpectrum<T: Real> {
    /// Eigenvalues clamped at zero.
    pub values: DVector<T>,
    pub vectors: DMatrix<T>,
}

impl<T: Real> GramSpectrum<T> {
    pub fn new(gram: DMatrix<T>) -> Self {
        let eig = gram.symmetric_eigen();
        let values = eig
            .eigenvalues
            .map(|v| if v > T::zero() { v } else { T::zero() });
        GramSpectrum {
            values,
            vectors: eig.eigenvectors,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `U^T v`.
    pub fn rotate(&self, v: &DVector<T>) -> DVector<T> {
        self.vectors.tr_mul(v)
    }

    /// Diagonal of `K (K + c I)^{-1}`.
    pub fn smoother_diagonal(&self, shift: T) -> DVector<T> {
        let n = self.dim();
        let ratios: Vec<T> = self.values.iter().map(|&s| s / (s + shift)).collect();
        DVector::from_fn(n, |i, _| {
            let row = self.vectors.row(i);
            row.iter()
                .zip(&ratios)
                .fold(T::zero(), |acc, (&u, &r)| acc + u * u * r)
        })
    }

    /// `K (K + c I)^{-1} y` given `z = U^T y`.
    pub fn smooth(&self, rotated: &DVector<T>, shift: T) -> DVector<T> {
        let scaled = DVector::from_fn(self.dim(), |i, _| {
            rotated[i] * self.values[i] / (self.values[i] + shift)
        });
        &self.vectors * scaled
    }
}
