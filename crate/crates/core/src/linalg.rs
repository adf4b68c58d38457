//! Dense linear-algebra helpers shared by the inference modules.
//!
//! Every symmetric positive (semi-)definite solve goes through
//! [`jittered_cholesky`]: the factorization is first attempted as-is, then
//! with an additive diagonal jitter that escalates from `1e-12` to `1e-8`
//! (relative to the mean diagonal magnitude) before giving up.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Jitter ladder, relative to the mean absolute diagonal entry.
pub const JITTER_LADDER: [f64; 6] = [0.0, 1e-12, 1e-11, 1e-10, 1e-9, 1e-8];

/// A Cholesky factorization together with the jitter that was needed.
pub struct Factor {
    pub chol: Cholesky<f64, Dyn>,
    pub jitter: f64,
}

impl Factor {
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.chol.solve(b)
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.chol.solve(b)
    }

    /// `log det` of the (jittered) matrix.
    pub fn log_det(&self) -> f64 {
        2.0 * self.chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }

    /// Explicit inverse through triangular solves. Only used where the full
    /// inverse is itself the quantity of interest (posterior covariance,
    /// gradient trace identities).
    pub fn inverse(&self) -> DMatrix<f64> {
        let n = self.chol.l_dirty().nrows();
        let mut inv = self.chol.solve(&DMatrix::identity(n, n));
        symmetrize(&mut inv);
        inv
    }
}

/// Cholesky factorization with the shared jitter policy.
pub fn jittered_cholesky(m: &DMatrix<f64>, context: &str) -> Result<Factor> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{context}: expected a square matrix, got {}x{}",
            n,
            m.ncols()
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument(format!("{context}: empty matrix")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "{context}: matrix has non-finite entries"
        )));
    }
    let scale = m.diagonal().iter().map(|d| d.abs()).sum::<f64>() / n as f64;
    if scale == 0.0 {
        return Err(Error::Singular(format!("{context}: zero matrix")));
    }
    for &eps in JITTER_LADDER.iter() {
        let jitter = eps * scale;
        let mut a = m.clone();
        for i in 0..n {
            a[(i, i)] += jitter;
        }
        if let Some(chol) = Cholesky::new(a) {
            return Ok(Factor { chol, jitter });
        }
    }
    Err(Error::NotPositiveDefinite {
        context: context.to_string(),
        max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1] * scale,
    })
}

/// Replaces `m` by `(m + mᵀ)/2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if m.nrows() != m.ncols() {
        return false;
    }
    let scale = m.amax().max(1.0);
    let n = m.nrows();
    (0..n).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol * scale))
}

/// Square-root factor `L` with `L Lᵀ = m` for a symmetric PSD matrix,
/// built from the eigendecomposition so that singular (or zero) matrices
/// are handled. Slightly negative eigenvalues from rounding are clipped.
pub fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut sym = m.clone();
    symmetrize(&mut sym);
    let eig = SymmetricEigen::new(sym);
    let mut l = eig.eigenvectors;
    for (j, lambda) in eig.eigenvalues.iter().enumerate() {
        let s = lambda.max(0.0).sqrt();
        l.column_mut(j).scale_mut(s);
    }
    l
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let mut sym = m.clone();
    symmetrize(&mut sym);
    SymmetricEigen::new(sym).eigenvalues.min()
}
