//! Conditioning the polynomial Gaussian process on linear functionals.
//!
//! Only functionals expressible in coefficient space are supported:
//! `L{g} = C alpha` for an `L x N` matrix `C`. The spatial mean over the
//! input density is `C = e_1'` for an orthonormal basis with the constant
//! term first.

use nalgebra::{DMatrix, DVector};

use crate::basis::DesignMatrix;
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{is_symmetric, jittered_cholesky, symmetrize, Factor};
use crate::linear_bayes::{CoefficientPosterior, PredictiveDistribution};

/// Blocks of the joint Gaussian of `(g(X), L{g})`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFunctionalBlocks {
    pub mu1: DVector<f64>,
    pub mu2: DVector<f64>,
    pub s11: DMatrix<f64>,
    /// `cov(g(X), L{g})`, `M x L`.
    pub s12: DMatrix<f64>,
    pub s22: DMatrix<f64>,
}

/// A functional value known up to Gaussian uncertainty.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainFunctionalValue {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl UncertainFunctionalValue {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let l = mean.len();
        if covariance.shape() != (l, l) {
            return Err(dim_mismatch("functional value mean and covariance disagree"));
        }
        if !is_symmetric(&covariance, 1e-12) {
            return Err(Error::InvalidArgument("functional covariance must be symmetric".into()));
        }
        if covariance.diagonal().iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidArgument("functional covariance has negative variances".into()));
        }
        Ok(UncertainFunctionalValue { mean, covariance })
    }

    pub fn exact(mean: DVector<f64>) -> Self {
        let l = mean.len();
        UncertainFunctionalValue {
            mean,
            covariance: DMatrix::zeros(l, l),
        }
    }
}

/// Joint blocks for the functional `C alpha` and the process at the rows of `v`.
pub fn functional_blocks(
    post: &CoefficientPosterior,
    v: &DesignMatrix,
    c: &DMatrix<f64>,
) -> Result<LinearFunctionalBlocks> {
    let n = post.dim();
    if v.ncols() != n || c.ncols() != n {
        return Err(dim_mismatch(format!(
            "posterior has {n} coefficients; design has {}, functional has {}",
            v.ncols(),
            c.ncols()
        )));
    }
    let sigma = &post.covariance;
    let mu1 = &v.values * &post.mean;
    let mu2 = c * &post.mean;
    let mut s11 = &v.values * sigma * v.values.transpose();
    symmetrize(&mut s11);
    let s12 = &v.values * sigma * c.transpose();
    let mut s22 = c * sigma * c.transpose();
    symmetrize(&mut s22);
    Ok(LinearFunctionalBlocks { mu1, mu2, s11, s12, s22 })
}

/// Spatial-mean specialization: `mu2 = mu_1`, `S12 = V [Sigma]_{:,1}`,
/// `S22 = [Sigma]_{11}`.
pub fn spatial_mean_blocks(post: &CoefficientPosterior, v: &DesignMatrix) -> Result<LinearFunctionalBlocks> {
    functional_blocks(post, v, &spatial_mean_functional(post.dim()))
}

/// `e_1'` as a `1 x N` functional.
pub fn spatial_mean_functional(n: usize) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(1, n);
    c[(0, 0)] = 1.0;
    c
}

fn factor_s22(s22: &DMatrix<f64>) -> Result<Factor> {
    jittered_cholesky(s22, "functional covariance S22").map_err(|e| {
        Error::Singular(format!(
            "cannot condition: the functional has no prior uncertainty ({e})"
        ))
    })
}

/// `g(X) | L{g} = a`.
pub fn condition_on_value(blocks: &LinearFunctionalBlocks, a: &DVector<f64>) -> Result<PredictiveDistribution> {
    condition_on_uncertain_value(blocks, &UncertainFunctionalValue::exact(a.clone()))
}

/// `g(X)` when `L{g} ~ N(mu_a, Sigma_a)`: mean by iterated expectation,
/// covariance by total covariance,
/// `S11 - S12 S22^-1 S12' + S12 S22^-1 Sigma_a S22^-1 S12'`.
pub fn condition_on_uncertain_value(
    blocks: &LinearFunctionalBlocks,
    a: &UncertainFunctionalValue,
) -> Result<PredictiveDistribution> {
    let l = blocks.mu2.len();
    if a.mean.len() != l || blocks.s22.shape() != (l, l) || blocks.s12.ncols() != l {
        return Err(dim_mismatch("functional value and blocks disagree"));
    }
    let factor = factor_s22(&blocks.s22)?;
    // gain = S12 S22^-1  (M x L)
    let gain = factor.solve(&blocks.s12.transpose()).transpose();
    let mean = &blocks.mu1 + &gain * (&a.mean - &blocks.mu2);
    let mut covariance = &blocks.s11 - &gain * blocks.s12.transpose();
    if a.covariance.iter().any(|&v| v != 0.0) {
        covariance += &gain * &a.covariance * gain.transpose();
    }
    symmetrize(&mut covariance);
    Ok(PredictiveDistribution { mean, covariance })
}

/// Same conditioning carried out on the coefficients:
/// `alpha | C alpha = a` (or `C alpha ~ N(mu_a, Sigma_a)`).
pub fn condition_coefficients(
    post: &CoefficientPosterior,
    c: &DMatrix<f64>,
    a: &UncertainFunctionalValue,
) -> Result<CoefficientPosterior> {
    let n = post.dim();
    if c.ncols() != n || c.nrows() != a.mean.len() {
        return Err(dim_mismatch("functional and coefficient dimensions disagree"));
    }
    let sc = &post.covariance * c.transpose();
    let mut s22 = c * &sc;
    symmetrize(&mut s22);
    let factor = factor_s22(&s22)?;
    let gain = factor.solve(&sc.transpose()).transpose();
    let mean = &post.mean + &gain * (&a.mean - c * &post.mean);
    let mut covariance = &post.covariance - &gain * sc.transpose() + &gain * &a.covariance * gain.transpose();
    symmetrize(&mut covariance);
    CoefficientPosterior::new(mean, covariance)
}
