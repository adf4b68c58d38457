//! Conjugate Gaussian inference for polynomial coefficients.
//!
//! With likelihood `y ~ N(V alpha, s2 I)` and prior `alpha ~ N(mu_p, S_p)`
//! the posterior is Gaussian with
//!
//! ```text
//! S_post  = (V'V / s2 + S_p^-1)^-1
//! mu_post = S_post (V'y / s2 + S_p^-1 mu_p)
//! ```
//!
//! The noise enters as a variance throughout. Note on the "diffuse" limit:
//! least squares is recovered as the prior *precision* goes to zero (prior
//! covariance to infinity); shrinking the prior covariance to zero instead
//! pins the posterior at the prior mean.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{design_matrix, DesignMatrix, InputSpace, MultiIndexSet};
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{is_symmetric, jittered_cholesky, symmetrize};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPrior {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl GaussianPrior {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if covariance.nrows() != n || covariance.ncols() != n {
            return Err(dim_mismatch(format!(
                "prior mean has length {n}, covariance is {}x{}",
                covariance.nrows(),
                covariance.ncols()
            )));
        }
        if !is_symmetric(&covariance, 1e-12) {
            return Err(Error::InvalidArgument("prior covariance is not symmetric".into()));
        }
        jittered_cholesky(&covariance, "prior covariance")?;
        Ok(GaussianPrior { mean, covariance })
    }

    /// `N(0, variance * I)`.
    pub fn isotropic(n: usize, variance: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "prior variance must be positive, got {variance}"
            )));
        }
        Ok(GaussianPrior {
            mean: DVector::zeros(n),
            covariance: DMatrix::identity(n, n) * variance,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

impl From<CoefficientPosterior> for GaussianPrior {
    /// Posterior of one batch reused as the prior of the next.
    fn from(p: CoefficientPosterior) -> Self {
        GaussianPrior {
            mean: p.mean,
            covariance: p.covariance,
        }
    }
}

/// Observation noise variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    variance: f64,
}

impl NoiseSpec {
    pub fn new(variance: f64) -> Result<Self> {
        if !(variance > 0.0 && variance.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "noise variance must be positive, got {variance}"
            )));
        }
        Ok(NoiseSpec { variance })
    }

    pub fn variance(&self) -> f64 {
        self.variance
    }
}

/// Gaussian posterior over coefficients, ordered as the index set.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientPosterior {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl CoefficientPosterior {
    pub fn new(mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if covariance.shape() != (n, n) {
            return Err(dim_mismatch("posterior mean and covariance disagree"));
        }
        Ok(CoefficientPosterior { mean, covariance })
    }

    /// Point mass at `alpha`.
    pub fn deterministic(alpha: DVector<f64>) -> Self {
        let n = alpha.len();
        CoefficientPosterior {
            mean: alpha,
            covariance: DMatrix::zeros(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn std_devs(&self) -> DVector<f64> {
        self.covariance.diagonal().map(|v| v.max(0.0).sqrt())
    }
}

/// Joint Gaussian over the surrogate at a set of points.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDistribution {
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl PredictiveDistribution {
    pub fn len(&self) -> usize {
        self.mean.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.is_empty()
    }

    pub fn std_devs(&self) -> DVector<f64> {
        self.covariance.diagonal().map(|v| v.max(0.0).sqrt())
    }
}

/// Posterior for `y = V alpha + eps`, `eps ~ N(0, noise I)`.
pub fn conjugate_posterior(
    v: &DesignMatrix,
    y: &DVector<f64>,
    prior: &GaussianPrior,
    noise: NoiseSpec,
) -> Result<CoefficientPosterior> {
    let (m, n) = v.values.shape();
    if m == 0 {
        return Err(Error::InvalidArgument("no observations".into()));
    }
    if y.len() != m {
        return Err(dim_mismatch(format!("{m} design rows but {} outputs", y.len())));
    }
    if prior.dim() != n {
        return Err(dim_mismatch(format!(
            "design has {n} columns, prior has dimension {}",
            prior.dim()
        )));
    }
    let prior_factor = jittered_cholesky(&prior.covariance, "prior covariance")?;
    let prior_precision = prior_factor.inverse();

    let inv_noise = 1.0 / noise.variance();
    let vt = v.values.transpose();
    let y_w = v.weight_outputs(y);
    let mut precision = (&vt * &v.values) * inv_noise + &prior_precision;
    symmetrize(&mut precision);
    let rhs = (&vt * &y_w) * inv_noise + &prior_precision * &prior.mean;

    let factor = jittered_cholesky(&precision, "posterior precision")?;
    let mean = factor.solve_vec(&rhs);
    let covariance = factor.inverse();
    Ok(CoefficientPosterior { mean, covariance })
}

/// Surrogate distribution at the rows of `x_star`.
pub fn predictive(
    posterior: &CoefficientPosterior,
    space: &InputSpace,
    idx: &MultiIndexSet,
    x_star: &DMatrix<f64>,
) -> Result<PredictiveDistribution> {
    if posterior.dim() != idx.len() {
        return Err(dim_mismatch(format!(
            "posterior has {} coefficients, index set has {}",
            posterior.dim(),
            idx.len()
        )));
    }
    let v = design_matrix(space, idx, x_star, None)?;
    Ok(predictive_from_design(posterior, &v))
}

pub fn predictive_from_design(posterior: &CoefficientPosterior, v: &DesignMatrix) -> PredictiveDistribution {
    let mean = &v.values * &posterior.mean;
    let mut covariance = &v.values * &posterior.covariance * v.values.transpose();
    symmetrize(&mut covariance);
    PredictiveDistribution { mean, covariance }
}

/// Coefficients implied by the kernel-form predictor with polynomial kernel
/// `k(x, x') = v(x)' Sigma v(x')`:
/// `alpha = Sigma V' (V Sigma V' + noise I)^-1 y`.
pub fn kernel_posterior_coefficients(
    sigma: &DMatrix<f64>,
    v: &DesignMatrix,
    y: &DVector<f64>,
    noise: NoiseSpec,
) -> Result<DVector<f64>> {
    let (m, n) = v.values.shape();
    if sigma.shape() != (n, n) {
        return Err(dim_mismatch(format!(
            "kernel matrix is {}x{}, design has {n} columns",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    if y.len() != m {
        return Err(dim_mismatch(format!("{m} design rows but {} outputs", y.len())));
    }
    let sv = sigma * v.values.transpose();
    let mut gram = &v.values * &sv;
    for i in 0..m {
        gram[(i, i)] += noise.variance();
    }
    symmetrize(&mut gram);
    let factor = jittered_cholesky(&gram, "kernel system")
        .map_err(|e| Error::Singular(format!("kernel system: {e}")))?;
    let weights = factor.solve_vec(&v.weight_outputs(y));
    Ok(sv * weights)
}

/// Prior centred on coefficients fitted to related (e.g. low-fidelity) data.
pub fn physically_informed_prior(coeffs: DVector<f64>, scale: DMatrix<f64>) -> Result<GaussianPrior> {
    GaussianPrior::new(coeffs, scale)
}

/// Ordinary least-squares coefficients via SVD; used to fit the dense
/// low-fidelity data that seeds an informed prior.
pub fn least_squares(v: &DesignMatrix, y: &DVector<f64>) -> Result<DVector<f64>> {
    if y.len() != v.nrows() {
        return Err(dim_mismatch("least squares: rows and outputs differ"));
    }
    let svd = v.values.clone().svd(true, true);
    svd.solve(&v.weight_outputs(y), 1e-12)
        .map_err(|e| Error::Singular(format!("least squares: {e}")))
}
