use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::basis::{basis_vector, InputSpace, MultiIndexSet};
use crate::error::{dim_mismatch, Error, Result};
use crate::moments::MIN_SAMPLES;
use crate::rng;

/// Both normalizations of the test error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizedRmse {
    /// `sqrt(sum r^2) / (M sigma^(1/2))`, exactly as the metric is usually
    /// printed for these experiments.
    pub printed: f64,
    /// `sqrt(mean r^2) / sigma`.
    pub conventional: f64,
}

pub fn normalized_rmse(y_test: &DVector<f64>, y_pred: &DVector<f64>, output_sd: f64) -> Result<NormalizedRmse> {
    if y_test.len() != y_pred.len() {
        return Err(dim_mismatch("test outputs and predictions differ in length"));
    }
    if y_test.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    if !(output_sd > 0.0) {
        return Err(Error::InvalidArgument("output standard deviation must be positive".into()));
    }
    let m = y_test.len() as f64;
    let ss = (y_test - y_pred).norm_squared();
    Ok(NormalizedRmse {
        printed: ss.sqrt() / (m * output_sd.sqrt()),
        conventional: (ss / m).sqrt() / output_sd,
    })
}

/// Brute-force moments of a function of the random inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleMoments {
    pub mean: f64,
    pub variance: f64,
    pub mean_se: f64,
    pub variance_se: f64,
    pub n_samples: usize,
}

/// Monte Carlo mean and variance of `g(X)`, `X ~ space`, with standard
/// errors from the sample second and fourth central moments.
pub fn mc_oracle<F: Fn(&[f64]) -> f64>(space: &InputSpace, g: F, n_samples: usize, seed: u64) -> Result<OracleMoments> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_SAMPLES} samples required, got {n_samples}"
        )));
    }
    let mut r = rng::stream(seed, 0);
    let mut x = vec![0.0; space.dim()];
    let mut values = Vec::with_capacity(n_samples);
    for _ in 0..n_samples {
        for (xi, m) in x.iter_mut().zip(space.marginals()) {
            *xi = m.sample(&mut r);
        }
        values.push(g(&x));
    }
    let n = n_samples as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m4) = (0.0, 0.0);
    for v in &values {
        let d2 = (v - mean).powi(2);
        m2 += d2;
        m4 += d2 * d2;
    }
    m2 /= n;
    m4 /= n;
    let variance = m2 * n / (n - 1.0);
    Ok(OracleMoments {
        mean,
        variance,
        mean_se: (variance / n).sqrt(),
        variance_se: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
        n_samples,
    })
}

/// [`mc_oracle`] for the expansion with coefficients `alpha`.
pub fn mc_oracle_expansion(
    space: &InputSpace,
    idx: &MultiIndexSet,
    alpha: &DVector<f64>,
    n_samples: usize,
    seed: u64,
) -> Result<OracleMoments> {
    if alpha.len() != idx.len() {
        return Err(dim_mismatch("coefficient vector and basis differ in length"));
    }
    if space.dim() != idx.dim() {
        return Err(dim_mismatch("input space and index set differ in dimension"));
    }
    mc_oracle(
        space,
        |x| basis_vector(space, idx, x).map(|v| v.dot(alpha)).unwrap_or(f64::NAN),
        n_samples,
        seed,
    )
}

/// Median of a slice (NaN when empty).
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    crate::moments::quantile_sorted(&v, 0.5)
}
