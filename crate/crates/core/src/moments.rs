//! Posterior distributions of output moments and Sobol indices.
//!
//! With an orthonormal basis whose first term is the constant, the output
//! mean over the input density is `alpha_1` and the output variance is
//! `sum_{i>=2} alpha_i^2`. Under a Gaussian coefficient posterior the mean
//! is Gaussian and the variance is a quadratic form (a generalized
//! chi-squared variable). Sobol ratios have no closed form and are reported
//! as sample clouds.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::MultiIndexSet;
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{is_symmetric, jittered_cholesky, psd_sqrt};
use crate::linear_bayes::CoefficientPosterior;
use crate::rng;

/// Minimum number of draws for a sample cloud.
pub const MIN_SAMPLES: usize = 1000;

/// Draws per independent random stream.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MomentKind {
    GaussianClosedForm,
    SampleCloud,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentDistribution {
    pub kind: MomentKind,
    pub mean: f64,
    pub variance: f64,
    /// Closed-form expectation, when one exists for a sampled quantity.
    pub analytic_mean: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
}

impl MomentDistribution {
    pub fn gaussian(mean: f64, variance: f64) -> Self {
        MomentDistribution {
            kind: MomentKind::GaussianClosedForm,
            mean,
            variance: variance.max(0.0),
            analytic_mean: Some(mean),
            samples: None,
        }
    }

    pub fn from_samples(samples: Vec<f64>, analytic_mean: Option<f64>) -> Self {
        let (mean, variance) = mean_var(&samples);
        MomentDistribution {
            kind: MomentKind::SampleCloud,
            mean,
            variance,
            analytic_mean,
            samples: Some(samples),
        }
    }

    /// Monte Carlo standard error of the mean (zero for closed forms).
    pub fn standard_error(&self) -> f64 {
        match &self.samples {
            Some(s) => (self.variance / s.len() as f64).sqrt(),
            None => 0.0,
        }
    }

    pub fn summary(&self) -> Summary {
        match &self.samples {
            Some(s) => Summary::from_samples(s),
            None => {
                let sd = self.variance.sqrt();
                Summary {
                    median: self.mean,
                    lower: self.mean - 1.959963984540054 * sd,
                    upper: self.mean + 1.959963984540054 * sd,
                }
            }
        }
    }
}

/// Median and central 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Summary {
    pub fn from_samples(samples: &[f64]) -> Self {
        let mut s = samples.to_vec();
        s.sort_by(|a, b| a.total_cmp(b));
        Summary {
            median: quantile_sorted(&s, 0.5),
            lower: quantile_sorted(&s, 0.025),
            upper: quantile_sorted(&s, 0.975),
        }
    }
}

pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

pub fn mean_var(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    if samples.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn check_samples(s: usize) -> Result<()> {
    if s < MIN_SAMPLES {
        return Err(Error::InvalidArgument(format!(
            "sample clouds need at least {MIN_SAMPLES} draws, got {s}"
        )));
    }
    Ok(())
}

/// Output mean over the input density: `N(mu_1, Sigma_11)`.
pub fn output_mean_distribution(post: &CoefficientPosterior) -> MomentDistribution {
    MomentDistribution::gaussian(post.mean[0], post.covariance[(0, 0)])
}

/// Analytic expectation of the output variance,
/// `sum_{i>=2} (mu_i^2 + Sigma_ii)`.
pub fn expected_output_variance(post: &CoefficientPosterior) -> f64 {
    (1..post.dim())
        .map(|i| post.mean[i].powi(2) + post.covariance[(i, i)])
        .sum()
}

/// Output variance `sum_{i>=2} alpha_i^2` as a cloud of `s` draws.
pub fn output_variance_distribution(post: &CoefficientPosterior, s: usize, seed: u64) -> Result<MomentDistribution> {
    check_samples(s)?;
    let qf = QuadraticForm::new(variance_operator(post.dim()), post.clone())?;
    let samples = qf.samples(s, seed)?;
    Ok(MomentDistribution::from_samples(samples, Some(expected_output_variance(post))))
}

/// `diag(0, 1, ..., 1)`: the quadratic form giving the output variance.
pub fn variance_operator(n: usize) -> DMatrix<f64> {
    let mut e = DMatrix::identity(n, n);
    if n > 0 {
        e[(0, 0)] = 0.0;
    }
    e
}

/// `alpha' E alpha` with `alpha` distributed as `base`.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    e: DMatrix<f64>,
    base: CoefficientPosterior,
}

impl QuadraticForm {
    pub fn new(e: DMatrix<f64>, base: CoefficientPosterior) -> Result<Self> {
        let n = base.dim();
        if e.shape() != (n, n) {
            return Err(dim_mismatch(format!(
                "quadratic form matrix is {}x{}, coefficients have dimension {n}",
                e.nrows(),
                e.ncols()
            )));
        }
        if !is_symmetric(&e, 1e-12) {
            return Err(Error::InvalidArgument("quadratic form matrix must be symmetric".into()));
        }
        Ok(QuadraticForm { e, base })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.e
    }

    /// `tr(E Sigma) + mu' E mu`.
    pub fn analytic_mean(&self) -> f64 {
        let mu = &self.base.mean;
        (&self.e * &self.base.covariance).trace() + (mu.transpose() * &self.e * mu)[(0, 0)]
    }

    /// `2 tr((E Sigma)^2) + 4 mu' E Sigma E mu`.
    pub fn analytic_variance(&self) -> f64 {
        let es = &self.e * &self.base.covariance;
        let mu = &self.base.mean;
        let emu = &self.e * mu;
        2.0 * (&es * &es).trace() + 4.0 * (emu.transpose() * &self.base.covariance * &emu)[(0, 0)]
    }

    /// Draws through the centred decomposition
    /// `(a-mu)'E(a-mu) + 2(a-mu)'E mu + mu'E mu` with `a - mu = sqrt(Sigma) z`:
    /// a weighted sum of chi-squared terms plus a Gaussian term plus a
    /// constant.
    pub fn samples(&self, s: usize, seed: u64) -> Result<Vec<f64>> {
        let root = psd_sqrt(&self.base.covariance);
        // (a-mu)'E(a-mu) = z' (R'ER) z ; 2(a-mu)'E mu = 2 z' R'E mu
        let inner = root.transpose() * &self.e * &root;
        let linear = root.transpose() * (&self.e * &self.base.mean) * 2.0;
        let constant = (self.base.mean.transpose() * &self.e * &self.base.mean)[(0, 0)];
        let n = self.base.dim();
        Ok(chunked(s, seed, |rng| {
            let z = DVector::from_vec(rng::standard_normals(rng, n));
            (z.transpose() * &inner * &z)[(0, 0)] + linear.dot(&z) + constant
        }))
    }

    /// Reference route: draw `alpha` from the multivariate normal with a
    /// Cholesky factor and evaluate `alpha' E alpha` directly.
    pub fn direct_samples(&self, s: usize, seed: u64) -> Result<Vec<f64>> {
        let draws = sample_coefficients_cholesky(&self.base, s, seed)?;
        Ok(draws
            .iter()
            .map(|a| (a.transpose() * &self.e * a)[(0, 0)])
            .collect())
    }
}

/// Runs `f` for `s` draws, using one random stream per fixed-size chunk so
/// the output depends only on `(seed, s)`.
fn chunked<T, F>(s: usize, seed: u64, mut f: F) -> Vec<T>
where
    F: FnMut(&mut rand_chacha::ChaCha8Rng) -> T,
{
    let mut out = Vec::with_capacity(s);
    let mut chunk_id = 0u64;
    while out.len() < s {
        let mut r = rng::stream(seed, chunk_id);
        let take = CHUNK.min(s - out.len());
        for _ in 0..take {
            out.push(f(&mut r));
        }
        chunk_id += 1;
    }
    out
}

/// `s` coefficient draws from the posterior (symmetric square-root factor,
/// so singular covariances are allowed).
pub fn sample_coefficients(post: &CoefficientPosterior, s: usize, seed: u64) -> Vec<DVector<f64>> {
    let root = psd_sqrt(&post.covariance);
    let n = post.dim();
    chunked(s, seed, |rng| {
        let z = DVector::from_vec(rng::standard_normals(rng, n));
        &post.mean + &root * z
    })
}

fn sample_coefficients_cholesky(post: &CoefficientPosterior, s: usize, seed: u64) -> Result<Vec<DVector<f64>>> {
    let n = post.dim();
    let l = if post.covariance.iter().all(|&v| v == 0.0) {
        DMatrix::zeros(n, n)
    } else {
        jittered_cholesky(&post.covariance, "coefficient covariance")?
            .chol
            .l()
    };
    // Distinct stream family from `sample_coefficients`.
    let seed = seed ^ 0x9e37_79b9_7f4a_7c15;
    Ok(chunked(s, seed, |rng| {
        let z = DVector::from_vec(rng::standard_normals(rng, n));
        &post.mean + &l * z
    }))
}

/// Tuples of `idx` whose component along `dim` (zero-based) equals `degree`.
pub fn subselect(idx: &MultiIndexSet, degree: usize, dim: usize) -> Result<MultiIndexSet> {
    if dim >= idx.dim() {
        return Err(Error::InvalidArgument(format!(
            "direction {dim} out of range for a {}-dimensional index set",
            idx.dim()
        )));
    }
    let kept = idx
        .iter()
        .filter(|t| t[dim] == degree)
        .map(|t| t.to_vec())
        .collect();
    Ok(idx.derived(kept))
}

/// Terms that depend on input `dim` alone: the union of `subselect(p, dim)`
/// over `p >= 1`, restricted to tuples that vanish in every other direction.
pub fn first_order_set(idx: &MultiIndexSet, dim: usize) -> Result<MultiIndexSet> {
    let mut kept = Vec::new();
    for p in 1..=idx.max_component() {
        let sub = subselect(idx, p, dim)?;
        kept.extend(
            sub.iter()
                .filter(|t| t.iter().enumerate().all(|(k, &j)| k == dim || j == 0))
                .map(|t| t.to_vec()),
        );
    }
    Ok(idx.derived(kept))
}

/// Terms involving input `dim` at all (total-effect set).
pub fn total_effect_set(idx: &MultiIndexSet, dim: usize) -> Result<MultiIndexSet> {
    if dim >= idx.dim() {
        return Err(Error::InvalidArgument(format!("direction {dim} out of range")));
    }
    let kept = idx.iter().filter(|t| t[dim] > 0).map(|t| t.to_vec()).collect();
    Ok(idx.derived(kept))
}

/// Terms whose active inputs are exactly `dims`. Summing the Sobol ratios of
/// these sets over every non-empty subset of inputs gives one.
pub fn interaction_set(idx: &MultiIndexSet, dims: &[usize]) -> Result<MultiIndexSet> {
    if let Some(&k) = dims.iter().find(|&&k| k >= idx.dim()) {
        return Err(Error::InvalidArgument(format!("direction {k} out of range")));
    }
    let kept = idx
        .iter()
        .filter(|t| (0..t.len()).all(|k| (t[k] > 0) == dims.contains(&k)))
        .map(|t| t.to_vec())
        .collect();
    Ok(idx.derived(kept))
}

/// Draws of `sum_{i in subsel} alpha_i^2 / sum_{i>=2} alpha_i^2`, sharing
/// each coefficient draw between numerator and denominator. The constant
/// term is never counted in the numerator.
pub fn sobol_ratio_samples(
    post: &CoefficientPosterior,
    idx: &MultiIndexSet,
    subsel: &MultiIndexSet,
    s: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if post.dim() != idx.len() {
        return Err(dim_mismatch("posterior and index set sizes differ"));
    }
    let positions: Vec<usize> = idx
        .positions_of(subsel)?
        .into_iter()
        .filter(|&p| idx.get(p).is_some_and(|t| t.iter().any(|&j| j > 0)))
        .collect();
    let degenerate = (1..post.dim())
        .all(|i| post.mean[i] == 0.0 && post.covariance[(i, i)] == 0.0);
    if degenerate {
        return Err(Error::InvalidArgument(
            "output variance is identically zero; Sobol ratio undefined".into(),
        ));
    }
    let draws = sample_coefficients(post, s, seed);
    draws
        .iter()
        .map(|a| {
            let total: f64 = a.iter().skip(1).map(|v| v * v).sum();
            if total <= 0.0 {
                return Err(Error::Singular("zero output variance in a draw".into()));
            }
            let part: f64 = positions.iter().map(|&p| a[p] * a[p]).sum();
            Ok(part / total)
        })
        .collect()
}

/// Posterior summary of a Sobol ratio.
pub fn sobol_index(
    post: &CoefficientPosterior,
    idx: &MultiIndexSet,
    subsel: &MultiIndexSet,
    s: usize,
    seed: u64,
) -> Result<MomentDistribution> {
    check_samples(s)?;
    Ok(MomentDistribution::from_samples(sobol_ratio_samples(post, idx, subsel, s, seed)?, None))
}
