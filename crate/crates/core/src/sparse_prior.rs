//! Regularized horseshoe prior over polynomial coefficients.
//!
//! ```text
//! lambda~_i, tau~ ~ HalfCauchy(1)
//! c^2            ~ InverseGamma(nu/2, nu s^2 / 2)
//! tau             = tau0 * tau~,  tau0 = beta sqrt(s2) / ((1 - beta) sqrt(M))
//! lambda_i        = c lambda~_i / sqrt(c^2 + tau^2 lambda~_i^2)
//! alpha_i         ~ N(0, (tau lambda_i)^2)
//! ```
//!
//! The local-scale formula is the standard regularized form with
//! `lambda~_i` under the square root. It implies
//! `1 / (tau lambda_i)^2 = 1 / (tau lambda~_i)^2 + 1 / c^2`, so every prior
//! standard deviation is capped by the slab width `c`.
//!
//! Sampling integrates the coefficients out (the model is conditionally
//! Gaussian given the scales), runs HMC on the `N + 2` positive scale
//! parameters and then draws `alpha` from its Gaussian conditional.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::DesignMatrix;
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{jittered_cholesky, symmetrize};
use crate::moments::Summary;
use crate::rng;
use crate::sampler::{gradient_check, sample, ChainConfig, LogDensityModel, SampleBatch, Transform};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeConfig {
    pub nu: f64,
    pub s: f64,
    pub beta: f64,
    pub noise_variance: f64,
    /// Number of training points entering the global scale.
    pub m: usize,
}

impl HorseshoeConfig {
    pub fn new(nu: f64, s: f64, beta: f64, noise_variance: f64, m: usize) -> Result<Self> {
        let cfg = HorseshoeConfig {
            nu,
            s,
            beta,
            noise_variance,
            m,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.s > 0.0) {
            return Err(Error::InvalidArgument("horseshoe nu and s must be positive".into()));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidArgument("horseshoe beta must lie in (0, 1)".into()));
        }
        if !(self.noise_variance > 0.0) || self.m == 0 {
            return Err(Error::InvalidArgument(
                "horseshoe needs positive noise variance and at least one point".into(),
            ));
        }
        Ok(())
    }

    /// Global scale `tau0`.
    pub fn tau(&self) -> f64 {
        tau(self)
    }

    fn ig_shape(&self) -> f64 {
        self.nu / 2.0
    }

    fn ig_scale(&self) -> f64 {
        self.nu * self.s * self.s / 2.0
    }
}

/// `beta sqrt(s2) / ((1 - beta) sqrt(M))`.
pub fn tau(cfg: &HorseshoeConfig) -> f64 {
    cfg.beta * cfg.noise_variance.sqrt() / ((1.0 - cfg.beta) * (cfg.m as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct HorseshoeState {
    pub lambda_tilde: Vec<f64>,
    pub tau_tilde: f64,
    pub c2: f64,
    pub alpha: Vec<f64>,
}

impl HorseshoeState {
    /// Regularized local scales `lambda_i`.
    pub fn lambda(&self, cfg: &HorseshoeConfig) -> Vec<f64> {
        let t = cfg.tau() * self.tau_tilde;
        self.lambda_tilde
            .iter()
            .map(|&l| self.c2.sqrt() * l / (self.c2 + t * t * l * l).sqrt())
            .collect()
    }

    /// Prior standard deviations `tau lambda_i` of the coefficients.
    pub fn prior_sd(&self, cfg: &HorseshoeConfig) -> Vec<f64> {
        let t = cfg.tau() * self.tau_tilde;
        self.lambda(cfg).into_iter().map(|l| t * l).collect()
    }
}

/// `log HalfCauchy(x; 1)` up to a constant, and its derivative.
fn half_cauchy(x: f64) -> (f64, f64) {
    (-(1.0 + x * x).ln(), -2.0 * x / (1.0 + x * x))
}

/// `log InverseGamma(x; a, b)` up to a constant, and its derivative.
fn inverse_gamma(x: f64, a: f64, b: f64) -> (f64, f64) {
    (-(a + 1.0) * x.ln() - b / x, -(a + 1.0) / x + b / (x * x))
}

/// Prior precisions `1/(tau lambda_i)^2 = 1/(tau0 tau~ lambda~_i)^2 + 1/c^2`
/// with derivatives with respect to `lambda~_i`, `tau~` and `c^2`.
struct Precisions {
    value: Vec<f64>,
    d_lambda: Vec<f64>,
    d_tau: Vec<f64>,
    d_c2: f64,
}

fn precisions(lambda_tilde: &[f64], tau_tilde: f64, c2: f64, tau0: f64) -> Precisions {
    let t = tau0 * tau_tilde;
    let mut value = Vec::with_capacity(lambda_tilde.len());
    let mut d_lambda = Vec::with_capacity(lambda_tilde.len());
    let mut d_tau = Vec::with_capacity(lambda_tilde.len());
    for &l in lambda_tilde {
        let raw = 1.0 / (t * t * l * l);
        value.push(raw + 1.0 / c2);
        d_lambda.push(-2.0 * raw / l);
        d_tau.push(-2.0 * raw / tau_tilde);
    }
    Precisions {
        value,
        d_lambda,
        d_tau,
        d_c2: -1.0 / (c2 * c2),
    }
}

fn check_data(v: &DesignMatrix, y: &DVector<f64>) -> Result<()> {
    if v.nrows() != y.len() {
        return Err(dim_mismatch(format!(
            "{} design rows but {} outputs",
            v.nrows(),
            y.len()
        )));
    }
    Ok(())
}

/// Joint unnormalized log posterior of the centred hierarchy and its
/// gradient, ordered `[lambda~ (N), tau~, c^2, alpha (N)]`.
pub fn horseshoe_logdensity(
    state: &HorseshoeState,
    cfg: &HorseshoeConfig,
    v: &DesignMatrix,
    y: &DVector<f64>,
) -> Result<(f64, Vec<f64>)> {
    check_data(v, y)?;
    let n = v.ncols();
    if state.lambda_tilde.len() != n || state.alpha.len() != n {
        return Err(dim_mismatch("horseshoe state does not match the basis size"));
    }
    if state.lambda_tilde.iter().any(|&l| !(l > 0.0)) || !(state.tau_tilde > 0.0) || !(state.c2 > 0.0) {
        return Err(Error::InvalidArgument("horseshoe scales must be positive".into()));
    }
    let mut grad = vec![0.0; 2 * n + 2];
    let mut lp = 0.0;
    for (i, &l) in state.lambda_tilde.iter().enumerate() {
        let (f, g) = half_cauchy(l);
        lp += f;
        grad[i] = g;
    }
    let (f, g) = half_cauchy(state.tau_tilde);
    lp += f;
    grad[n] = g;
    let (f, g) = inverse_gamma(state.c2, cfg.ig_shape(), cfg.ig_scale());
    lp += f;
    grad[n + 1] = g;

    let prec = precisions(&state.lambda_tilde, state.tau_tilde, state.c2, cfg.tau());
    for i in 0..n {
        let a = state.alpha[i];
        let p = prec.value[i];
        lp += 0.5 * p.ln() - 0.5 * a * a * p;
        let dp = 0.5 / p - 0.5 * a * a;
        grad[i] += dp * prec.d_lambda[i];
        grad[n] += dp * prec.d_tau[i];
        grad[n + 1] += dp * prec.d_c2;
        grad[n + 2 + i] = -a * p;
    }

    let alpha = DVector::from_column_slice(&state.alpha);
    let resid = v.weight_outputs(y) - &v.values * &alpha;
    let inv_s2 = 1.0 / cfg.noise_variance;
    lp -= 0.5 * inv_s2 * resid.norm_squared();
    let g_alpha = v.values.transpose() * resid * inv_s2;
    for i in 0..n {
        grad[n + 2 + i] += g_alpha[i];
    }
    Ok((lp, grad))
}

/// The centred joint hierarchy as a sampler model.
pub struct HorseshoeJointModel<'a> {
    pub cfg: HorseshoeConfig,
    pub v: &'a DesignMatrix,
    pub y: &'a DVector<f64>,
}

impl LogDensityModel for HorseshoeJointModel<'_> {
    fn dim(&self) -> usize {
        2 * self.v.ncols() + 2
    }

    fn transforms(&self) -> Vec<Transform> {
        let n = self.v.ncols();
        let mut t = vec![Transform::Log; n + 2];
        t.extend(std::iter::repeat_n(Transform::Identity, n));
        t
    }

    fn log_density(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let n = self.v.ncols();
        let state = HorseshoeState {
            lambda_tilde: x[..n].to_vec(),
            tau_tilde: x[n],
            c2: x[n + 1],
            alpha: x[n + 2..].to_vec(),
        };
        let (lp, g) = horseshoe_logdensity(&state, &self.cfg, self.v, self.y)?;
        grad.copy_from_slice(&g);
        Ok(lp)
    }
}

/// Gaussian marginal likelihood `y ~ N(0, V D V' + s2 I)` with
/// `D = diag(d_i)`; returns the log density and `d/d d_i`.
fn marginal_likelihood(
    v: &DMatrix<f64>,
    y: &DVector<f64>,
    d: &[f64],
    noise_variance: f64,
) -> Result<(f64, Vec<f64>)> {
    let m = v.nrows();
    let mut vd = v.clone();
    for (j, &dj) in d.iter().enumerate() {
        vd.column_mut(j).scale_mut(dj);
    }
    let mut k = &vd * v.transpose();
    for i in 0..m {
        k[(i, i)] += noise_variance;
    }
    symmetrize(&mut k);
    let factor = jittered_cholesky(&k, "horseshoe marginal covariance")?;
    let beta = factor.solve_vec(y);
    let lp = -0.5 * y.dot(&beta) - 0.5 * factor.log_det() - 0.5 * m as f64 * (2.0 * std::f64::consts::PI).ln();
    let kinv_v = factor.solve(v);
    let vt_beta = v.transpose() * &beta;
    let grad = (0..d.len())
        .map(|j| 0.5 * vt_beta[j].powi(2) - 0.5 * v.column(j).dot(&kinv_v.column(j)))
        .collect();
    Ok((lp, grad))
}

/// Horseshoe with the coefficients integrated out; parameters
/// `[lambda~ (N), tau~, c^2]`, all positive.
pub struct HorseshoeMarginalModel<'a> {
    cfg: HorseshoeConfig,
    v: &'a DesignMatrix,
    y: DVector<f64>,
}

impl<'a> HorseshoeMarginalModel<'a> {
    pub fn new(cfg: HorseshoeConfig, v: &'a DesignMatrix, y: &DVector<f64>) -> Result<Self> {
        cfg.validate()?;
        check_data(v, y)?;
        Ok(HorseshoeMarginalModel {
            cfg,
            v,
            y: v.weight_outputs(y),
        })
    }
}

impl LogDensityModel for HorseshoeMarginalModel<'_> {
    fn dim(&self) -> usize {
        self.v.ncols() + 2
    }

    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Log; self.dim()]
    }

    fn parameter_names(&self) -> Vec<String> {
        let n = self.v.ncols();
        let mut names: Vec<String> = (0..n).map(|i| format!("lambda_tilde[{i}]")).collect();
        names.push("tau_tilde".into());
        names.push("c2".into());
        names
    }

    fn log_density(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let n = self.v.ncols();
        let (lambda_tilde, tau_tilde, c2) = (&x[..n], x[n], x[n + 1]);
        let mut lp = 0.0;
        for i in 0..n {
            let (f, g) = half_cauchy(lambda_tilde[i]);
            lp += f;
            grad[i] = g;
        }
        let (f, g) = half_cauchy(tau_tilde);
        lp += f;
        grad[n] = g;
        let (f, g) = inverse_gamma(c2, self.cfg.ig_shape(), self.cfg.ig_scale());
        lp += f;
        grad[n + 1] = g;

        let prec = precisions(lambda_tilde, tau_tilde, c2, self.cfg.tau());
        let d: Vec<f64> = prec.value.iter().map(|p| 1.0 / p).collect();
        let (ll, g_d) = marginal_likelihood(&self.v.values, &self.y, &d, self.cfg.noise_variance)?;
        lp += ll;
        for i in 0..n {
            // d = 1/p  =>  dd/dp = -d^2
            let g_p = -g_d[i] * d[i] * d[i];
            grad[i] += g_p * prec.d_lambda[i];
            grad[n] += g_p * prec.d_tau[i];
            grad[n + 1] += g_p * prec.d_c2;
        }
        Ok(lp)
    }
}

/// Isotropic Gaussian prior `alpha ~ N(0, v_tau I)` with a HalfNormal(1)
/// hyperprior on the prior variance `v_tau`, coefficients integrated out.
pub struct HierarchicalGaussianModel<'a> {
    v: &'a DesignMatrix,
    y: DVector<f64>,
    noise_variance: f64,
}

impl<'a> HierarchicalGaussianModel<'a> {
    pub fn new(v: &'a DesignMatrix, y: &DVector<f64>, noise_variance: f64) -> Result<Self> {
        check_data(v, y)?;
        if !(noise_variance > 0.0) {
            return Err(Error::InvalidArgument("noise variance must be positive".into()));
        }
        Ok(HierarchicalGaussianModel {
            v,
            y: v.weight_outputs(y),
            noise_variance,
        })
    }
}

impl LogDensityModel for HierarchicalGaussianModel<'_> {
    fn dim(&self) -> usize {
        1
    }

    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Log]
    }

    fn parameter_names(&self) -> Vec<String> {
        vec!["prior_variance".into()]
    }

    fn log_density(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let var = x[0];
        let n = self.v.ncols();
        let d = vec![var; n];
        let (ll, g_d) = marginal_likelihood(&self.v.values, &self.y, &d, self.noise_variance)?;
        grad[0] = g_d.iter().sum::<f64>() - var;
        Ok(ll - 0.5 * var * var)
    }
}

/// Conditional posterior of `alpha` given prior precisions `p_i`:
/// precision `V'V / s2 + diag(p)`.
struct ConditionalCoefficients {
    mean: DVector<f64>,
    chol_l: DMatrix<f64>,
}

fn conditional_coefficients(
    v: &DesignMatrix,
    y_w: &DVector<f64>,
    prior_precision: &[f64],
    noise_variance: f64,
) -> Result<ConditionalCoefficients> {
    let inv_s2 = 1.0 / noise_variance;
    let vt = v.values.transpose();
    let mut prec = (&vt * &v.values) * inv_s2;
    for (i, p) in prior_precision.iter().enumerate() {
        prec[(i, i)] += p;
    }
    symmetrize(&mut prec);
    let factor = jittered_cholesky(&prec, "conditional coefficient precision")?;
    let mean = factor.solve_vec(&(vt * y_w * inv_s2));
    Ok(ConditionalCoefficients {
        mean,
        chol_l: factor.chol.l(),
    })
}

impl ConditionalCoefficients {
    /// `mean + L^-T z`, with `L L'` the precision.
    fn draw(&self, z: DVector<f64>) -> DVector<f64> {
        let w = self
            .chol_l
            .transpose()
            .solve_upper_triangular(&z)
            .expect("Cholesky factor has a positive diagonal");
        &self.mean + w
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparsePriorKind {
    Horseshoe,
    HierarchicalGaussian,
}

/// Result of a hierarchical fit.
#[derive(Debug, Clone)]
pub struct SparseFit {
    pub kind: SparsePriorKind,
    pub config: Option<HorseshoeConfig>,
    /// Hyperparameter draws.
    pub hyper: SampleBatch,
    /// Coefficient draws (one per retained hyperparameter draw).
    pub coefficient_draws: Vec<DVector<f64>>,
    /// Rao-Blackwellized posterior mean over all hyperparameter draws.
    pub posterior_mean: DVector<f64>,
    pub summaries: Vec<Summary>,
    pub std_devs: DVector<f64>,
    /// Posterior mean of `1 / (1 + M s_i^2 / s2)` (horseshoe only).
    pub shrinkage: Option<DVector<f64>>,
}

/// Upper bound on conditional coefficient draws kept in a fit.
pub const MAX_COEFFICIENT_DRAWS: usize = 1000;

/// Samples the horseshoe posterior for `y ~ N(V alpha, s2 I)`.
pub fn fit_sparse(v: &DesignMatrix, y: &DVector<f64>, cfg: &HorseshoeConfig, chain: &ChainConfig) -> Result<SparseFit> {
    let model = HorseshoeMarginalModel::new(*cfg, v, y)?;
    let check = gradient_check(&model, 3, chain.seed);
    if !check.passes(1e-4) {
        return Err(Error::Sampler(format!(
            "horseshoe gradient check failed (relative error {:e})",
            check.max_relative_error
        )));
    }
    let hyper = sample(&model, chain)?;
    let n = v.ncols();
    let tau0 = cfg.tau();
    let prec_of = |d: &[f64]| precisions(&d[..n], d[n], d[n + 1], tau0).value;
    let m = v.nrows() as f64;
    let shrink_of = |p: &[f64]| -> Vec<f64> {
        p.iter()
            .map(|p| 1.0 / (1.0 + m / (p * cfg.noise_variance)))
            .collect()
    };
    finish_fit(SparsePriorKind::Horseshoe, Some(*cfg), v, y, cfg.noise_variance, hyper, chain.seed, prec_of, Some(&shrink_of))
}

/// Baseline: isotropic Gaussian prior with HalfNormal(1) prior variance.
pub fn fit_hierarchical_gaussian(
    v: &DesignMatrix,
    y: &DVector<f64>,
    noise_variance: f64,
    chain: &ChainConfig,
) -> Result<SparseFit> {
    let model = HierarchicalGaussianModel::new(v, y, noise_variance)?;
    let hyper = sample(&model, chain)?;
    let n = v.ncols();
    let prec_of = |d: &[f64]| vec![1.0 / d[0]; n];
    finish_fit(SparsePriorKind::HierarchicalGaussian, None, v, y, noise_variance, hyper, chain.seed, prec_of, None)
}

#[allow(clippy::too_many_arguments)]
fn finish_fit(
    kind: SparsePriorKind,
    config: Option<HorseshoeConfig>,
    v: &DesignMatrix,
    y: &DVector<f64>,
    noise_variance: f64,
    hyper: SampleBatch,
    seed: u64,
    prec_of: impl Fn(&[f64]) -> Vec<f64>,
    shrink_of: Option<&dyn Fn(&[f64]) -> Vec<f64>>,
) -> Result<SparseFit> {
    let n = v.ncols();
    let y_w = v.weight_outputs(y);
    let total = hyper.total_draws();
    let stride = total.div_ceil(MAX_COEFFICIENT_DRAWS).max(1);
    let mut mean_acc = DVector::zeros(n);
    let mut shrink_acc = DVector::zeros(n);
    let mut draws = Vec::new();
    let mut rng = rng::stream(seed, 0xc0ef);
    for (k, d) in hyper.iter_draws().enumerate() {
        let p = prec_of(d);
        let cond = conditional_coefficients(v, &y_w, &p, noise_variance)?;
        mean_acc += &cond.mean;
        if let Some(f) = shrink_of {
            shrink_acc += DVector::from_vec(f(&p));
        }
        if k % stride == 0 {
            let z = DVector::from_vec(rng::standard_normals(&mut rng, n));
            draws.push(cond.draw(z));
        }
    }
    let posterior_mean = mean_acc / total as f64;
    let summaries = (0..n)
        .map(|i| Summary::from_samples(&draws.iter().map(|a| a[i]).collect::<Vec<_>>()))
        .collect();
    let std_devs = DVector::from_fn(n, |i, _| {
        let m = draws.iter().map(|a| a[i]).sum::<f64>() / draws.len() as f64;
        (draws.iter().map(|a| (a[i] - m).powi(2)).sum::<f64>() / (draws.len().max(2) - 1) as f64).sqrt()
    });
    Ok(SparseFit {
        kind,
        config,
        hyper,
        coefficient_draws: draws,
        posterior_mean,
        summaries,
        std_devs,
        shrinkage: shrink_of.map(|_| shrink_acc / total as f64),
    })
}
