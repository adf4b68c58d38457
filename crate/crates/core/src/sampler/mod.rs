//! Hamiltonian Monte Carlo for the non-conjugate hierarchical models.
//!
//! Static-trajectory HMC with a jittered number of leapfrog steps,
//! dual-averaging step-size adaptation and a diagonal metric estimated in
//! doubling warmup windows. Positive parameters are sampled on the log
//! scale with the Jacobian term added automatically; draws are returned in
//! the constrained space.

mod adapt;
mod diagnostics;

use rand::RngExt;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub use adapt::{DualAverage, VarianceWindow, WarmupSchedule};
pub use diagnostics::{ess, param_diagnostics, ParamDiagnostics};

/// Map from the sampler's unconstrained coordinate to a model parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Identity,
    /// `x = exp(theta)`, for strictly positive parameters.
    Log,
}

impl Transform {
    fn forward(self, theta: f64) -> f64 {
        match self {
            Transform::Identity => theta,
            Transform::Log => theta.exp(),
        }
    }

    pub fn inverse(self, x: f64) -> f64 {
        match self {
            Transform::Identity => x,
            Transform::Log => x.ln(),
        }
    }
}

/// Unnormalized log density with analytic gradient, in constrained
/// coordinates.
pub trait LogDensityModel {
    fn dim(&self) -> usize;

    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Identity; self.dim()]
    }

    /// Returns `log p(x)` and writes `d log p / dx` into `grad`.
    fn log_density(&self, x: &[f64], grad: &mut [f64]) -> Result<f64>;

    fn parameter_names(&self) -> Vec<String> {
        (0..self.dim()).map(|i| format!("theta[{i}]")).collect()
    }
}

/// Log density in the unconstrained coordinates, Jacobian included.
pub fn unconstrained_log_density<M: LogDensityModel + ?Sized>(
    model: &M,
    transforms: &[Transform],
    theta: &[f64],
    grad: &mut [f64],
) -> f64 {
    let x: Vec<f64> = theta
        .iter()
        .zip(transforms)
        .map(|(&t, tr)| tr.forward(t))
        .collect();
    if x.iter().any(|v| !v.is_finite()) {
        return f64::NEG_INFINITY;
    }
    let mut lp = match model.log_density(&x, grad) {
        Ok(v) if v.is_finite() => v,
        _ => return f64::NEG_INFINITY,
    };
    for i in 0..theta.len() {
        if let Transform::Log = transforms[i] {
            // dx/dtheta = x ; log|J| = theta
            grad[i] = grad[i] * x[i] + 1.0;
            lp += theta[i];
        }
    }
    if grad.iter().any(|g| !g.is_finite()) {
        return f64::NEG_INFINITY;
    }
    lp
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    #[serde(alias = "chains")]
    pub n_chains: usize,
    pub warmup: usize,
    pub draws: usize,
    pub seed: u64,
    pub target_accept: f64,
    pub max_leapfrog: usize,
    /// Mean integration time of a trajectory, in whitened units.
    pub trajectory_length: f64,
    /// Standard deviation of the unconstrained starting point.
    pub init_scale: f64,
}

fn default_trajectory_length() -> f64 {
    2.0
}

fn default_init_scale() -> f64 {
    0.1
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            n_chains: 4,
            warmup: 1000,
            draws: 1000,
            seed: 0,
            target_accept: 0.8,
            max_leapfrog: 256,
            trajectory_length: default_trajectory_length(),
            init_scale: default_init_scale(),
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains < 2 {
            return Err(Error::Config("at least two chains are required".into()));
        }
        if self.warmup < 100 {
            return Err(Error::Config("warmup must be at least 100 iterations".into()));
        }
        if self.draws < 4 {
            return Err(Error::Config("draws must be at least 4".into()));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::Config("target_accept must lie in (0, 1)".into()));
        }
        if self.max_leapfrog == 0 || !(self.trajectory_length > 0.0) {
            return Err(Error::Config("trajectory settings must be positive".into()));
        }
        Ok(())
    }
}

/// Post-warmup draws of every chain, constrained space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub names: Vec<String>,
    pub n_chains: usize,
    pub n_draws: usize,
    pub dim: usize,
    /// Flattened `[chain][draw][param]`.
    pub draws: Vec<f64>,
    pub accept_rate: Vec<f64>,
    pub step_size: Vec<f64>,
    pub divergences: Vec<usize>,
    pub diagnostics: Vec<ParamDiagnostics>,
}

/// Post-warmup divergence fraction above which a run is flagged.
pub const DIVERGENCE_FLAG: f64 = 0.1;

impl SampleBatch {
    pub fn draw(&self, chain: usize, i: usize) -> &[f64] {
        let start = (chain * self.n_draws + i) * self.dim;
        &self.draws[start..start + self.dim]
    }

    /// All draws, chains concatenated.
    pub fn iter_draws(&self) -> impl Iterator<Item = &[f64]> {
        self.draws.chunks(self.dim)
    }

    pub fn chains_of(&self, param: usize) -> Vec<Vec<f64>> {
        (0..self.n_chains)
            .map(|c| (0..self.n_draws).map(|i| self.draw(c, i)[param]).collect())
            .collect()
    }

    pub fn pooled(&self, param: usize) -> Vec<f64> {
        self.iter_draws().map(|d| d[param]).collect()
    }

    pub fn mean(&self, param: usize) -> f64 {
        let p = self.pooled(param);
        p.iter().sum::<f64>() / p.len() as f64
    }

    pub fn total_draws(&self) -> usize {
        self.n_chains * self.n_draws
    }

    pub fn divergence_rate(&self) -> f64 {
        self.divergences.iter().sum::<usize>() as f64 / self.total_draws() as f64
    }

    /// Too many divergent transitions after warmup.
    pub fn flagged(&self) -> bool {
        self.divergence_rate() > DIVERGENCE_FLAG
    }

    /// Largest R-hat over non-degenerate parameters.
    pub fn max_r_hat(&self) -> f64 {
        self.diagnostics
            .iter()
            .filter(|d| !d.degenerate)
            .map(|d| d.r_hat)
            .fold(f64::NAN, f64::max)
    }

    pub fn min_ess_bulk(&self) -> f64 {
        self.diagnostics
            .iter()
            .filter(|d| !d.degenerate)
            .map(|d| d.ess_bulk)
            .fold(f64::NAN, f64::min)
    }

    pub fn recompute_diagnostics(&mut self) -> Result<()> {
        self.diagnostics = diagnostics(self)?;
        Ok(())
    }
}

/// Split R-hat and ESS for every parameter of a batch.
pub fn diagnostics(batch: &SampleBatch) -> Result<Vec<ParamDiagnostics>> {
    (0..batch.dim)
        .map(|p| param_diagnostics(&batch.chains_of(p)))
        .collect()
}

/// Runs `cfg.n_chains` independent chains. Chain `c` uses random stream
/// `(cfg.seed, c)`, so results are reproducible bit for bit.
pub fn sample<M: LogDensityModel + ?Sized>(model: &M, cfg: &ChainConfig) -> Result<SampleBatch> {
    cfg.validate()?;
    let dim = model.dim();
    if dim == 0 {
        return Err(Error::InvalidArgument("model has no parameters".into()));
    }
    let transforms = model.transforms();
    if transforms.len() != dim {
        return Err(Error::InvalidArgument("one transform per parameter required".into()));
    }
    let mut draws = Vec::with_capacity(cfg.n_chains * cfg.draws * dim);
    let mut accept_rate = Vec::new();
    let mut step_size = Vec::new();
    let mut divergences = Vec::new();
    for chain in 0..cfg.n_chains {
        let out = run_chain(model, &transforms, cfg, chain as u64)?;
        draws.extend(out.draws);
        accept_rate.push(out.accept_rate);
        step_size.push(out.step_size);
        divergences.push(out.divergences);
    }
    let mut batch = SampleBatch {
        names: model.parameter_names(),
        n_chains: cfg.n_chains,
        n_draws: cfg.draws,
        dim,
        draws,
        accept_rate,
        step_size,
        divergences,
        diagnostics: Vec::new(),
    };
    batch.recompute_diagnostics()?;
    if batch.flagged() {
        log::warn!(
            "{:.1}% of post-warmup transitions diverged",
            100.0 * batch.divergence_rate()
        );
    }
    Ok(batch)
}

struct ChainOutput {
    draws: Vec<f64>,
    accept_rate: f64,
    step_size: f64,
    divergences: usize,
}

struct Hmc<'a, M: ?Sized> {
    model: &'a M,
    transforms: &'a [Transform],
    inv_metric: Vec<f64>,
}

struct Transition {
    accept_stat: f64,
    divergent: bool,
}

impl<M: LogDensityModel + ?Sized> Hmc<'_, M> {
    fn logp(&self, theta: &[f64], grad: &mut [f64]) -> f64 {
        unconstrained_log_density(self.model, self.transforms, theta, grad)
    }

    fn kinetic(&self, p: &[f64]) -> f64 {
        0.5 * p.iter().zip(&self.inv_metric).map(|(p, m)| p * p * m).sum::<f64>()
    }

    fn draw_momentum(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        rng::standard_normals(rng, self.inv_metric.len())
            .into_iter()
            .zip(&self.inv_metric)
            .map(|(z, m)| z / m.sqrt())
            .collect()
    }

    /// One HMC transition; updates `theta`, `lp`, `grad` in place on
    /// acceptance.
    fn transition(
        &self,
        theta: &mut Vec<f64>,
        lp: &mut f64,
        grad: &mut Vec<f64>,
        step: f64,
        n_steps: usize,
        rng: &mut ChaCha8Rng,
    ) -> Transition {
        let mut p = self.draw_momentum(rng);
        let h0 = -*lp + self.kinetic(&p);
        let mut q = theta.clone();
        let mut g = grad.clone();
        let mut lp_new = *lp;
        let mut divergent = false;
        for _ in 0..n_steps {
            for i in 0..q.len() {
                p[i] += 0.5 * step * g[i];
                q[i] += step * self.inv_metric[i] * p[i];
            }
            lp_new = self.logp(&q, &mut g);
            if !lp_new.is_finite() {
                divergent = true;
                break;
            }
            for i in 0..q.len() {
                p[i] += 0.5 * step * g[i];
            }
            if -lp_new + self.kinetic(&p) - h0 > 1000.0 {
                divergent = true;
                break;
            }
        }
        if divergent {
            return Transition {
                accept_stat: 0.0,
                divergent: true,
            };
        }
        let h1 = -lp_new + self.kinetic(&p);
        let accept_stat = (h0 - h1).exp().min(1.0);
        let accept_stat = if accept_stat.is_finite() { accept_stat } else { 0.0 };
        if rng.random::<f64>() < accept_stat {
            *theta = q;
            *lp = lp_new;
            *grad = g;
        }
        Transition {
            accept_stat,
            divergent: false,
        }
    }

    /// Doubling/halving search for a step giving acceptance near one half.
    fn initial_step(&self, theta: &[f64], lp: f64, grad: &[f64], rng: &mut ChaCha8Rng) -> f64 {
        let mut step = 0.1;
        let attempt = |step: f64, rng: &mut ChaCha8Rng| -> f64 {
            let mut p = self.draw_momentum(rng);
            let h0 = -lp + self.kinetic(&p);
            let mut q = theta.to_vec();
            let mut g = grad.to_vec();
            for i in 0..q.len() {
                p[i] += 0.5 * step * g[i];
                q[i] += step * self.inv_metric[i] * p[i];
            }
            let lp1 = self.logp(&q, &mut g);
            if !lp1.is_finite() {
                return 0.0;
            }
            for i in 0..q.len() {
                p[i] += 0.5 * step * g[i];
            }
            let r = (h0 - (-lp1 + self.kinetic(&p))).exp();
            if r.is_finite() {
                r
            } else {
                0.0
            }
        };
        let first = attempt(step, rng);
        let up = first > 0.5;
        for _ in 0..60 {
            let a = attempt(step, rng);
            if up && a <= 0.5 {
                break;
            }
            if !up && a > 0.5 {
                break;
            }
            step = if up { step * 2.0 } else { step * 0.5 };
        }
        step.clamp(1e-8, 1e3)
    }

    fn n_steps(&self, cfg: &ChainConfig, step: f64, rng: &mut ChaCha8Rng) -> usize {
        let jitter: f64 = rng.random_range(0.5..1.5);
        let n = (cfg.trajectory_length * jitter / step).ceil();
        if n.is_finite() {
            (n as usize).clamp(1, cfg.max_leapfrog)
        } else {
            cfg.max_leapfrog
        }
    }
}

fn run_chain<M: LogDensityModel + ?Sized>(
    model: &M,
    transforms: &[Transform],
    cfg: &ChainConfig,
    chain: u64,
) -> Result<ChainOutput> {
    let dim = transforms.len();
    let mut rng = rng::stream(cfg.seed, chain);
    let mut hmc = Hmc {
        model,
        transforms,
        inv_metric: vec![1.0; dim],
    };

    let mut grad = vec![0.0; dim];
    let mut theta = Vec::new();
    let mut lp = f64::NEG_INFINITY;
    for _ in 0..100 {
        let cand: Vec<f64> = rng::standard_normals(&mut rng, dim)
            .into_iter()
            .map(|z| cfg.init_scale * z)
            .collect();
        lp = hmc.logp(&cand, &mut grad);
        theta = cand;
        if lp.is_finite() {
            break;
        }
    }
    if !lp.is_finite() {
        return Err(Error::Sampler(format!(
            "chain {chain}: non-finite log density at every initial point"
        )));
    }

    let schedule = WarmupSchedule::new(cfg.warmup);
    let mut step = hmc.initial_step(&theta, lp, &grad, &mut rng);
    let mut da = DualAverage::new(step);
    let mut window = VarianceWindow::new(dim);

    for iter in 0..cfg.warmup {
        let n = hmc.n_steps(cfg, step, &mut rng);
        let t = hmc.transition(&mut theta, &mut lp, &mut grad, step, n, &mut rng);
        da.advance(t.accept_stat, cfg.target_accept);
        step = da.step();
        if schedule.in_slow_phase(iter) {
            window.push(&theta);
        }
        if schedule.window_closes(iter) {
            if let Some(var) = window.estimate() {
                hmc.inv_metric = var;
            }
            window.reset();
            step = hmc.initial_step(&theta, lp, &grad, &mut rng);
            da = DualAverage::new(step);
        }
    }
    step = da.adapted_step();

    let mut draws = Vec::with_capacity(cfg.draws * dim);
    let mut accept_sum = 0.0;
    let mut divergences = 0;
    for _ in 0..cfg.draws {
        let n = hmc.n_steps(cfg, step, &mut rng);
        let t = hmc.transition(&mut theta, &mut lp, &mut grad, step, n, &mut rng);
        accept_sum += t.accept_stat;
        divergences += usize::from(t.divergent);
        draws.extend(theta.iter().zip(transforms).map(|(&v, tr)| tr.forward(v)));
    }
    Ok(ChainOutput {
        draws,
        accept_rate: accept_sum / cfg.draws as f64,
        step_size: step,
        divergences,
    })
}

/// Worst agreement between analytic and central-difference gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientReport {
    pub max_relative_error: f64,
    pub n_points: usize,
}

impl GradientReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_relative_error < tol
    }
}

/// Compares the analytic gradient with central finite differences at
/// `n_points` random points, in constrained coordinates. Points are drawn as
/// `theta ~ N(0, 1)` in the unconstrained space and mapped through the
/// transforms, so they are always feasible. Relative error per component is
/// `|a - f| / max(|a|, |f|, 1)`.
pub fn gradient_check<M: LogDensityModel + ?Sized>(model: &M, n_points: usize, seed: u64) -> GradientReport {
    let dim = model.dim();
    let transforms = model.transforms();
    let mut rng = rng::stream(seed, u64::MAX);
    let mut worst = 0.0f64;
    let mut scratch = vec![0.0; dim];
    for _ in 0..n_points {
        let x: Vec<f64> = rng::standard_normals(&mut rng, dim)
            .into_iter()
            .zip(&transforms)
            .map(|(z, tr)| tr.forward(z))
            .collect();
        let mut grad = vec![0.0; dim];
        if model.log_density(&x, &mut grad).is_err() {
            worst = f64::INFINITY;
            continue;
        }
        for i in 0..dim {
            let h = 1e-5 * x[i].abs().max(if transforms[i] == Transform::Log { x[i] } else { 1.0 });
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            let fp = model.log_density(&xp, &mut scratch);
            let fm = model.log_density(&xm, &mut scratch);
            let fd = match (fp, fm) {
                (Ok(a), Ok(b)) => (a - b) / (2.0 * h),
                _ => f64::NAN,
            };
            let err = (grad[i] - fd).abs() / grad[i].abs().max(fd.abs()).max(1.0);
            worst = if err.is_nan() { f64::INFINITY } else { worst.max(err) };
        }
    }
    GradientReport {
        max_relative_error: worst,
        n_points,
    }
}
