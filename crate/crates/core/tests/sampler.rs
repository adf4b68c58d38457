mod common;

use bayes_pc::sampler::*;
use bayes_pc::Result;

struct StdNormal(usize);

impl LogDensityModel for StdNormal {
    fn dim(&self) -> usize {
        self.0
    }
    fn log_density(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        for (g, v) in grad.iter_mut().zip(x) {
            *g = -v;
        }
        Ok(-0.5 * x.iter().map(|v| v * v).sum::<f64>())
    }
}

struct Correlated(f64);

impl LogDensityModel for Correlated {
    fn dim(&self) -> usize {
        2
    }
    fn log_density(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let k = 1.0 / (1.0 - self.0 * self.0);
        grad[0] = -k * (x[0] - self.0 * x[1]);
        grad[1] = -k * (x[1] - self.0 * x[0]);
        Ok(-0.5 * k * (x[0] * x[0] - 2.0 * self.0 * x[0] * x[1] + x[1] * x[1]))
    }
}

/// Exponential(1) on a positive parameter, sampled through the log transform.
struct Exponential;

impl LogDensityModel for Exponential {
    fn dim(&self) -> usize {
        1
    }
    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Log]
    }
    fn log_density(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        grad[0] = -1.0;
        Ok(-x[0])
    }
}

/// Same quadratic but with a wrong gradient.
struct Corrupted;

impl LogDensityModel for Corrupted {
    fn dim(&self) -> usize {
        3
    }
    fn log_density(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        for (g, v) in grad.iter_mut().zip(x) {
            *g = -1.1 * v;
        }
        Ok(-0.5 * x.iter().map(|v| v * v).sum::<f64>())
    }
}

fn cfg(seed: u64, draws: usize) -> ChainConfig {
    ChainConfig {
        n_chains: 4,
        warmup: 500,
        draws,
        seed,
        ..Default::default()
    }
}

/// Pooled mean of `f` over the draws, with an ESS-based standard error.
fn estimate(batch: &SampleBatch, f: impl Fn(&[f64]) -> f64) -> (f64, f64) {
    let chains: Vec<Vec<f64>> = (0..batch.n_chains)
        .map(|c| (0..batch.n_draws).map(|i| f(batch.draw(c, i))).collect())
        .collect();
    let pooled: Vec<f64> = chains.concat();
    let (m, _) = common::mean_se(&pooled);
    let (v, _) = common::var_se(&pooled);
    (m, (v / ess(&chains)).sqrt())
}

#[test]
fn standard_normal_moments() {
    let b = sample(&StdNormal(5), &cfg(1, 1000)).unwrap();
    for p in 0..5 {
        let (m, se) = estimate(&b, |d| d[p]);
        assert!(m.abs() < 3.0 * se, "mean[{p}] = {m} (se {se})");
        let (v, se) = estimate(&b, |d| d[p] * d[p]);
        assert!((v - 1.0).abs() < 3.0 * se, "E[x{p}^2] = {v} (se {se})");
    }
}

#[test]
fn correlated_gaussian_correlation() {
    let b = sample(&Correlated(0.8), &cfg(2, 2000)).unwrap();
    let (c, se) = estimate(&b, |d| d[0] * d[1]);
    assert!((c - 0.8).abs() < 3.0 * se, "E[xy] = {c} (se {se})");
    let x = b.pooled(0);
    let y = b.pooled(1);
    let (mx, my) = (b.mean(0), b.mean(1));
    let cov: f64 = x.iter().zip(&y).map(|(a, c)| (a - mx) * (c - my)).sum();
    let sx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sy: f64 = y.iter().map(|c| (c - my).powi(2)).sum();
    let rho = cov / (sx * sy).sqrt();
    let se_rho = (1.0 - 0.64) / b.min_ess_bulk().sqrt();
    assert!((rho - 0.8).abs() < 3.0 * se_rho, "correlation {rho} (se {se_rho})");
}

#[test]
fn two_chains_converge() {
    let b = sample(&StdNormal(3), &ChainConfig { n_chains: 2, ..cfg(3, 1000) }).unwrap();
    assert!(b.max_r_hat() < 1.05);
    assert!(!b.flagged());
}

#[test]
fn log_transform_includes_the_jacobian() {
    let b = sample(&Exponential, &cfg(4, 2000)).unwrap();
    assert!(b.pooled(0).iter().all(|&x| x > 0.0));
    let (m, se) = estimate(&b, |d| d[0]);
    assert!((m - 1.0).abs() < 3.0 * se, "mean {m} (se {se})");
}

#[test]
fn runs_are_reproducible() {
    let a = sample(&Correlated(0.5), &cfg(9, 200)).unwrap();
    let b = sample(&Correlated(0.5), &cfg(9, 200)).unwrap();
    let c = sample(&Correlated(0.5), &cfg(10, 200)).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.draws, c.draws);
}

#[test]
fn gradient_checks() {
    assert!(gradient_check(&StdNormal(4), 10, 0).max_relative_error < 1e-7);
    assert!(gradient_check(&Correlated(0.9), 10, 0).max_relative_error < 1e-7);
    assert!(gradient_check(&Exponential, 10, 0).max_relative_error < 1e-7);
    assert!(gradient_check(&Corrupted, 5, 0).max_relative_error > 1e-2);
}

#[test]
fn degenerate_chains_flagged() {
    let d = param_diagnostics(&[vec![1.5; 100], vec![1.5; 100]]).unwrap();
    assert!(d.degenerate && d.r_hat.is_nan());
}

#[test]
fn iid_draws_have_full_ess() {
    let mut rng = common::rng(12);
    let chains: Vec<Vec<f64>> = (0..4).map(|_| common::normals(&mut rng, 1000)).collect();
    let d = param_diagnostics(&chains).unwrap();
    assert!((d.ess_bulk / 4000.0 - 1.0).abs() < 0.2, "ess {}", d.ess_bulk);
    assert!(d.r_hat < 1.01);
}

#[test]
fn offset_chain_detected() {
    let mut rng = common::rng(13);
    let mut chains: Vec<Vec<f64>> = (0..4).map(|_| common::normals(&mut rng, 500)).collect();
    chains[2].iter_mut().for_each(|v| *v += 10.0);
    assert!(param_diagnostics(&chains).unwrap().r_hat > 2.0);
}

#[test]
fn invalid_configurations_rejected() {
    let model = StdNormal(2);
    for bad in [
        ChainConfig { n_chains: 1, ..Default::default() },
        ChainConfig { warmup: 10, ..Default::default() },
        ChainConfig { target_accept: 1.0, ..Default::default() },
        ChainConfig { trajectory_length: 0.0, ..Default::default() },
    ] {
        assert!(matches!(sample(&model, &bad), Err(bayes_pc::Error::Config(_))));
    }
    assert!(param_diagnostics(&[vec![0.0; 10]]).is_err());
}

struct HalfNormal;

impl LogDensityModel for HalfNormal {
    fn dim(&self) -> usize {
        1
    }
    fn transforms(&self) -> Vec<Transform> {
        vec![Transform::Log]
    }
    fn log_density(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        grad[0] = -x[0];
        Ok(-0.5 * x[0] * x[0])
    }
}

#[test]
fn half_normal_through_log_transform() {
    let b = sample(&HalfNormal, &cfg(14, 2000)).unwrap();
    assert!(b.pooled(0).iter().all(|&x| x > 0.0));
    let (m, se) = estimate(&b, |d| d[0]);
    let want = (2.0 / std::f64::consts::PI).sqrt();
    assert!((m - want).abs() < 3.0 * se, "mean {m} (se {se})");
}
