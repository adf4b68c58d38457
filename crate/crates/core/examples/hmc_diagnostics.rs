//! The HMC sampler on a correlated Gaussian: moments, R-hat, bulk ESS and
//! the finite-difference gradient check.

use bayes_pc::sampler::{gradient_check, sample, ChainConfig, LogDensityModel};
use bayes_pc::Result;

/// Bivariate normal with unit variances and correlation `rho`.
struct Correlated {
    rho: f64,
}

impl LogDensityModel for Correlated {
    fn dim(&self) -> usize {
        2
    }

    fn log_density(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let k = 1.0 / (1.0 - self.rho * self.rho);
        grad[0] = -k * (x[0] - self.rho * x[1]);
        grad[1] = -k * (x[1] - self.rho * x[0]);
        Ok(-0.5 * k * (x[0] * x[0] - 2.0 * self.rho * x[0] * x[1] + x[1] * x[1]))
    }
}

pub fn run() -> std::result::Result<(), Box<dyn std::error::Error>> {
    let model = Correlated { rho: 0.9 };
    let report = gradient_check(&model, 10, 1);
    println!("gradient check: max relative error {:.2e}", report.max_relative_error);

    let batch = sample(
        &model,
        &ChainConfig {
            n_chains: 4,
            warmup: 500,
            draws: 1000,
            seed: 42,
            ..Default::default()
        },
    )?;
    let a = batch.pooled(0);
    let b = batch.pooled(1);
    let n = a.len() as f64;
    let (ma, mb) = (batch.mean(0), batch.mean(1));
    let cov = a.iter().zip(&b).map(|(x, y)| (x - ma) * (y - mb)).sum::<f64>() / (n - 1.0);
    println!("means ({ma:.3}, {mb:.3}), covariance {cov:.3} (target 0.9)");
    for (name, d) in batch.names.iter().zip(&batch.diagnostics) {
        println!("{name}: R-hat {:.4}, bulk ESS {:.0}, tail ESS {:.0}", d.r_hat, d.ess_bulk, d.ess_tail);
    }
    println!("step sizes {:.3?}, acceptance {:.3?}", batch.step_size, batch.accept_rate);
    Ok(())
}

#[allow(dead_code)]
fn main() -> std::result::Result<(), Box<dyn std::error::Error>> {
    run()
}
