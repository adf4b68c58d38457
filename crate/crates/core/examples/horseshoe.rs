//! Sparse recovery with the regularized horseshoe prior, against an
//! isotropic Gaussian prior with a learned variance.

use bayes_pc::app::synthetic::{sparse_instance, SPARSE_NOISE_SD};
use bayes_pc::basis::design_matrix;
use bayes_pc::sampler::ChainConfig;
use bayes_pc::sparse_prior::{fit_hierarchical_gaussian, fit_sparse, HorseshoeConfig};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let inst = sparse_instance(5, 15, 500)?;
    let noise = SPARSE_NOISE_SD * SPARSE_NOISE_SD;
    let v = design_matrix(&inst.space, &inst.idx, &inst.train.inputs, None)?;
    let vt = design_matrix(&inst.space, &inst.idx, &inst.test.inputs, None)?;
    let chain = ChainConfig {
        n_chains: 4,
        warmup: 500,
        draws: 500,
        seed: 5,
        ..Default::default()
    };

    let cfg = HorseshoeConfig::new(25.0, 3.0, 0.1, noise, inst.train.len())?;
    println!("global scale tau = {:.4}", cfg.tau());
    let hs = fit_sparse(&v, &inst.train.outputs, &cfg, &chain)?;
    let hg = fit_hierarchical_gaussian(&v, &inst.train.outputs, noise, &chain)?;

    println!("{:>16} {:>8} {:>10} {:>10} {:>10}", "index", "truth", "horseshoe", "95% low", "95% high");
    for (i, t) in inst.idx.iter().enumerate() {
        let s = &hs.summaries[i];
        println!(
            "{:>16} {:>8.2} {:>10.4} {:>10.4} {:>10.4}",
            format!("{t:?}"),
            inst.truth[i],
            hs.posterior_mean[i],
            s.lower,
            s.upper
        );
    }
    let rmse = |a: &nalgebra::DVector<f64>| ((&vt.values * a - &inst.test.outputs).norm_squared() / inst.test.len() as f64).sqrt();
    println!("\ntest RMSE: horseshoe {:.4}, hierarchical Gaussian {:.4}", rmse(&hs.posterior_mean), rmse(&hg.posterior_mean));
    println!("max R-hat {:.3}, divergences {:?}", hs.hyper.max_r_hat(), hs.hyper.divergences);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
