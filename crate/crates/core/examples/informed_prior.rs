//! A physically informed prior: coefficients fitted to plentiful
//! low-fidelity data become the prior mean for a scarce high-fidelity fit.

use bayes_pc::app::synthetic::{fidelity_pair, TURBINE_NOISE_VARIANCE};
use bayes_pc::app::{coefficient_summaries, fit_full, run_experiment, write_coefficients, ExperimentConfig};

fn config(prior: &str) -> Result<ExperimentConfig, bayes_pc::Error> {
    ExperimentConfig::from_toml(&format!(
        r#"
noise_variance = {TURBINE_NOISE_VARIANCE}
[basis]
family = "legendre"
scheme = "total_order"
max_degree = 3
[prior]
{prior}
[split]
train = 15
n_trials = 20
seed = 3
"#
    ))
}

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let (low, high) = fidelity_pair(99)?;

    // a nearly flat prior makes the low-fidelity fit a least-squares fit
    let low_fit = fit_full(&config("kind = \"zero_gaussian\"\nvariance = 1e8")?, &low)?;
    let dir = tempfile::tempdir()?;
    let coef_path = dir.path().join("low_fidelity_coefficients.csv");
    write_coefficients(&coef_path, &coefficient_summaries(&low_fit.idx, &low_fit.posterior, None))?;
    println!("low-fidelity fit on {} grid points; constant term {:.2}", low.len(), low_fit.posterior.mean[0]);

    let cfg = config(&format!(
        "kind = \"informed_gaussian\"\ncoefficients = {:?}\nvariance = 1.0",
        coef_path.display().to_string()
    ))?;
    let out = run_experiment(&cfg, &high)?;
    for row in &out.report.summary {
        println!("{:<16} median normalized RMSE {:.3}", row.variant, row.median_printed);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
