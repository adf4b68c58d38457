//! Writes synthetic CSV tables and matching TOML configs for every `bpc`
//! subcommand into a directory (default `bpc-demo`), e.g.
//!
//! ```text
//! cargo run --example cli_inputs -- bpc-demo
//! cargo run --bin bpc -- fit --config bpc-demo/condition.toml --out bpc-demo/out/condition
//! ```

use std::path::Path;

use bayes_pc::app::synthetic::{coregional_pair, fidelity_pair, sparse_instance, turbine_stand_in, TURBINE_BOUNDS};
use bayes_pc::app::{coefficient_summaries, fit_full, write_coefficients, write_csv, Dataset, ExperimentConfig};

const BASIS3: &str = "[basis]\nfamily = \"legendre\"\nscheme = \"total_order\"\nmax_degree = 3\n";

fn bounds_toml() -> String {
    let b: Vec<String> = TURBINE_BOUNDS
        .iter()
        .map(|b| format!("{{ lower = {:e}, upper = {:e} }}", b.lower, b.upper))
        .collect();
    format!("bounds = [{}]", b.join(", "))
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), Box<dyn std::error::Error>> {
    ExperimentConfig::from_toml(text)?;
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

pub fn run(dir: &Path) -> Result<(), Box<dyn std::error::Error>> {
    std::fs::create_dir_all(dir)?;
    let turbine = turbine_stand_in(1)?;
    write_csv(&turbine, &dir.join("turbine_synthetic.csv"), Some(&TURBINE_BOUNDS))?;
    let turbine_data = format!("[data]\npath = \"turbine_synthetic.csv\"\n{}\n", bounds_toml());

    write(
        dir,
        "condition.toml",
        &format!(
            "noise_variance = 3.0\n{BASIS3}{turbine_data}[prior]\nkind = \"zero_gaussian\"\n\
             [conditioning]\nvalue = {{ source = \"data_mean\" }}\n[split]\ntrain = 15\nn_trials = 20\nseed = 1\n\
             [predict]\ninputs = \"turbine_synthetic.csv\"\n"
        ),
    )?;

    let (low, _) = fidelity_pair(1)?;
    let low_cfg = ExperimentConfig::from_toml(&format!(
        "noise_variance = 1e-6\n{BASIS3}[prior]\nkind = \"zero_gaussian\"\nvariance = 1e8\n"
    ))?;
    let fit = fit_full(&low_cfg, &low)?;
    write_coefficients(&dir.join("low_fidelity_coefficients.csv"), &coefficient_summaries(&fit.idx, &fit.posterior, None))?;
    write(
        dir,
        "informed.toml",
        &format!(
            "noise_variance = 3.0\n{BASIS3}{turbine_data}[prior]\nkind = \"informed_gaussian\"\n\
             coefficients = \"low_fidelity_coefficients.csv\"\n[split]\ntrain = 15\nn_trials = 20\nseed = 2\n\
             [oracle]\nsamples = 200000\n"
        ),
    )?;

    let sparse = sparse_instance(3, 40, 1)?;
    write_csv(&sparse.train, &dir.join("sparse.csv"), None)?;
    write(
        dir,
        "horseshoe.toml",
        "noise_variance = 0.01\n[basis]\nfamily = \"legendre\"\nscheme = \"total_order\"\nmax_degree = 2\n\
         [data]\npath = \"sparse.csv\"\n[prior]\nkind = \"horseshoe\"\nnu = 25.0\ns = 3.0\nbeta = 0.1\n\
         [mcmc]\nchains = 4\nwarmup = 500\ndraws = 500\nseed = 3\n\
         [split]\ntrain_sizes = [10, 15, 25]\nn_trials = 5\nseed = 3\n",
    )?;

    let (train, test) = coregional_pair(4, 30, 200)?;
    for (k, set) in [("train", &train), ("test", &test)] {
        for o in 0..2 {
            let ds = Dataset::unnamed(set.inputs[o].clone(), set.outputs[o].clone())?;
            write_csv(&ds, &dir.join(format!("coregional_{k}_{}.csv", o + 1)), None)?;
        }
    }
    write(
        dir,
        "coregional.toml",
        "noise_variance = 1e-6\n[basis]\nfamily = \"legendre\"\nscheme = \"total_order\"\nmax_degree = 2\n\
         [prior]\nkind = \"zero_gaussian\"\n\
         [mcmc]\nchains = 2\nwarmup = 300\ndraws = 300\nseed = 4\ntrajectory_length = 1.0\n\
         [coregional]\noutputs = [\"coregional_train_1.csv\", \"coregional_train_2.csv\"]\n\
         test = [\"coregional_test_1.csv\", \"coregional_test_2.csv\"]\n",
    )?;
    println!("wrote CSV tables and configs to {}", dir.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).unwrap_or_else(|| "bpc-demo".into());
    run(Path::new(&dir))
}
