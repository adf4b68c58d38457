//! Command-line front end. Every subcommand reads a TOML experiment config
//! and writes JSON/CSV artifacts into the output directory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numerical
//! failure, 5 sampler non-convergence (R-hat above 1.1).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bayes_pc::app::{
    self, coefficient_summaries, fit_full, ingest_csv, ingest_inputs, load_stacked, mc_oracle_expansion,
    moments_report, normalized_rmse, run_coregional, run_experiment, write_coefficients, write_coregional,
    write_experiment, ExperimentConfig, FullFit, R_HAT_LIMIT,
};
use bayes_pc::linear_bayes::predictive;
use bayes_pc::moments::expected_output_variance;
use bayes_pc::Error;
use clap::{Args, Parser, Subcommand};
use serde_json::json;

#[derive(Parser)]
#[command(name = "bpc", version, about = "Bayesian polynomial chaos experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    /// Overrides the split and sampler seeds of the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured split/fit/score experiment.
    Fit(Common),
    /// Fit every row, then predict at `[predict].inputs`.
    Predict(Common),
    /// Posterior distributions of the output mean and variance.
    Moments(Common),
    /// First-order and total Sobol indices.
    Sobol(Common),
    /// Condition the fitted model on its spatial mean.
    ConditionMean(Common),
    /// Multi-output coregional fit with an independent baseline.
    Coregional(Common),
    /// Compare closed-form moments with brute-force Monte Carlo.
    Oracle(Common),
}

enum Failure {
    Lib(Error),
    NotConverged(f64),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = Result<(), Failure>;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidArgument(_) => 2,
        Error::Data(_) | Error::Io(_) | Error::DimensionMismatch(_) => 3,
        Error::NotPositiveDefinite { .. } | Error::Singular(_) | Error::Sampler(_) => 4,
    }
}

fn load(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        cfg.override_seed(seed);
    }
    std::fs::create_dir_all(&common.out)?;
    Ok(cfg)
}

fn dataset(cfg: &ExperimentConfig) -> Result<app::Dataset, Error> {
    let data = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::Config("this command needs a [data] section".into()))?;
    ingest_csv(&data.path, cfg.bounds())
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Data(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Exit 5 when a sampled full-data fit did not converge.
fn check_full(fit: &FullFit) -> Outcome {
    match fit.fitted.diagnostics(&fit.label).and_then(|d| d.max_r_hat) {
        Some(r) if r > R_HAT_LIMIT => Err(Failure::NotConverged(r)),
        _ => Ok(()),
    }
}

fn fit_cmd(c: &Common) -> Outcome {
    let cfg = load(c)?;
    let data = dataset(&cfg)?;
    let out = run_experiment(&cfg, &data)?;
    write_experiment(&c.out, &out)?;
    for row in &out.report.summary {
        println!(
            "M={:<4} {:<28} median RMSE {:.4e} (conventional {:.4e})",
            row.train_size, row.variant, row.median_printed, row.median_conventional
        );
    }
    if !out.report.converged {
        let worst = out
            .report
            .diagnostics
            .iter()
            .filter_map(|d| d.max_r_hat)
            .fold(f64::NAN, f64::max);
        return Err(Failure::NotConverged(worst));
    }
    Ok(())
}

fn predict_cmd(c: &Common) -> Outcome {
    let cfg = load(c)?;
    let spec = cfg
        .predict
        .clone()
        .ok_or_else(|| Error::Config("predict needs a [predict] section".into()))?;
    let data = dataset(&cfg)?;
    let fit = fit_full(&cfg, &data)?;
    let (x, observed) = ingest_inputs(&spec.inputs, data.dim(), cfg.bounds())?;
    let p = predictive(&fit.posterior, &fit.space, &fit.idx, &x)?;
    let sd = p.std_devs();
    let mut w = csv::Writer::from_path(c.out.join("predictions.csv")).map_err(|e| Error::Data(e.to_string()))?;
    w.write_record(["point", "mean", "sd", "observed"]).map_err(|e| Error::Data(e.to_string()))?;
    for k in 0..p.len() {
        let obs = observed.as_ref().map_or(String::new(), |o| format!("{:e}", o[k]));
        w.write_record([k.to_string(), format!("{:e}", p.mean[k]), format!("{:e}", sd[k]), obs])
            .map_err(|e| Error::Data(e.to_string()))?;
    }
    w.flush().map_err(Error::from)?;
    let rmse = match &observed {
        Some(o) => Some(normalized_rmse(o, &p.mean, data.output_sd())?),
        None => None,
    };
    write_json(
        &c.out.join("predict.json"),
        &json!({ "model": fit.label, "points": p.len(), "rmse": rmse }),
    )?;
    println!("wrote {} predictions", p.len());
    check_full(&fit)
}

fn moments_cmd(c: &Common, sobol_only: bool) -> Outcome {
    let cfg = load(c)?;
    let data = dataset(&cfg)?;
    let fit = fit_full(&cfg, &data)?;
    let rep = moments_report(&fit.posterior, &fit.idx, &data.columns, cfg.moments.samples, cfg.mcmc.seed)?;
    if sobol_only {
        write_json(&c.out.join("sobol.json"), &serde_json::to_value(&rep.sobol).expect("serializable"))?;
        let mut w = csv::Writer::from_path(c.out.join("sobol.csv")).map_err(|e| Error::Data(e.to_string()))?;
        w.write_record(["input", "first_order_mean", "first_order_lower", "first_order_upper", "total_mean", "total_lower", "total_upper"])
            .map_err(|e| Error::Data(e.to_string()))?;
        for s in &rep.sobol {
            let f = &s.first_order;
            let t = &s.total;
            w.write_record([
                s.name.clone(),
                format!("{:e}", f.mean),
                format!("{:e}", f.lower),
                format!("{:e}", f.upper),
                format!("{:e}", t.mean),
                format!("{:e}", t.lower),
                format!("{:e}", t.upper),
            ])
            .map_err(|e| Error::Data(e.to_string()))?;
            println!("{:<24} first order {:.4} total {:.4}", s.name, f.mean, t.mean);
        }
        w.flush().map_err(Error::from)?;
    } else {
        write_json(&c.out.join("moments.json"), &serde_json::to_value(&rep).expect("serializable"))?;
        println!(
            "output mean {:.6e} (sd {:.3e}); output variance {:.6e} [{:.4e}, {:.4e}]",
            rep.output_mean.mean,
            rep.output_mean.variance.sqrt(),
            rep.output_variance.mean,
            rep.output_variance.lower,
            rep.output_variance.upper
        );
    }
    check_full(&fit)
}

fn condition_cmd(c: &Common) -> Outcome {
    let mut cfg = load(c)?;
    let spec = cfg
        .conditioning
        .clone()
        .ok_or_else(|| Error::Config("condition-mean needs a [conditioning] section".into()))?;
    let data = dataset(&cfg)?;
    cfg.conditioning = None;
    let fit = fit_full(&cfg, &data)?;
    cfg.conditioning = Some(spec.clone());
    let rows: Vec<usize> = (0..data.len()).collect();
    let pipe = app::Pipeline::new(&cfg, &data)?;
    let a = pipe.conditioning_value(&spec, &rows);
    let cond = app::condition_spatial_mean(&fit.posterior, a, spec.value_variance)?;
    let before = coefficient_summaries(&fit.idx, &fit.posterior, fit.fitted.sparse.as_ref());
    let after = coefficient_summaries(&fit.idx, &cond, None);
    write_coefficients(&c.out.join("coefficients.csv"), &before)?;
    write_coefficients(&c.out.join("coefficients_conditioned.csv"), &after)?;
    write_json(
        &c.out.join("conditioned.json"),
        &json!({
            "value": a,
            "value_variance": spec.value_variance,
            "output_mean_before": { "mean": fit.posterior.mean[0], "variance": fit.posterior.covariance[(0, 0)] },
            "output_mean_after": { "mean": cond.mean[0], "variance": cond.covariance[(0, 0)] },
            "coefficients_before": before,
            "coefficients_after": after,
        }),
    )?;
    println!("spatial mean {:.6e} -> {:.6e} (target {:.6e})", fit.posterior.mean[0], cond.mean[0], a);
    check_full(&fit)
}

fn coregional_cmd(c: &Common) -> Outcome {
    let cfg = load(c)?;
    let opts = cfg
        .coregional
        .clone()
        .ok_or_else(|| Error::Config("coregional needs a [coregional] section".into()))?;
    let (train, test) = load_stacked(&cfg, &opts)?;
    let run = run_coregional(&cfg, &train, test.as_ref())?;
    write_coregional(&c.out, &run, Some(test.as_ref().unwrap_or(&train)))?;
    println!("posterior mean B = {:?}", run.report.b_mean);
    for t in &run.report.test {
        println!(
            "output {}: coregional RMSE {:.4e}, independent RMSE {:.4e}",
            t.output + 1,
            t.coregional.printed,
            t.independent.printed
        );
    }
    if !run.report.converged {
        return Err(Failure::NotConverged(run.report.diagnostics.max_r_hat.unwrap_or(f64::NAN)));
    }
    Ok(())
}

fn oracle_cmd(c: &Common) -> Outcome {
    let cfg = load(c)?;
    let samples = cfg.oracle.as_ref().map_or(1_000_000, |o| o.samples);
    let data = dataset(&cfg)?;
    let fit = fit_full(&cfg, &data)?;
    let alpha = &fit.posterior.mean;
    let mc = mc_oracle_expansion(&fit.space, &fit.idx, alpha, samples, cfg.mcmc.seed)?;
    let closed_mean = alpha[0];
    let closed_var: f64 = alpha.iter().skip(1).map(|a| a * a).sum();
    let ok = (mc.mean - closed_mean).abs() <= 3.0 * mc.mean_se && (mc.variance - closed_var).abs() <= 3.0 * mc.variance_se;
    write_json(
        &c.out.join("oracle.json"),
        &json!({
            "closed_form": { "mean": closed_mean, "variance": closed_var },
            "monte_carlo": mc,
            "within_3_se": ok,
            "posterior_expected_variance": expected_output_variance(&fit.posterior),
        }),
    )?;
    println!(
        "mean {closed_mean:.6e} vs MC {:.6e} +- {:.1e}; variance {closed_var:.6e} vs MC {:.6e} +- {:.1e}",
        mc.mean, mc.mean_se, mc.variance, mc.variance_se
    );
    check_full(&fit)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Fit(c) => fit_cmd(c),
        Command::Predict(c) => predict_cmd(c),
        Command::Moments(c) => moments_cmd(c, false),
        Command::Sobol(c) => moments_cmd(c, true),
        Command::ConditionMean(c) => condition_cmd(c),
        Command::Coregional(c) => coregional_cmd(c),
        Command::Oracle(c) => oracle_cmd(c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::NotConverged(r)) => {
            eprintln!("sampler did not converge: max R-hat {r:.3} exceeds {R_HAT_LIMIT}");
            ExitCode::from(5)
        }
    }
}
