use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::config::{ConditioningConfig, ExperimentConfig, PriorConfig, ValueSource};
use super::data::{random_split, Dataset};
use super::metrics::{median, normalized_rmse};
use super::report::{
    csv_err, csv_writer, write_json, CoefficientSummary, DatasetSummary, DiagnosticsRecord, FitReport,
    MomentSummary, MomentsReport, SobolEntry, SummaryRow, TrialRecord,
};
use crate::basis::{design_matrix, DesignMatrix, InputSpace, MultiIndexSet};
use crate::conditioning::{condition_coefficients, spatial_mean_functional, UncertainFunctionalValue};
use crate::error::{Error, Result};
use crate::linear_bayes::{conjugate_posterior, predictive_from_design, CoefficientPosterior, GaussianPrior, NoiseSpec};
use crate::moments::{
    first_order_set, output_mean_distribution, output_variance_distribution, sobol_index, total_effect_set,
};
use crate::sampler::ChainConfig;
use crate::sparse_prior::{fit_hierarchical_gaussian, fit_sparse, HorseshoeConfig, SparseFit};

/// Mixes a base seed with loop indices into an independent-looking seed.
pub fn derive_seed(base: u64, a: u64, b: u64) -> u64 {
    let mut z = base
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One modelling pipeline evaluated in every trial.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub label: String,
    pub prior: PriorConfig,
    pub conditioned: bool,
}

impl Variant {
    fn new(prior: PriorConfig, conditioned: bool) -> Self {
        let mut label = prior.label().to_string();
        if conditioned {
            label.push_str("+conditioned");
        }
        Variant {
            label,
            prior,
            conditioned,
        }
    }
}

/// The configured pipeline first, then its baselines when `compare` is set.
pub fn variants(cfg: &ExperimentConfig) -> Vec<Variant> {
    let cond = cfg.conditioning.is_some();
    let mut out = vec![Variant::new(cfg.prior.clone(), cond)];
    if !cfg.compare {
        return out;
    }
    match &cfg.prior {
        PriorConfig::InformedGaussian { variance, .. } => {
            out.push(Variant::new(PriorConfig::ZeroGaussian { variance: *variance }, cond));
        }
        PriorConfig::Horseshoe { .. } => out.push(Variant::new(PriorConfig::HierarchicalGaussian, cond)),
        _ => {}
    }
    if cond {
        let unconditioned: Vec<Variant> = out.iter().map(|v| Variant::new(v.prior.clone(), false)).collect();
        out.extend(unconditioned);
    }
    out
}

/// Coefficient posterior of one fit, with the sampler output for
/// hierarchical priors. For those, `posterior` is the moment-matched
/// Gaussian of the coefficient draws (exact mean, sample covariance).
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub posterior: CoefficientPosterior,
    pub sparse: Option<SparseFit>,
}

impl FittedModel {
    pub fn diagnostics(&self, label: &str) -> Option<DiagnosticsRecord> {
        self.sparse
            .as_ref()
            .map(|f| DiagnosticsRecord::from_batch(label, &f.hyper))
    }
}

fn gaussian_from_fit(fit: &SparseFit) -> Result<CoefficientPosterior> {
    let n = fit.posterior_mean.len();
    let s = fit.coefficient_draws.len();
    if s < 2 {
        return Err(Error::Sampler("too few coefficient draws".into()));
    }
    let mean = fit.coefficient_draws.iter().fold(DVector::zeros(n), |a, d| a + d) / s as f64;
    let mut cov = DMatrix::zeros(n, n);
    for d in &fit.coefficient_draws {
        let c = d - &mean;
        cov += &c * c.transpose();
    }
    cov /= (s - 1) as f64;
    CoefficientPosterior::new(fit.posterior_mean.clone(), cov)
}

/// Coefficient table: one row per basis term, value in the last column.
pub fn read_coefficients(path: &Path, n: usize) -> Result<DVector<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
    let mut vals = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let cell = rec.iter().last().unwrap_or("");
        let v: f64 = cell.parse().map_err(|_| {
            Error::Data(format!(
                "{}: non-numeric coefficient {cell:?} at row {}",
                path.display(),
                i + 2
            ))
        })?;
        vals.push(v);
    }
    if vals.len() != n {
        return Err(Error::Data(format!(
            "{}: {} coefficients for a basis of {n} terms",
            path.display(),
            vals.len()
        )));
    }
    Ok(DVector::from_vec(vals))
}

/// Writes coefficient summaries; the mean is the last column so the file
/// can serve directly as an informed prior mean.
pub fn write_coefficients(path: &Path, coefs: &[CoefficientSummary]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(["index", "sd", "lower", "upper", "mean"]).map_err(csv_err)?;
    for c in coefs {
        let idx = c.index.iter().map(|j| j.to_string()).collect::<Vec<_>>().join(" ");
        w.write_record([idx, fmt(c.sd), fmt(c.lower), fmt(c.upper), fmt(c.mean)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

/// Space, basis and fixed inputs shared by every fit of an experiment.
pub struct Pipeline<'a> {
    pub cfg: &'a ExperimentConfig,
    pub data: &'a Dataset,
    pub space: InputSpace,
    pub idx: MultiIndexSet,
    pub design: DesignMatrix,
    informed_mean: Option<DVector<f64>>,
}

impl<'a> Pipeline<'a> {
    pub fn new(cfg: &'a ExperimentConfig, data: &'a Dataset) -> Result<Self> {
        let space = cfg.basis.space(data.dim())?;
        let idx = cfg.basis.index_set(data.dim())?;
        let design = design_matrix(&space, &idx, &data.inputs, None)?;
        let informed_mean = match &cfg.prior {
            PriorConfig::InformedGaussian { coefficients, .. } => Some(read_coefficients(coefficients, idx.len())?),
            _ => None,
        };
        Ok(Pipeline {
            cfg,
            data,
            space,
            idx,
            design,
            informed_mean,
        })
    }

    fn rows_design(&self, rows: &[usize]) -> DesignMatrix {
        DesignMatrix::from_values(self.design.values.select_rows(rows.iter()))
    }

    /// Fits `prior` to the given rows (without conditioning).
    pub fn fit(&self, prior: &PriorConfig, rows: &[usize], seed: u64) -> Result<FittedModel> {
        let v = self.rows_design(rows);
        let y = DVector::from_iterator(rows.len(), rows.iter().map(|&r| self.data.outputs[r]));
        let n = self.idx.len();
        let noise = self.cfg.noise_variance;
        let chain = ChainConfig {
            seed,
            ..self.cfg.mcmc.clone()
        };
        let gaussian = |mean: DVector<f64>, var: f64| -> Result<FittedModel> {
            let prior = GaussianPrior::new(mean, DMatrix::identity(n, n) * var)?;
            Ok(FittedModel {
                posterior: conjugate_posterior(&v, &y, &prior, NoiseSpec::new(noise)?)?,
                sparse: None,
            })
        };
        match prior {
            PriorConfig::ZeroGaussian { variance } => gaussian(DVector::zeros(n), *variance),
            PriorConfig::InformedGaussian { variance, .. } => {
                let mean = self
                    .informed_mean
                    .clone()
                    .ok_or_else(|| Error::Config("informed prior mean not loaded".into()))?;
                gaussian(mean, *variance)
            }
            PriorConfig::Horseshoe { nu, s, beta } => {
                let hs = HorseshoeConfig::new(*nu, *s, *beta, noise, rows.len())?;
                let fit = fit_sparse(&v, &y, &hs, &chain)?;
                Ok(FittedModel {
                    posterior: gaussian_from_fit(&fit)?,
                    sparse: Some(fit),
                })
            }
            PriorConfig::HierarchicalGaussian => {
                let fit = fit_hierarchical_gaussian(&v, &y, noise, &chain)?;
                Ok(FittedModel {
                    posterior: gaussian_from_fit(&fit)?,
                    sparse: Some(fit),
                })
            }
        }
    }

    /// Conditioning value for a fit on `train_rows`.
    pub fn conditioning_value(&self, spec: &ConditioningConfig, train_rows: &[usize]) -> f64 {
        match spec.value {
            ValueSource::Literal { value } => value,
            ValueSource::DataMean => self.data.outputs.mean(),
            ValueSource::TrainMean => {
                train_rows.iter().map(|&r| self.data.outputs[r]).sum::<f64>() / train_rows.len() as f64
            }
        }
    }

    /// Fit plus optional conditioning on the spatial mean.
    pub fn fit_variant(&self, variant: &Variant, rows: &[usize], seed: u64) -> Result<(FittedModel, CoefficientPosterior)> {
        let fitted = self.fit(&variant.prior, rows, seed)?;
        let post = match (&self.cfg.conditioning, variant.conditioned) {
            (Some(spec), true) => {
                let a = self.conditioning_value(spec, rows);
                condition_spatial_mean(&fitted.posterior, a, spec.value_variance)?
            }
            _ => fitted.posterior.clone(),
        };
        Ok((fitted, post))
    }
}

/// Conditions a coefficient posterior on the spatial mean taking value `a`
/// with variance `value_variance`.
pub fn condition_spatial_mean(post: &CoefficientPosterior, a: f64, value_variance: f64) -> Result<CoefficientPosterior> {
    let value = UncertainFunctionalValue::new(
        DVector::from_element(1, a),
        DMatrix::from_element(1, 1, value_variance),
    )?;
    condition_coefficients(post, &spatial_mean_functional(post.dim()), &value)
}

/// Posterior mean and standard deviation at the test rows of one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialPredictions {
    pub trial: usize,
    pub train_size: usize,
    pub rows: Vec<usize>,
    pub observed: Vec<f64>,
    pub mean: BTreeMap<String, Vec<f64>>,
    pub sd: BTreeMap<String, Vec<f64>>,
}

/// Report plus the per-trial prediction tables.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: FitReport,
    pub predictions: Vec<TrialPredictions>,
}

/// Per-coefficient summaries of `post`. Intervals come from the coefficient
/// draws of `sparse` when given, otherwise from the Gaussian marginals.
pub fn coefficient_summaries(
    idx: &MultiIndexSet,
    post: &CoefficientPosterior,
    sparse: Option<&SparseFit>,
) -> Vec<CoefficientSummary> {
    let sd = post.std_devs();
    (0..idx.len())
        .map(|i| {
            let (lower, upper) = match sparse {
                Some(f) => (f.summaries[i].lower, f.summaries[i].upper),
                None => (post.mean[i] - 1.959963984540054 * sd[i], post.mean[i] + 1.959963984540054 * sd[i]),
            };
            CoefficientSummary {
                index: idx.get(i).map(<[usize]>::to_vec).unwrap_or_default(),
                mean: post.mean[i],
                sd: sd[i],
                lower,
                upper,
            }
        })
        .collect()
}

/// Output mean and variance distributions, plus first-order and total
/// Sobol indices per input (omitted when the output variance is zero).
pub fn moments_report(
    post: &CoefficientPosterior,
    idx: &MultiIndexSet,
    names: &[String],
    samples: usize,
    seed: u64,
) -> Result<MomentsReport> {
    let output_mean = MomentSummary::from(&output_mean_distribution(post));
    let output_variance = MomentSummary::from(&output_variance_distribution(post, samples, derive_seed(seed, 1, 0))?);
    let mut sobol = Vec::new();
    for d in 0..idx.dim() {
        let first = sobol_index(post, idx, &first_order_set(idx, d)?, samples, derive_seed(seed, 2, d as u64));
        let total = sobol_index(post, idx, &total_effect_set(idx, d)?, samples, derive_seed(seed, 3, d as u64));
        match (first, total) {
            (Ok(f), Ok(t)) => sobol.push(SobolEntry {
                input: d,
                name: names.get(d).cloned().unwrap_or_else(|| format!("x{}", d + 1)),
                first_order: MomentSummary::from(&f),
                total: MomentSummary::from(&t),
            }),
            (Err(Error::InvalidArgument(_)), _) | (_, Err(Error::InvalidArgument(_))) => {
                log::warn!("output variance is zero; Sobol indices omitted");
                break;
            }
            (Err(e), _) | (_, Err(e)) => return Err(e),
        }
    }
    Ok(MomentsReport {
        output_mean,
        output_variance,
        sobol,
    })
}

/// Result of fitting the configured pipeline to every row.
pub struct FullFit {
    pub space: InputSpace,
    pub idx: MultiIndexSet,
    pub fitted: FittedModel,
    /// Conditioned when conditioning is configured.
    pub posterior: CoefficientPosterior,
    pub label: String,
}

pub fn fit_full(cfg: &ExperimentConfig, data: &Dataset) -> Result<FullFit> {
    let pipe = Pipeline::new(cfg, data)?;
    let variant = Variant::new(cfg.prior.clone(), cfg.conditioning.is_some());
    let rows: Vec<usize> = (0..data.len()).collect();
    let (fitted, posterior) = pipe
        .fit_variant(&variant, &rows, cfg.mcmc.seed)
        .map_err(|e| e.context("full-data fit"))?;
    Ok(FullFit {
        space: pipe.space,
        idx: pipe.idx,
        fitted,
        posterior,
        label: variant.label,
    })
}

/// Split, fit, optionally condition, and score every variant over all
/// trials and training sizes; then fit the configured pipeline to the
/// whole table for the coefficient and moment summaries.
pub fn run_experiment(cfg: &ExperimentConfig, data: &Dataset) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let pipe = Pipeline::new(cfg, data)?;
    let vars = variants(cfg);
    let output_sd = data.output_sd();
    let mut trials = Vec::new();
    let mut predictions = Vec::new();
    let mut diagnostics = Vec::new();

    if let Some(split) = &cfg.split {
        if !(output_sd > 0.0) {
            return Err(Error::Data("outputs are constant; normalized errors undefined".into()));
        }
        for (si, &size) in split.sizes(data.len())?.iter().enumerate() {
            for trial in 0..split.n_trials {
                let split_seed = derive_seed(split.seed, si as u64, trial as u64);
                let fit_seed = derive_seed(cfg.mcmc.seed, si as u64, trial as u64);
                let s = random_split(data.len(), size, split_seed)?;
                let test_design = pipe.rows_design(&s.test);
                let observed = DVector::from_iterator(s.test.len(), s.test.iter().map(|&r| data.outputs[r]));
                let mut rec = TrialRecord {
                    trial,
                    train_size: size,
                    split_seed,
                    rmse: BTreeMap::new(),
                    diagnostics: Vec::new(),
                };
                let mut pred = TrialPredictions {
                    trial,
                    train_size: size,
                    rows: s.test.clone(),
                    observed: observed.iter().copied().collect(),
                    mean: BTreeMap::new(),
                    sd: BTreeMap::new(),
                };
                // the conditioned and unconditioned variants of one prior share a fit
                let mut cache: Vec<(PriorConfig, FittedModel)> = Vec::new();
                for v in &vars {
                    let ctx = |e: Error| e.context(format!("trial {trial} (train size {size}, {})", v.label));
                    let fitted = match cache.iter().find(|(p, _)| *p == v.prior) {
                        Some((_, f)) => f.clone(),
                        None => {
                            let f = pipe.fit(&v.prior, &s.train, fit_seed).map_err(ctx)?;
                            if let Some(d) = f.diagnostics(&v.label) {
                                rec.diagnostics.push(d);
                            }
                            cache.push((v.prior.clone(), f.clone()));
                            f
                        }
                    };
                    let post = match (&cfg.conditioning, v.conditioned) {
                        (Some(spec), true) => {
                            let a = pipe.conditioning_value(spec, &s.train);
                            condition_spatial_mean(&fitted.posterior, a, spec.value_variance).map_err(ctx)?
                        }
                        _ => fitted.posterior.clone(),
                    };
                    let p = predictive_from_design(&post, &test_design);
                    rec.rmse
                        .insert(v.label.clone(), normalized_rmse(&observed, &p.mean, output_sd).map_err(ctx)?);
                    pred.mean.insert(v.label.clone(), p.mean.iter().copied().collect());
                    pred.sd.insert(v.label.clone(), p.std_devs().iter().copied().collect());
                }
                diagnostics.extend(rec.diagnostics.iter().cloned());
                trials.push(rec);
                predictions.push(pred);
            }
        }
    }

    let mut summary = Vec::new();
    let mut sizes: Vec<usize> = trials.iter().map(|t| t.train_size).collect();
    sizes.dedup();
    for &size in &sizes {
        for v in &vars {
            let (p, c): (Vec<f64>, Vec<f64>) = trials
                .iter()
                .filter(|t| t.train_size == size)
                .filter_map(|t| t.rmse.get(&v.label))
                .map(|r| (r.printed, r.conventional))
                .unzip();
            summary.push(SummaryRow {
                train_size: size,
                variant: v.label.clone(),
                n_trials: p.len(),
                median_printed: median(&p),
                median_conventional: median(&c),
            });
        }
    }

    let rows: Vec<usize> = (0..data.len()).collect();
    let (fitted, post) = pipe
        .fit_variant(&vars[0], &rows, cfg.mcmc.seed)
        .map_err(|e| e.context("full-data fit"))?;
    if let Some(d) = fitted.diagnostics(&format!("{} (all rows)", vars[0].label)) {
        diagnostics.push(d);
    }
    let sparse = if vars[0].conditioned { None } else { fitted.sparse.as_ref() };
    let coefficients = coefficient_summaries(&pipe.idx, &post, sparse);
    let moments = moments_report(&post, &pipe.idx, &data.columns, cfg.moments.samples, cfg.mcmc.seed)?;
    let converged = diagnostics.iter().all(DiagnosticsRecord::converged);

    let report = FitReport {
        config: cfg.clone(),
        dataset: DatasetSummary {
            source: data.source.as_ref().map(|p| p.display().to_string()),
            rows: data.len(),
            inputs: data.columns[..data.dim()].to_vec(),
            output: data.output_name().to_string(),
            output_sd,
        },
        primary: vars[0].label.clone(),
        variants: vars.iter().map(|v| v.label.clone()).collect(),
        coefficients,
        moments,
        trials,
        summary,
        diagnostics,
        converged,
    };
    Ok(ExperimentOutput { report, predictions })
}

/// Writes `report.json`, `coefficients.csv`, `rmse.csv`, `rmse_summary.csv`
/// and one `predictions/size{M}_trial{k}.csv` per trial.
pub fn write_experiment(out: &Path, result: &ExperimentOutput) -> Result<()> {
    std::fs::create_dir_all(out)?;
    let report = &result.report;
    write_json(&out.join("report.json"), report)?;
    write_coefficients(&out.join("coefficients.csv"), &report.coefficients)?;

    let mut w = csv_writer(&out.join("rmse.csv"))?;
    w.write_record(["trial", "train_size", "variant", "rmse_printed", "rmse_conventional"])
        .map_err(csv_err)?;
    for t in &report.trials {
        for (label, r) in &t.rmse {
            w.write_record([
                t.trial.to_string(),
                t.train_size.to_string(),
                label.clone(),
                fmt(r.printed),
                fmt(r.conventional),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;

    let mut w = csv_writer(&out.join("rmse_summary.csv"))?;
    w.write_record(["train_size", "variant", "n_trials", "median_rmse_printed", "median_rmse_conventional"])
        .map_err(csv_err)?;
    for r in &report.summary {
        w.write_record([
            r.train_size.to_string(),
            r.variant.clone(),
            r.n_trials.to_string(),
            fmt(r.median_printed),
            fmt(r.median_conventional),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;

    if !result.predictions.is_empty() {
        let dir = out.join("predictions");
        std::fs::create_dir_all(&dir)?;
        for p in &result.predictions {
            let mut w = csv_writer(&dir.join(format!("size{}_trial{:03}.csv", p.train_size, p.trial)))?;
            let mut header = vec!["row".to_string(), "observed".to_string()];
            for label in p.mean.keys() {
                header.push(format!("{label}_mean"));
                header.push(format!("{label}_sd"));
            }
            w.write_record(&header).map_err(csv_err)?;
            for (k, &row) in p.rows.iter().enumerate() {
                let mut rec = vec![row.to_string(), fmt(p.observed[k])];
                for label in p.mean.keys() {
                    rec.push(fmt(p.mean[label][k]));
                    rec.push(fmt(p.sd[label][k]));
                }
                w.write_record(&rec).map_err(csv_err)?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
