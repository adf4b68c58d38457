use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::metrics::NormalizedRmse;
use crate::error::{Error, Result};
use crate::moments::MomentDistribution;
use crate::sampler::SampleBatch;

/// Posterior summary of one coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub index: Vec<usize>,
    pub mean: f64,
    pub sd: f64,
    /// Central 95% interval.
    pub lower: f64,
    pub upper: f64,
}

/// Summary of a scalar posterior quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSummary {
    pub mean: f64,
    pub variance: f64,
    pub median: f64,
    pub lower: f64,
    pub upper: f64,
    /// Closed-form expectation, when available for a sampled quantity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analytic_mean: Option<f64>,
}

impl From<&MomentDistribution> for MomentSummary {
    fn from(m: &MomentDistribution) -> Self {
        let s = m.summary();
        MomentSummary {
            mean: m.mean,
            variance: m.variance,
            median: s.median,
            lower: s.lower,
            upper: s.upper,
            analytic_mean: m.analytic_mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolEntry {
    /// Zero-based input position.
    pub input: usize,
    pub name: String,
    pub first_order: MomentSummary,
    pub total: MomentSummary,
}

/// Output mean and variance distributions and Sobol indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentsReport {
    pub output_mean: MomentSummary,
    pub output_variance: MomentSummary,
    pub sobol: Vec<SobolEntry>,
}

/// Sampler health for one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub label: String,
    /// `None` when every parameter is degenerate.
    pub max_r_hat: Option<f64>,
    pub min_ess_bulk: Option<f64>,
    pub divergences: usize,
    pub accept_rate: Vec<f64>,
    pub step_size: Vec<f64>,
}

/// Above this R-hat a run counts as not converged.
pub const R_HAT_LIMIT: f64 = 1.1;

impl DiagnosticsRecord {
    pub fn from_batch(label: impl Into<String>, batch: &SampleBatch) -> Self {
        Self::from_batch_subset(label, batch, None)
    }

    /// Diagnostics restricted to `params` (all parameters when `None`).
    pub fn from_batch_subset(label: impl Into<String>, batch: &SampleBatch, params: Option<&[usize]>) -> Self {
        let chosen: Vec<_> = match params {
            Some(p) => p.iter().filter_map(|&i| batch.diagnostics.get(i)).collect(),
            None => batch.diagnostics.iter().collect(),
        };
        let finite = |v: f64| v.is_finite().then_some(v);
        let max_r_hat = chosen
            .iter()
            .filter_map(|d| finite(d.r_hat))
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
        let min_ess_bulk = chosen
            .iter()
            .filter_map(|d| finite(d.ess_bulk))
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.min(v))));
        DiagnosticsRecord {
            label: label.into(),
            max_r_hat,
            min_ess_bulk,
            divergences: batch.divergences.iter().sum(),
            accept_rate: batch.accept_rate.clone(),
            step_size: batch.step_size.clone(),
        }
    }

    pub fn converged(&self) -> bool {
        self.max_r_hat.is_none_or(|r| r <= R_HAT_LIMIT)
    }
}

/// Errors of every variant in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub train_size: usize,
    pub split_seed: u64,
    pub rmse: BTreeMap<String, NormalizedRmse>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<DiagnosticsRecord>,
}

/// Median errors per training size and variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub train_size: usize,
    pub variant: String,
    pub n_trials: usize,
    pub median_printed: f64,
    pub median_conventional: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub source: Option<String>,
    pub rows: usize,
    pub inputs: Vec<String>,
    pub output: String,
    pub output_sd: f64,
}

/// Everything a `fit` run produces, apart from per-trial prediction tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub config: ExperimentConfig,
    pub dataset: DatasetSummary,
    /// Label of the configured pipeline; the other labels are baselines.
    pub primary: String,
    pub variants: Vec<String>,
    /// Fit on every row with the configured pipeline.
    pub coefficients: Vec<CoefficientSummary>,
    pub moments: MomentsReport,
    pub trials: Vec<TrialRecord>,
    pub summary: Vec<SummaryRow>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub converged: bool,
}

impl FitReport {
    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Data(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Data(e.to_string()))
    }

    /// Median printed-formula error of `variant` at `train_size`.
    pub fn median(&self, train_size: usize, variant: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|r| r.train_size == train_size && r.variant == variant)
            .map(|r| r.median_printed)
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Data(e.to_string()))?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

pub(crate) fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Data(e.to_string())
}
