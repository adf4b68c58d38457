//! Experiment plumbing: CSV ingestion, TOML configuration, the
//! split/fit/condition/score pipeline, metrics, Monte Carlo oracles, JSON
//! reports and synthetic datasets.

mod config;
mod coregional_run;
mod data;
mod experiment;
mod metrics;
mod report;
pub mod synthetic;

pub use config::{
    BasisConfig, ConditioningConfig, CoregionalConfig, DataConfig, ExperimentConfig, Functional, MomentsConfig,
    OracleConfig, PredictConfig, PriorConfig, SplitConfig, ValueSource,
};
pub use coregional_run::{
    independent_predictions, load_stacked, run_coregional, write_coregional, CoregionalReport, CoregionalRun,
    OutputComparison,
};
pub use data::{ingest_csv, ingest_inputs, random_split, write_csv, Bounds, Dataset, Split, BOUND_TOLERANCE};
pub use experiment::{
    coefficient_summaries, condition_spatial_mean, derive_seed, fit_full, moments_report, read_coefficients,
    run_experiment, variants, write_coefficients, write_experiment, ExperimentOutput, FittedModel, FullFit, Pipeline,
    TrialPredictions, Variant,
};
pub use metrics::{mc_oracle, mc_oracle_expansion, median, normalized_rmse, NormalizedRmse, OracleMoments};
pub use report::{
    CoefficientSummary, DatasetSummary, DiagnosticsRecord, FitReport, MomentSummary, MomentsReport, SobolEntry,
    SummaryRow, TrialRecord, R_HAT_LIMIT,
};
