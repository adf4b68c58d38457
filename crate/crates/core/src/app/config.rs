use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::data::Bounds;
use crate::basis::{IndexScheme, InputSpace, MultiIndexSet, PolyFamily};
use crate::coregional::PredictOptions;
use crate::error::{Error, Result};
use crate::sampler::ChainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BasisConfig {
    pub family: PolyFamily,
    pub scheme: IndexScheme,
    pub max_degree: usize,
}

impl BasisConfig {
    /// Reference input space: canonical uniform for Legendre, standard
    /// Gaussian for Hermite.
    pub fn space(&self, dim: usize) -> Result<InputSpace> {
        match self.family {
            PolyFamily::Legendre => InputSpace::canonical_uniform(dim),
            PolyFamily::Hermite => InputSpace::standard_gaussian(dim),
        }
    }

    pub fn index_set(&self, dim: usize) -> Result<MultiIndexSet> {
        MultiIndexSet::build(self.scheme, dim, self.max_degree)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Training table; last column is the output.
    pub path: PathBuf,
    /// Physical `[lower, upper]` per input, mapped onto `[-1, 1]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<Vec<Bounds>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PriorConfig {
    /// `N(0, variance I)`.
    ZeroGaussian {
        #[serde(default = "unit")]
        variance: f64,
    },
    /// `N(mu, variance I)` with `mu` read from a coefficient table (one row
    /// per basis term, value in the last column).
    InformedGaussian {
        coefficients: PathBuf,
        #[serde(default = "unit")]
        variance: f64,
    },
    /// Regularized horseshoe.
    Horseshoe { nu: f64, s: f64, beta: f64 },
    /// `N(0, v I)` with `v ~ HalfNormal(1)`.
    HierarchicalGaussian,
}

fn unit() -> f64 {
    1.0
}

impl PriorConfig {
    pub fn is_sampled(&self) -> bool {
        matches!(self, PriorConfig::Horseshoe { .. } | PriorConfig::HierarchicalGaussian)
    }

    pub fn label(&self) -> &'static str {
        match self {
            PriorConfig::ZeroGaussian { .. } => "zero_prior",
            PriorConfig::InformedGaussian { .. } => "informed_prior",
            PriorConfig::Horseshoe { .. } => "horseshoe",
            PriorConfig::HierarchicalGaussian => "hierarchical_gaussian",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Functional {
    SpatialMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValueSource {
    Literal { value: f64 },
    /// Mean of every output in the table (training and test rows).
    DataMean,
    /// Mean of the training outputs only.
    TrainMean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConditioningConfig {
    #[serde(default = "spatial_mean")]
    pub functional: Functional,
    pub value: ValueSource,
    /// Variance of the conditioning value; zero conditions exactly.
    #[serde(default)]
    pub value_variance: f64,
}

fn spatial_mean() -> Functional {
    Functional::SpatialMean
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    /// Training rows per trial (alternative to `train_fraction`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_fraction: Option<f64>,
    /// Several training sizes; produces an error-versus-size table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_sizes: Option<Vec<usize>>,
    #[serde(default = "default_trials")]
    pub n_trials: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_trials() -> usize {
    20
}

impl SplitConfig {
    /// Training sizes to run for a table of `m` rows.
    pub fn sizes(&self, m: usize) -> Result<Vec<usize>> {
        let sizes = if let Some(s) = &self.train_sizes {
            s.clone()
        } else if let Some(n) = self.train {
            vec![n]
        } else if let Some(f) = self.train_fraction {
            vec![((f * m as f64).round() as usize).max(1)]
        } else {
            return Err(Error::Config("split needs train, train_fraction or train_sizes".into()));
        };
        for &n in &sizes {
            if n == 0 || n >= m {
                return Err(Error::Data(format!(
                    "training size {n} leaves no test rows in a table of {m}"
                )));
            }
        }
        Ok(sizes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    /// Draws for the sampled output-variance and Sobol distributions.
    #[serde(default = "default_moment_samples")]
    pub samples: usize,
}

fn default_moment_samples() -> usize {
    10_000
}

impl Default for MomentsConfig {
    fn default() -> Self {
        MomentsConfig {
            samples: default_moment_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PredictConfig {
    /// Inputs to predict at; an extra trailing column is read as outputs.
    pub inputs: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    #[serde(default = "default_oracle_samples")]
    pub samples: usize,
}

fn default_oracle_samples() -> usize {
    1_000_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoregionalConfig {
    /// One training table per output, sharing the input columns.
    pub outputs: Vec<PathBuf>,
    /// Optional test tables, one per output.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<Vec<PathBuf>>,
    /// Prior variance of the independent per-output baseline.
    #[serde(default = "default_independent_variance")]
    pub independent_prior_variance: f64,
    #[serde(default)]
    pub predict: PredictOptions,
}

fn default_independent_variance() -> f64 {
    1e-3
}

/// Everything one CLI run needs. Relative paths are resolved against the
/// directory of the config file by [`ExperimentConfig::load`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub basis: BasisConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<DataConfig>,
    pub noise_variance: f64,
    pub prior: PriorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioning: Option<ConditioningConfig>,
    #[serde(default)]
    pub mcmc: ChainConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitConfig>,
    /// Also run the natural baseline of each configured option (zero prior
    /// mean, no conditioning, hierarchical Gaussian instead of horseshoe)
    /// and report paired errors.
    #[serde(default = "yes")]
    pub compare: bool,
    #[serde(default)]
    pub moments: MomentsConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predict: Option<PredictConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coregional: Option<CoregionalConfig>,
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Parses, resolves relative paths and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = &mut self.data {
            fix(&mut d.path);
        }
        if let PriorConfig::InformedGaussian { coefficients, .. } = &mut self.prior {
            fix(coefficients);
        }
        if let Some(p) = &mut self.predict {
            fix(&mut p.inputs);
        }
        if let Some(c) = &mut self.coregional {
            c.outputs.iter_mut().for_each(fix);
            if let Some(t) = &mut c.test {
                t.iter_mut().for_each(fix);
            }
        }
    }

    /// `--seed` replaces both the split and the sampler seed.
    pub fn override_seed(&mut self, seed: u64) {
        self.mcmc.seed = seed;
        if let Some(s) = &mut self.split {
            s.seed = seed;
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.noise_variance > 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::Config("noise_variance must be positive".into()));
        }
        match &self.prior {
            PriorConfig::ZeroGaussian { variance } | PriorConfig::InformedGaussian { variance, .. } => {
                if !(*variance > 0.0 && variance.is_finite()) {
                    return Err(Error::Config("prior variance must be positive".into()));
                }
            }
            PriorConfig::Horseshoe { nu, s, beta } => {
                if !(*nu > 0.0 && *s > 0.0 && *beta > 0.0 && *beta < 1.0) {
                    return Err(Error::Config("horseshoe needs nu > 0, s > 0 and beta in (0, 1)".into()));
                }
            }
            PriorConfig::HierarchicalGaussian => {}
        }
        if self.prior.is_sampled() || self.coregional.is_some() {
            self.mcmc.validate()?;
        }
        if let Some(s) = &self.split {
            if let Some(f) = s.train_fraction {
                if !(f > 0.0 && f < 1.0) {
                    return Err(Error::Config("train_fraction must lie in (0, 1)".into()));
                }
            }
            if s.n_trials == 0 {
                return Err(Error::Config("n_trials must be at least 1".into()));
            }
        }
        if let Some(c) = &self.conditioning {
            if !(c.value_variance >= 0.0 && c.value_variance.is_finite()) {
                return Err(Error::Config("conditioning value_variance must be non-negative".into()));
            }
        }
        if self.moments.samples < crate::moments::MIN_SAMPLES {
            return Err(Error::Config(format!(
                "moments.samples must be at least {}",
                crate::moments::MIN_SAMPLES
            )));
        }
        if let Some(o) = &self.oracle {
            if o.samples < crate::moments::MIN_SAMPLES {
                return Err(Error::Config("oracle.samples must be at least 1000".into()));
            }
        }
        if let Some(b) = self.data.as_ref().and_then(|d| d.bounds.as_ref()) {
            for bd in b {
                Bounds::new(bd.lower, bd.upper)?;
            }
        }
        if let Some(c) = &self.coregional {
            if c.outputs.len() < 2 {
                return Err(Error::Config("coregional runs need at least two outputs".into()));
            }
            if c.test.as_ref().is_some_and(|t| t.len() != c.outputs.len()) {
                return Err(Error::Config("one coregional test table per output required".into()));
            }
            if !(c.independent_prior_variance > 0.0) {
                return Err(Error::Config("independent_prior_variance must be positive".into()));
            }
        }
        for p in self.referenced_files() {
            if !p.exists() {
                return Err(Error::Config(format!("referenced file {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    fn referenced_files(&self) -> Vec<&Path> {
        let mut v: Vec<&Path> = Vec::new();
        if let Some(d) = &self.data {
            v.push(&d.path);
        }
        if let PriorConfig::InformedGaussian { coefficients, .. } = &self.prior {
            v.push(coefficients);
        }
        if let Some(p) = &self.predict {
            v.push(&p.inputs);
        }
        if let Some(c) = &self.coregional {
            v.extend(c.outputs.iter().map(PathBuf::as_path));
            if let Some(t) = &c.test {
                v.extend(t.iter().map(PathBuf::as_path));
            }
        }
        v
    }

    pub fn bounds(&self) -> Option<&[Bounds]> {
        self.data.as_ref().and_then(|d| d.bounds.as_deref())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
noise_variance = 3.0
[basis]
family = "legendre"
scheme = "total_order"
max_degree = 3
[prior]
kind = "zero_gaussian"
[split]
train = 15
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.prior, PriorConfig::ZeroGaussian { variance: 1.0 });
        assert_eq!(cfg.split.as_ref().unwrap().n_trials, 20);
        assert!(cfg.compare);
        cfg.validate().unwrap();
        let again = ExperimentConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn bad_values_are_config_errors() {
        let bad = MINIMAL.replace("noise_variance = 3.0", "noise_variance = -1.0");
        let cfg = ExperimentConfig::from_toml(&bad).unwrap();
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let typo = MINIMAL.replace("max_degree", "max_degre");
        assert!(matches!(ExperimentConfig::from_toml(&typo), Err(Error::Config(_))));
        let frac = MINIMAL.replace("train = 15", "train_fraction = 1.5");
        assert!(ExperimentConfig::from_toml(&frac).unwrap().validate().is_err());
    }

    #[test]
    fn missing_file_is_rejected() {
        let mut cfg = ExperimentConfig::from_toml(MINIMAL).unwrap();
        cfg.data = Some(DataConfig {
            path: "/definitely/not/here.csv".into(),
            bounds: None,
        });
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
