use serde::{Deserialize, Serialize};

use super::univariate::{PolyFamily, UnivariateBasis};
use crate::error::{Error, Result};

/// Marginal distribution of a single input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputDistribution {
    Uniform { lower: f64, upper: f64 },
    StandardGaussian,
}

impl InputDistribution {
    pub fn uniform(lower: f64, upper: f64) -> Result<Self> {
        if !(lower.is_finite() && upper.is_finite() && lower < upper) {
            return Err(Error::InvalidArgument(format!(
                "uniform bounds must satisfy lower < upper, got [{lower}, {upper}]"
            )));
        }
        Ok(InputDistribution::Uniform { lower, upper })
    }

    /// Uniform on [-1, 1].
    pub fn canonical_uniform() -> Self {
        InputDistribution::Uniform {
            lower: -1.0,
            upper: 1.0,
        }
    }

    pub fn family(&self) -> PolyFamily {
        match self {
            InputDistribution::Uniform { .. } => PolyFamily::Legendre,
            InputDistribution::StandardGaussian => PolyFamily::Hermite,
        }
    }

    /// Orthonormal polynomial family matched to this density.
    pub fn basis(&self, max_degree: usize) -> UnivariateBasis {
        UnivariateBasis::new(self.family(), max_degree)
    }

    /// Maps a physical value to the reference variable of the matched family.
    pub fn to_reference(&self, x: f64) -> f64 {
        match *self {
            InputDistribution::Uniform { lower, upper } => {
                (2.0 * x - lower - upper) / (upper - lower)
            }
            InputDistribution::StandardGaussian => x,
        }
    }

    pub fn from_reference(&self, t: f64) -> f64 {
        match *self {
            InputDistribution::Uniform { lower, upper } => {
                lower + 0.5 * (t + 1.0) * (upper - lower)
            }
            InputDistribution::StandardGaussian => t,
        }
    }

    /// Distance of `x` outside the support, zero inside.
    pub fn excursion(&self, x: f64) -> f64 {
        match *self {
            InputDistribution::Uniform { lower, upper } => {
                (lower - x).max(x - upper).max(0.0)
            }
            InputDistribution::StandardGaussian => 0.0,
        }
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        use rand::RngExt;
        use rand_distr::{Distribution, StandardNormal};
        match *self {
            InputDistribution::Uniform { lower, upper } => rng.random_range(lower..upper),
            InputDistribution::StandardGaussian => StandardNormal.sample(rng),
        }
    }
}

/// Product of independent marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSpace {
    dims: Vec<InputDistribution>,
}

impl InputSpace {
    pub fn new(dims: Vec<InputDistribution>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidArgument(
                "input space needs at least one dimension".into(),
            ));
        }
        Ok(InputSpace { dims })
    }

    /// `d` copies of Uniform[-1, 1].
    pub fn canonical_uniform(d: usize) -> Result<Self> {
        Self::new(vec![InputDistribution::canonical_uniform(); d])
    }

    pub fn standard_gaussian(d: usize) -> Result<Self> {
        Self::new(vec![InputDistribution::StandardGaussian; d])
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn marginals(&self) -> &[InputDistribution] {
        &self.dims
    }

    /// Draws `m` points from the joint density, one per row.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R, m: usize) -> nalgebra::DMatrix<f64> {
        let d = self.dim();
        let mut x = nalgebra::DMatrix::zeros(m, d);
        for i in 0..m {
            for (k, dist) in self.dims.iter().enumerate() {
                x[(i, k)] = dist.sample(rng);
            }
        }
        x
    }
}
