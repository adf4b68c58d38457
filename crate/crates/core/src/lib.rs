//! Bayesian polynomial chaos.
//!
//! Polynomial chaos surrogates `g(x) = sum_j alpha_j phi_j(x)` built on
//! orthonormal bases, with the coefficients treated as random:
//!
//! * [`basis`]: univariate families, index sets, Gauss rules, design matrices.
//! * [`linear_bayes`]: conjugate Gaussian posteriors and the equivalent
//!   kernel (Gaussian process) form.
//! * [`moments`]: posterior distributions of the output mean, variance and
//!   Sobol indices.
//! * [`conditioning`]: conditioning the surrogate on (possibly uncertain)
//!   values of linear functionals such as the spatial mean.
//! * [`sampler`]: Hamiltonian Monte Carlo for the non-conjugate models.
//! * [`sparse_prior`]: regularized horseshoe coefficient prior.
//! * [`coregional`]: multi-output models with a coregionalization matrix.
//! * [`app`]: data ingestion, configuration, experiment pipelines, reports.

pub mod app;
pub mod basis;
pub mod conditioning;
pub mod coregional;
pub mod error;
pub mod linalg;
pub mod linear_bayes;
pub mod moments;
pub mod rng;
pub mod sampler;
pub mod sparse_prior;

pub use error::{Error, Result};
