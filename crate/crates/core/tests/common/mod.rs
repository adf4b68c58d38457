//! Helpers shared by the integration tests.
#![allow(dead_code)]

use bayes_pc::linear_bayes::CoefficientPosterior;
use nalgebra::{DMatrix, DVector};
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    bayes_pc::rng::stream(seed, 7)
}

pub fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    bayes_pc::rng::standard_normals(rng, n)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_vec(r, c, normals(rng, r * c))
}

/// `A A' / n + floor I`, comfortably positive definite.
pub fn random_spd(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> DMatrix<f64> {
    let a = random_matrix(rng, n, n);
    let mut s = &a * a.transpose() / n as f64;
    for i in 0..n {
        s[(i, i)] += floor;
    }
    (&s + s.transpose()) * 0.5
}

pub fn random_posterior(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CoefficientPosterior {
    let mean = DVector::from_vec(normals(rng, n));
    let cov = random_spd(rng, n, 0.05) * scale;
    CoefficientPosterior::new(mean, cov).unwrap()
}

pub fn uniform_points(rng: &mut ChaCha8Rng, m: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(m, d, |_, _| rng.random_range(-1.0..1.0))
}

/// Sample mean, and the standard error of the mean.
pub fn mean_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (v / n).sqrt())
}

/// Sample variance and its standard error from the fourth central moment.
pub fn var_se(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    let m4 = x.iter().map(|v| (v - m).powi(4)).sum::<f64>() / n;
    (m2 * n / (n - 1.0), ((m4 - m2 * m2) / n).max(0.0).sqrt())
}

pub fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
