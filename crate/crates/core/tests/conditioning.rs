mod common;

use bayes_pc::basis::*;
use bayes_pc::conditioning::*;
use bayes_pc::linear_bayes::{predictive_from_design, CoefficientPosterior};
use bayes_pc::moments::output_mean_distribution;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn setup(seed: u64, m: usize) -> (CoefficientPosterior, DesignMatrix) {
    let mut rng = common::rng(seed);
    let space = InputSpace::canonical_uniform(2).unwrap();
    let idx = build_index_set(IndexScheme::TotalOrder, 2, 2).unwrap();
    let x = common::uniform_points(&mut rng, m, 2);
    let v = design_matrix(&space, &idx, &x, None).unwrap();
    (common::random_posterior(&mut rng, idx.len(), 0.5), v)
}

#[test]
fn diagonal_covariance_keeps_only_the_constant_column() {
    let (post, v) = setup(1, 6);
    let diag = CoefficientPosterior::new(post.mean.clone(), DMatrix::from_diagonal(&post.covariance.diagonal())).unwrap();
    let b = spatial_mean_blocks(&diag, &v).unwrap();
    for i in 0..6 {
        assert!((b.s12[(i, 0)] - diag.covariance[(0, 0)]).abs() < 1e-15);
    }
}

#[test]
fn zero_covariance_cannot_be_conditioned() {
    let (post, v) = setup(2, 4);
    let det = CoefficientPosterior::deterministic(post.mean);
    let b = spatial_mean_blocks(&det, &v).unwrap();
    assert!(b.s12.iter().all(|&x| x == 0.0) && b.s22[(0, 0)] == 0.0);
    let r = condition_on_value(&b, &DVector::from_element(1, 1.0));
    assert!(matches!(r, Err(bayes_pc::Error::Singular(_))));
}

#[test]
fn s22_is_the_output_mean_variance() {
    for seed in 0..10 {
        let (post, v) = setup(seed, 5);
        let b = spatial_mean_blocks(&post, &v).unwrap();
        assert!((b.s22[(0, 0)] - output_mean_distribution(&post).variance).abs() < 1e-12);
    }
}

#[test]
fn conditioning_on_the_prior_mean_changes_nothing() {
    let (post, v) = setup(3, 7);
    let b = spatial_mean_blocks(&post, &v).unwrap();
    let c = condition_on_value(&b, &b.mu2).unwrap();
    assert_eq!(c.mean, b.mu1);
}

#[test]
fn exact_conditioning_pins_the_spatial_mean() {
    let (post, v) = setup(4, 7);
    let a = DVector::from_element(1, 7.25);
    let c = condition_coefficients(&post, &spatial_mean_functional(post.dim()), &UncertainFunctionalValue::exact(a)).unwrap();
    let m = output_mean_distribution(&c);
    assert!((m.mean - 7.25).abs() < 1e-8);
    assert!(m.variance.abs() < 1e-10);
    let b = spatial_mean_blocks(&post, &v).unwrap();
    let cond = condition_on_value(&b, &DVector::from_element(1, 7.25)).unwrap();
    for i in 0..7 {
        assert!(cond.covariance[(i, i)] <= b.s11[(i, i)] + 1e-12);
    }
}

#[test]
fn zero_value_uncertainty_equals_exact_conditioning() {
    let (post, v) = setup(5, 5);
    let b = spatial_mean_blocks(&post, &v).unwrap();
    let a = DVector::from_element(1, -1.5);
    let exact = condition_on_value(&b, &a).unwrap();
    let unc = condition_on_uncertain_value(&b, &UncertainFunctionalValue::new(a, DMatrix::zeros(1, 1)).unwrap()).unwrap();
    assert_eq!(exact, unc);
}

#[test]
fn value_uncertainty_inflates_covariance_monotonically() {
    let (post, v) = setup(6, 5);
    let b = spatial_mean_blocks(&post, &v).unwrap();
    let a = DVector::from_element(1, 0.3);
    let at = |s: f64| condition_on_uncertain_value(&b, &UncertainFunctionalValue::new(a.clone(), DMatrix::from_element(1, 1, s)).unwrap()).unwrap();
    let (small, large, huge) = (at(0.1), at(10.0), at(1e6));
    let gain = &b.s12 / b.s22[(0, 0)];
    for i in 0..5 {
        assert!(small.covariance[(i, i)] <= large.covariance[(i, i)]);
        // inflation is exactly gain gain' times the value variance
        let d = large.covariance[(i, i)] - small.covariance[(i, i)];
        assert!((d - 9.9 * gain[(i, 0)].powi(2)).abs() < 1e-9 * d.abs().max(1.0));
        let far = huge.covariance[(i, i)] - large.covariance[(i, i)];
        assert!((far - (1e6 - 10.0) * gain[(i, 0)].powi(2)).abs() < 1e-6 * far.abs().max(1.0));
    }
}

#[test]
fn two_coefficient_instance_matches_joint_sampling() {
    // alpha ~ N(mu, S), g(x) = v' alpha at one point, L = alpha_1 ~ N(0.4, 0.09)
    let mu = DVector::from_vec(vec![1.0, -0.5]);
    let s = DMatrix::from_row_slice(2, 2, &[0.8, 0.3, 0.3, 0.5]);
    let post = CoefficientPosterior::new(mu.clone(), s.clone()).unwrap();
    let v = DesignMatrix::from_values(DMatrix::from_row_slice(1, 2, &[1.0, 0.7]));
    let b = spatial_mean_blocks(&post, &v).unwrap();
    let value = UncertainFunctionalValue::new(DVector::from_element(1, 0.4), DMatrix::from_element(1, 1, 0.09)).unwrap();
    let got = condition_on_uncertain_value(&b, &value).unwrap();

    // Sample L from its distribution, then alpha_2 | alpha_1 = L with scalar
    // Gaussian algebra, and form g.
    let mut rng = common::rng(77);
    let n = 400_000;
    let z = common::normals(&mut rng, 2 * n);
    let cond_sd = (s[(1, 1)] - s[(1, 0)].powi(2) / s[(0, 0)]).sqrt();
    let g: Vec<f64> = (0..n)
        .map(|k| {
            let l = 0.4 + 0.3 * z[2 * k];
            let a2 = mu[1] + s[(1, 0)] / s[(0, 0)] * (l - mu[0]) + cond_sd * z[2 * k + 1];
            l + 0.7 * a2
        })
        .collect();
    let (m, mse) = common::mean_se(&g);
    let (var, vse) = common::var_se(&g);
    assert!((got.mean[0] - m).abs() < 3.0 * mse, "{} vs {m}", got.mean[0]);
    assert!((got.covariance[(0, 0)] - var).abs() < 3.0 * vse, "{} vs {var}", got.covariance[(0, 0)]);
}

#[test]
fn mismatched_shapes_rejected() {
    let (post, v) = setup(8, 3);
    let b = spatial_mean_blocks(&post, &v).unwrap();
    assert!(condition_on_value(&b, &DVector::zeros(2)).is_err());
    assert!(UncertainFunctionalValue::new(DVector::zeros(1), DMatrix::from_element(1, 1, -1.0)).is_err());
    assert!(functional_blocks(&post, &v, &DMatrix::zeros(1, 3)).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn process_and_coefficient_conditioning_agree(seed in 0u64..1000, a in -5.0f64..5.0, va in 0.0f64..2.0) {
        let (post, v) = setup(seed, 6);
        let value = UncertainFunctionalValue::new(DVector::from_element(1, a), DMatrix::from_element(1, 1, va)).unwrap();
        let direct = condition_on_uncertain_value(&spatial_mean_blocks(&post, &v).unwrap(), &value).unwrap();
        let coef = condition_coefficients(&post, &spatial_mean_functional(post.dim()), &value).unwrap();
        let via = predictive_from_design(&coef, &v);
        prop_assert!((direct.mean - via.mean).amax() < 1e-9);
        prop_assert!(common::max_abs_diff(&direct.covariance, &via.covariance) < 1e-9);
    }

    #[test]
    fn general_functionals_match_textbook_formula(seed in 0u64..1000) {
        let (post, v) = setup(seed, 4);
        let mut rng = common::rng(seed + 1);
        let c = common::random_matrix(&mut rng, 2, post.dim());
        let a = DVector::from_vec(common::normals(&mut rng, 2));
        let b = functional_blocks(&post, &v, &c).unwrap();
        let got = condition_on_value(&b, &a).unwrap();
        let inv = b.s22.clone().try_inverse().unwrap();
        let mean = &b.mu1 + &b.s12 * &inv * (&a - &b.mu2);
        let cov = &b.s11 - &b.s12 * &inv * b.s12.transpose();
        prop_assert!((got.mean - mean).amax() < 1e-8);
        prop_assert!(common::max_abs_diff(&got.covariance, &cov) < 1e-8);
        for i in 0..4 {
            prop_assert!(got.covariance[(i, i)] <= b.s11[(i, i)] + 1e-10);
        }
    }
}
