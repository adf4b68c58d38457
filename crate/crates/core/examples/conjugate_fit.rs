//! Conjugate Gaussian fit of a polynomial surrogate and its predictive
//! distribution, compared with ordinary least squares.

use bayes_pc::basis::{design_matrix, IndexScheme, InputSpace, MultiIndexSet};
use bayes_pc::linear_bayes::{conjugate_posterior, least_squares, predictive, GaussianPrior, NoiseSpec};
use bayes_pc::rng;
use nalgebra::DVector;
use rand_distr::{Distribution, Normal};

fn response(x: &[f64]) -> f64 {
    (1.5 * x[0]).exp() + 0.5 * x[1] * x[1] - x[0] * x[1]
}

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    let space = InputSpace::canonical_uniform(2)?;
    let idx = MultiIndexSet::build(IndexScheme::TotalOrder, 2, 4)?;
    let mut r = rng::stream(7, 0);
    let noise = Normal::new(0.0, 0.05)?;

    let x = space.sample(&mut r, 30);
    let y = DVector::from_fn(x.nrows(), |i, _| {
        response(&[x[(i, 0)], x[(i, 1)]]) + noise.sample(&mut r)
    });
    let v = design_matrix(&space, &idx, &x, None)?;
    let post = conjugate_posterior(&v, &y, &GaussianPrior::isotropic(idx.len(), 10.0)?, NoiseSpec::new(0.05f64.powi(2))?)?;
    let ls = least_squares(&v, &y)?;

    println!("{} coefficients from {} points", idx.len(), x.nrows());
    println!("{:>12} {:>10} {:>10} {:>10}", "index", "mean", "sd", "lsq");
    let sd = post.std_devs();
    for (i, t) in idx.iter().enumerate().take(8) {
        println!("{:>12} {:>10.4} {:>10.4} {:>10.4}", format!("{t:?}"), post.mean[i], sd[i], ls[i]);
    }

    let xt = space.sample(&mut r, 5);
    let p = predictive(&post, &space, &idx, &xt)?;
    let psd = p.std_devs();
    println!("\nheld-out predictions (mean +- 2 sd)");
    for k in 0..xt.nrows() {
        let truth = response(&[xt[(k, 0)], xt[(k, 1)]]);
        println!("  truth {truth:8.4}   predicted {:8.4} +- {:.4}", p.mean[k], 2.0 * psd[k]);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
