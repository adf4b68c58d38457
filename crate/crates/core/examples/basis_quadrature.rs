//! Index sets, Gauss rules and the orthonormality of the basis.
//!
//! Run with `cargo run --example basis_quadrature`.

use bayes_pc::basis::{gauss_quadrature, IndexScheme, InputDistribution, MultiIndexSet};

pub fn run() -> Result<(), Box<dyn std::error::Error>> {
    for (scheme, d, p) in [
        (IndexScheme::TotalOrder, 3, 3),
        (IndexScheme::TotalOrder, 7, 3),
        (IndexScheme::TotalOrder, 25, 2),
        (IndexScheme::TensorGrid, 3, 3),
        (IndexScheme::HyperbolicCross, 3, 3),
    ] {
        let set = MultiIndexSet::build(scheme, d, p)?;
        println!("{scheme:?}(d={d}, p={p}): {} terms", set.len());
    }

    let set = MultiIndexSet::build(IndexScheme::TotalOrder, 2, 2)?;
    println!("first terms of TotalOrder(2, 2): {:?}", set.indices());

    // Gram matrix of the first 11 polynomials under an 11-point rule
    let max_deg = 10;
    for dist in [InputDistribution::canonical_uniform(), InputDistribution::StandardGaussian] {
        let basis = dist.basis(max_deg);
        let rule = gauss_quadrature(&dist, max_deg + 1)?;
        let mut vals = vec![0.0; max_deg + 1];
        let mut worst: f64 = 0.0;
        let mut gram = vec![vec![0.0; max_deg + 1]; max_deg + 1];
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            basis.eval_all_into(*x, &mut vals);
            for i in 0..=max_deg {
                for j in 0..=max_deg {
                    gram[i][j] += w * vals[i] * vals[j];
                }
            }
        }
        for (i, row) in gram.iter().enumerate() {
            for (j, g) in row.iter().enumerate() {
                worst = worst.max((g - if i == j { 1.0 } else { 0.0 }).abs());
            }
        }
        println!("{:?}: max |G - I| = {worst:.2e}", dist.family());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run()
}
