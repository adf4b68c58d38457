use nalgebra::{DMatrix, SymmetricEigen};

use super::distribution::{InputDistribution, InputSpace};
use crate::error::{Error, Result};

/// Gauss rule for a single marginal, normalized to unit mass.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// `n_points`-point Gauss rule exact for polynomials of degree `2n - 1`
/// against the density of `dist`.
///
/// Nodes are the eigenvalues of the Jacobi matrix (Golub-Welsch). Weights use
/// the Christoffel form `w_i = 1 / sum_k p_k(t_i)^2`, which is more accurate
/// than squaring eigenvector components.
pub fn gauss_quadrature(dist: &InputDistribution, n_points: usize) -> Result<QuadratureRule> {
    if n_points == 0 {
        return Err(Error::InvalidArgument(
            "quadrature needs at least one point".into(),
        ));
    }
    let basis = dist.basis(n_points);
    let (a, b) = basis.recurrence();
    let mut jacobi = DMatrix::zeros(n_points, n_points);
    for i in 0..n_points {
        jacobi[(i, i)] = a[i];
        if i + 1 < n_points {
            jacobi[(i, i + 1)] = b[i + 1];
            jacobi[(i + 1, i)] = b[i + 1];
        }
    }
    let mut t: Vec<f64> = SymmetricEigen::new(jacobi).eigenvalues.iter().copied().collect();
    t.sort_by(|x, y| x.total_cmp(y));

    let mut p = vec![0.0; n_points];
    let mut weights: Vec<f64> = t
        .iter()
        .map(|&ti| {
            basis.eval_all_into(ti, &mut p);
            1.0 / p.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);

    let nodes = t.into_iter().map(|ti| dist.from_reference(ti)).collect();
    Ok(QuadratureRule { nodes, weights })
}

/// Full tensor product of per-dimension Gauss rules: nodes as rows.
pub fn tensor_quadrature(space: &InputSpace, n_points: usize) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let rules = space
        .marginals()
        .iter()
        .map(|d| gauss_quadrature(d, n_points))
        .collect::<Result<Vec<_>>>()?;
    let d = space.dim();
    let total = n_points
        .checked_pow(d as u32)
        .ok_or_else(|| Error::InvalidArgument("tensor rule too large".into()))?;
    let mut nodes = DMatrix::zeros(total, d);
    let mut weights = vec![1.0; total];
    for row in 0..total {
        let mut rem = row;
        for k in (0..d).rev() {
            let i = rem % n_points;
            rem /= n_points;
            nodes[(row, k)] = rules[k].nodes[i];
            weights[row] *= rules[k].weights[i];
        }
    }
    Ok((nodes, weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_and_two_point() {
        let u = InputDistribution::canonical_uniform();
        let r1 = gauss_quadrature(&u, 1).unwrap();
        assert!(r1.nodes[0].abs() < 1e-15);
        assert!((r1.weights[0] - 1.0).abs() < 1e-15);

        let r2 = gauss_quadrature(&u, 2).unwrap();
        let s = 1.0 / 3f64.sqrt();
        assert!((r2.nodes[0] + s).abs() < 1e-14 && (r2.nodes[1] - s).abs() < 1e-14);
        assert!(r2.weights.iter().all(|w| (w - 0.5).abs() < 1e-14));
    }

    #[test]
    fn zero_points_rejected() {
        assert!(gauss_quadrature(&InputDistribution::StandardGaussian, 0).is_err());
    }

    #[test]
    fn gaussian_moments() {
        let r = gauss_quadrature(&InputDistribution::StandardGaussian, 5).unwrap();
        assert!((r.integrate(|x| x * x) - 1.0).abs() < 1e-13);
        assert!((r.integrate(|x| x.powi(4)) - 3.0).abs() < 1e-12);
        assert!((r.integrate(|x| x.powi(8)) - 105.0).abs() < 1e-9);
    }

    #[test]
    fn shifted_uniform_mass() {
        let u = InputDistribution::uniform(2.0, 5.0).unwrap();
        let r = gauss_quadrature(&u, 4).unwrap();
        // E[x] = 3.5, E[x^2] = (125 - 8) / 9 = 13
        assert!((r.integrate(|x| x) - 3.5).abs() < 1e-13);
        assert!((r.integrate(|x| x * x) - 13.0).abs() < 1e-12);
    }
}
