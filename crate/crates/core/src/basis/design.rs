use nalgebra::{DMatrix, DVector};

use super::distribution::InputSpace;
use super::index_set::MultiIndexSet;
use crate::error::{dim_mismatch, Error, Result};

/// Support excursions up to this size are treated as rounding noise.
pub const SUPPORT_TOLERANCE: f64 = 1e-9;

/// Weighted Vandermonde-type matrix, `values[(i, j)] = w_i * phi_j(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub values: DMatrix<f64>,
    pub weights: DVector<f64>,
}

impl DesignMatrix {
    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    /// Wraps an existing matrix with unit weights.
    pub fn from_values(values: DMatrix<f64>) -> Self {
        let weights = DVector::from_element(values.nrows(), 1.0);
        DesignMatrix { values, weights }
    }

    /// Applies the row weights to an output vector.
    pub fn weight_outputs(&self, y: &DVector<f64>) -> DVector<f64> {
        y.component_mul(&self.weights)
    }
}

/// Evaluates every basis function of `idx` at every row of `x`.
pub fn design_matrix(
    space: &InputSpace,
    idx: &MultiIndexSet,
    x: &DMatrix<f64>,
    weights: Option<&[f64]>,
) -> Result<DesignMatrix> {
    let d = space.dim();
    if x.ncols() != d {
        return Err(dim_mismatch(format!(
            "inputs have {} columns but the input space has {d} dimensions",
            x.ncols()
        )));
    }
    if idx.dim() != d {
        return Err(dim_mismatch(format!(
            "index set has dimension {} but the input space has {d}",
            idx.dim()
        )));
    }
    let m = x.nrows();
    let weights = match weights {
        Some(w) if w.len() != m => {
            return Err(dim_mismatch(format!(
                "{} weights supplied for {m} points",
                w.len()
            )))
        }
        Some(w) => DVector::from_column_slice(w),
        None => DVector::from_element(m, 1.0),
    };
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("non-finite input coordinate".into()));
    }

    let pmax = idx.max_component();
    let bases: Vec<_> = space.marginals().iter().map(|m| m.basis(pmax)).collect();
    let n = idx.len();
    let mut values = DMatrix::zeros(m, n);
    // uni[k * (pmax + 1) + deg] = phi_deg(x_ik)
    let mut uni = vec![0.0; d * (pmax + 1)];
    let mut worst = 0.0f64;
    for i in 0..m {
        for (k, dist) in space.marginals().iter().enumerate() {
            let xv = x[(i, k)];
            worst = worst.max(dist.excursion(xv));
            let t = dist.to_reference(xv);
            bases[k].eval_all_into(t, &mut uni[k * (pmax + 1)..(k + 1) * (pmax + 1)]);
        }
        for (j, tuple) in idx.iter().enumerate() {
            let mut v = weights[i];
            for (k, &deg) in tuple.iter().enumerate() {
                v *= uni[k * (pmax + 1) + deg];
            }
            values[(i, j)] = v;
        }
    }
    if worst > 0.0 {
        if worst <= SUPPORT_TOLERANCE {
            log::debug!("inputs exceed the support by {worst:e} (rounding)");
        } else {
            log::warn!("inputs lie outside the distribution support by up to {worst:e}");
        }
    }
    Ok(DesignMatrix { values, weights })
}

/// Row vector `v(x)` of basis evaluations at one point.
pub fn basis_vector(space: &InputSpace, idx: &MultiIndexSet, x: &[f64]) -> Result<DVector<f64>> {
    let xm = DMatrix::from_row_slice(1, x.len(), x);
    let v = design_matrix(space, idx, &xm, None)?;
    Ok(v.values.row(0).transpose())
}
