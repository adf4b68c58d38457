//! Synthetic datasets with known ground truth.
//!
//! The turbine heat-flux stand-in mimics the shape of the three-input,
//! 21-point experimental protocol (Mach number, Reynolds number and
//! turbulence intensity) but is generated data, not measurements.

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};

use super::data::{Bounds, Dataset};
use crate::basis::{design_matrix, IndexScheme, InputSpace, MultiIndexSet};
use crate::coregional::StackedDataset;
use crate::error::Result;
use crate::rng;

/// Physical ranges of the stand-in inputs.
pub const TURBINE_BOUNDS: [Bounds; 3] = [
    Bounds { lower: 0.7, upper: 1.1 },
    Bounds { lower: 5e5, upper: 2e6 },
    Bounds { lower: 1.0, upper: 6.0 },
];

/// Noise variance of the stand-in measurements.
pub const TURBINE_NOISE_VARIANCE: f64 = 3.0;

/// Rows in the stand-in table.
pub const TURBINE_ROWS: usize = 21;

const TURBINE_COLUMNS: [&str; 4] = ["mach", "reynolds", "turbulence_intensity", "heat_flux_synthetic"];

/// Smooth cubic response in reference coordinates `t in [-1, 1]^3`.
pub fn turbine_response(t: &[f64]) -> f64 {
    let (a, b, c) = (t[0], t[1], t[2]);
    400.0 + 30.0 * a + 25.0 * b + 10.0 * c + 8.0 * a * a - 6.0 * a * b + 5.0 * b * c - 4.0 * c * c
        + 3.0 * a * a * a
}

/// Lower-fidelity model of the same response: scaled, offset and with a
/// missing interaction, as a cheap simulation might be.
pub fn turbine_low_fidelity(t: &[f64]) -> f64 {
    0.9 * turbine_response(t) + 25.0 - 4.5 * t[1] * t[2] + 2.0 * t[0] * t[2]
}

fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn evaluate<F: Fn(&[f64]) -> f64>(x: &DMatrix<f64>, f: F) -> DVector<f64> {
    DVector::from_iterator(
        x.nrows(),
        (0..x.nrows()).map(|r| {
            let row: Vec<f64> = x.row(r).iter().copied().collect();
            f(&row)
        }),
    )
}

fn add_noise(y: &mut DVector<f64>, sd: f64, seed: u64, stream: u64) {
    let mut r = rng::stream(seed, stream);
    let n = Normal::new(0.0, sd).expect("finite sd");
    for v in y.iter_mut() {
        *v += n.sample(&mut r);
    }
}

/// 21 noisy evaluations of [`turbine_response`] at uniform random inputs.
pub fn turbine_stand_in(seed: u64) -> Result<Dataset> {
    let space = InputSpace::canonical_uniform(3)?;
    let x = space.sample(&mut rng::stream(seed, 0), TURBINE_ROWS);
    let mut y = evaluate(&x, turbine_response);
    add_noise(&mut y, TURBINE_NOISE_VARIANCE.sqrt(), seed, 1);
    Dataset::new(x, y, columns(&TURBINE_COLUMNS))
}

/// Low-fidelity data on the 4x4x4 Gauss-Lobatto tensor grid and the
/// high-fidelity stand-in table.
pub fn fidelity_pair(seed: u64) -> Result<(Dataset, Dataset)> {
    let nodes = [-1.0, -1.0 / 5f64.sqrt(), 1.0 / 5f64.sqrt(), 1.0];
    let mut x = DMatrix::zeros(64, 3);
    for (r, (i, j, k)) in (0..4)
        .flat_map(|i| (0..4).flat_map(move |j| (0..4).map(move |k| (i, j, k))))
        .enumerate()
    {
        x[(r, 0)] = nodes[i];
        x[(r, 1)] = nodes[j];
        x[(r, 2)] = nodes[k];
    }
    let y = evaluate(&x, turbine_low_fidelity);
    let low = Dataset::new(x, y, columns(&TURBINE_COLUMNS))?;
    Ok((low, turbine_stand_in(seed)?))
}

/// Noise standard deviation of the sparse instance.
pub const SPARSE_NOISE_SD: f64 = 0.1;

/// A two-term truth in a five-input quadratic total-order basis.
#[derive(Debug, Clone)]
pub struct SparseInstance {
    pub space: InputSpace,
    pub idx: MultiIndexSet,
    pub truth: DVector<f64>,
    /// Noisy training data.
    pub train: Dataset,
    /// Noise-free test data.
    pub test: Dataset,
}

impl SparseInstance {
    /// Positions of the nonzero truth coefficients.
    pub fn support(&self) -> Vec<usize> {
        (0..self.truth.len()).filter(|&i| self.truth[i] != 0.0).collect()
    }
}

/// `g = 3 phi_1 + 1.5 phi_6` (zero-based positions in graded order).
pub fn sparse_instance(seed: u64, m_train: usize, m_test: usize) -> Result<SparseInstance> {
    let space = InputSpace::canonical_uniform(5)?;
    let idx = MultiIndexSet::build(IndexScheme::TotalOrder, 5, 2)?;
    let mut truth = DVector::zeros(idx.len());
    truth[1] = 3.0;
    truth[6] = 1.5;
    let make = |stream: u64, m: usize| -> Result<(DMatrix<f64>, DVector<f64>)> {
        let x = space.sample(&mut rng::stream(seed, stream), m);
        let y = design_matrix(&space, &idx, &x, None)?.values * &truth;
        Ok((x, y))
    };
    let (xt, mut yt) = make(0, m_train)?;
    add_noise(&mut yt, SPARSE_NOISE_SD, seed, 1);
    let (xs, ys) = make(2, m_test)?;
    Ok(SparseInstance {
        train: Dataset::unnamed(xt, yt)?,
        test: Dataset::unnamed(xs, ys)?,
        space,
        idx,
        truth,
    })
}

/// Noise variance used with the analytic two-output pair.
pub const COREGIONAL_NOISE_VARIANCE: f64 = 1e-6;

/// The two correlated analytic outputs on `[-1, 1]^7`.
pub fn coregional_response(output: usize, x: &[f64]) -> f64 {
    let s = x.iter().sum::<f64>() / 7f64.sqrt();
    match output {
        0 => s.sin(),
        _ => 0.9 * (s + 0.5).sin(),
    }
}

/// Training and test sets for both outputs, each output at its own
/// uniformly drawn inputs. Outputs are noise-free.
pub fn coregional_pair(seed: u64, m_train: usize, m_test: usize) -> Result<(StackedDataset, StackedDataset)> {
    let space = InputSpace::canonical_uniform(7)?;
    let mut sets = Vec::new();
    for (k, m) in [m_train, m_test].into_iter().enumerate() {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for o in 0..2 {
            let x = space.sample(&mut rng::stream(seed, (2 * k + o) as u64), m);
            ys.push(evaluate(&x, |r| coregional_response(o, r)));
            xs.push(x);
        }
        sets.push(StackedDataset::new(xs, ys)?);
    }
    let test = sets.pop().expect("two sets");
    let train = sets.pop().expect("two sets");
    Ok((train, test))
}
