//! Multi-output Bayesian polynomial chaos with an intrinsic
//! coregionalization covariance over a shared orthonormal basis.
//!
//! For outputs `i, j` at inputs `x, x'`:
//!
//! ```text
//! cov(y_i(x), y_j(x')) = v(x)' sqrt(S_i S_j) v(x') B_ij + s2 [i == j, training]
//! S_i = diag(a_i^2),  B = W W' + diag(kappa)
//! a_ij ~ N(0, 1),  W ~ N(0, I),  kappa ~ HalfNormal(1)
//! ```
//!
//! `S_i` is taken as the squared coefficient-scale column so it is positive
//! for any real `a_i`; `sqrt(S_i S_j) = diag(|a_i| |a_j|)`. The noise
//! variance is fixed. Predictions average the per-draw Gaussian conditionals
//! over posterior hyperparameter draws (iterated expectation and total
//! covariance).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::basis::{design_matrix, DesignMatrix, InputSpace, MultiIndexSet};
use crate::error::{dim_mismatch, Error, Result};
use crate::linalg::{jittered_cholesky, symmetrize};
use crate::linear_bayes::PredictiveDistribution;
use crate::sampler::{LogDensityModel, SampleBatch, Transform};

/// Hyperparameters `{A, W, kappa}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoregionalParams {
    /// `N x O`; column `i` holds the coefficient scales of output `i`.
    pub a: DMatrix<f64>,
    pub w: DVector<f64>,
    pub kappa: DVector<f64>,
}

impl CoregionalParams {
    pub fn n_outputs(&self) -> usize {
        self.w.len()
    }

    pub fn n_coefficients(&self) -> usize {
        self.a.nrows()
    }

    /// `W W' + diag(kappa)`.
    pub fn b(&self) -> DMatrix<f64> {
        let mut b = &self.w * self.w.transpose();
        for i in 0..self.kappa.len() {
            b[(i, i)] += self.kappa[i];
        }
        b
    }

    /// Flattened `[A (column-major), W, kappa]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.a.iter().copied().collect();
        v.extend(self.w.iter());
        v.extend(self.kappa.iter());
        v
    }

    pub fn from_slice(x: &[f64], n: usize, o: usize) -> Result<Self> {
        if x.len() != n * o + 2 * o {
            return Err(dim_mismatch(format!(
                "expected {} coregional parameters, got {}",
                n * o + 2 * o,
                x.len()
            )));
        }
        Ok(CoregionalParams {
            a: DMatrix::from_column_slice(n, o, &x[..n * o]),
            w: DVector::from_column_slice(&x[n * o..n * o + o]),
            kappa: DVector::from_column_slice(&x[n * o + o..]),
        })
    }

    pub fn validate(&self) -> Result<()> {
        let o = self.n_outputs();
        if self.a.ncols() != o || self.kappa.len() != o {
            return Err(dim_mismatch("A, W and kappa disagree on the number of outputs"));
        }
        if self.kappa.iter().any(|&k| !(k > 0.0)) {
            return Err(Error::InvalidArgument("kappa entries must be positive".into()));
        }
        Ok(())
    }
}

/// Basis, hyperparameters and the fixed noise variance.
#[derive(Debug, Clone)]
pub struct CoregionalModel {
    pub space: InputSpace,
    pub idx: MultiIndexSet,
    pub params: CoregionalParams,
    pub noise_variance: f64,
}

/// Per-output training data; sizes may differ between outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct StackedDataset {
    pub inputs: Vec<DMatrix<f64>>,
    pub outputs: Vec<DVector<f64>>,
}

impl StackedDataset {
    pub fn new(inputs: Vec<DMatrix<f64>>, outputs: Vec<DVector<f64>>) -> Result<Self> {
        if inputs.len() != outputs.len() || inputs.is_empty() {
            return Err(dim_mismatch("need one input matrix per output vector"));
        }
        let d = inputs[0].ncols();
        for (x, y) in inputs.iter().zip(&outputs) {
            if x.ncols() != d {
                return Err(dim_mismatch("all outputs must share the input dimension"));
            }
            if x.nrows() != y.len() {
                return Err(dim_mismatch("input rows and outputs differ"));
            }
        }
        Ok(StackedDataset { inputs, outputs })
    }

    pub fn n_outputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn total_points(&self) -> usize {
        self.outputs.iter().map(|y| y.len()).sum()
    }

    pub fn stacked_outputs(&self) -> DVector<f64> {
        let mut y = DVector::zeros(self.total_points());
        let mut off = 0;
        for yi in &self.outputs {
            y.rows_mut(off, yi.len()).copy_from(yi);
            off += yi.len();
        }
        y
    }
}

fn scaled_design(v: &DMatrix<f64>, scale: impl Iterator<Item = f64>) -> DMatrix<f64> {
    let mut out = v.clone();
    for (j, s) in scale.enumerate() {
        out.column_mut(j).scale_mut(s);
    }
    out
}

/// `V_i diag(|a_i| |a_j|) V_j' B_ij`.
fn kernel_block(vi: &DMatrix<f64>, vj: &DMatrix<f64>, params: &CoregionalParams, b: &DMatrix<f64>, i: usize, j: usize) -> DMatrix<f64> {
    let ai = params.a.column(i);
    let aj = params.a.column(j);
    let scaled = scaled_design(vi, ai.iter().zip(aj.iter()).map(|(x, y)| x.abs() * y.abs()));
    (scaled * vj.transpose()) * b[(i, j)]
}

/// Noise-free kernel over stacked points with per-output design matrices.
fn stacked_kernel(designs: &[DMatrix<f64>], other: &[DMatrix<f64>], params: &CoregionalParams) -> DMatrix<f64> {
    let b = params.b();
    let rows: usize = designs.iter().map(|v| v.nrows()).sum();
    let cols: usize = other.iter().map(|v| v.nrows()).sum();
    let mut k = DMatrix::zeros(rows, cols);
    let mut r = 0;
    for (i, vi) in designs.iter().enumerate() {
        let mut c = 0;
        for (j, vj) in other.iter().enumerate() {
            let block = kernel_block(vi, vj, params, &b, i, j);
            k.view_mut((r, c), (vi.nrows(), vj.nrows())).copy_from(&block);
            c += vj.nrows();
        }
        r += vi.nrows();
    }
    k
}

impl CoregionalModel {
    pub fn new(space: InputSpace, idx: MultiIndexSet, params: CoregionalParams, noise_variance: f64) -> Result<Self> {
        params.validate()?;
        if params.n_coefficients() != idx.len() {
            return Err(dim_mismatch(format!(
                "A has {} rows but the basis has {} terms",
                params.n_coefficients(),
                idx.len()
            )));
        }
        if !(noise_variance > 0.0) {
            return Err(Error::InvalidArgument("noise variance must be positive".into()));
        }
        Ok(CoregionalModel {
            space,
            idx,
            params,
            noise_variance,
        })
    }

    pub fn n_outputs(&self) -> usize {
        self.params.n_outputs()
    }

    fn design(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(design_matrix(&self.space, &self.idx, x, None)?.values)
    }

    fn designs(&self, xs: &[DMatrix<f64>]) -> Result<Vec<DMatrix<f64>>> {
        xs.iter().map(|x| self.design(x)).collect()
    }

    /// Covariance between output `i` at `xi` and output `j` at `xj`. With
    /// `training_noise`, the noise variance is added on the diagonal of a
    /// same-output block (which then must be square).
    pub fn cross_covariance(
        &self,
        i: usize,
        j: usize,
        xi: &DMatrix<f64>,
        xj: &DMatrix<f64>,
        training_noise: bool,
    ) -> Result<DMatrix<f64>> {
        let o = self.n_outputs();
        if i >= o || j >= o {
            return Err(Error::InvalidArgument(format!("output index out of range (O = {o})")));
        }
        let vi = self.design(xi)?;
        let vj = self.design(xj)?;
        let mut k = kernel_block(&vi, &vj, &self.params, &self.params.b(), i, j);
        if training_noise && i == j {
            if xi.nrows() != xj.nrows() {
                return Err(dim_mismatch("noise applies only to a square training block"));
            }
            for r in 0..k.nrows() {
                k[(r, r)] += self.noise_variance;
            }
        }
        Ok(k)
    }

    /// Noise-free `K(X, X)` over the stacked training inputs.
    pub fn block_covariance(&self, data: &StackedDataset) -> Result<DMatrix<f64>> {
        if data.n_outputs() != self.n_outputs() {
            return Err(dim_mismatch("dataset and model disagree on the number of outputs"));
        }
        let v = self.designs(&data.inputs)?;
        let mut k = stacked_kernel(&v, &v, &self.params);
        symmetrize(&mut k);
        let mut check = k.clone();
        for i in 0..check.nrows() {
            check[(i, i)] += self.noise_variance;
        }
        jittered_cholesky(&check, "coregional covariance")?;
        Ok(k)
    }

    /// Gaussian conditional at `x_star` (one matrix per output) given the
    /// training data, for the current hyperparameters. Returns the joint
    /// distribution over the stacked test points.
    pub fn conditional(&self, data: &StackedDataset, x_star: &[DMatrix<f64>]) -> Result<PredictiveDistribution> {
        let v = self.designs(&data.inputs)?;
        let vs = self.designs(x_star)?;
        conditional_from_designs(&v, &vs, &data.stacked_outputs(), &self.params, self.noise_variance)
    }
}

fn conditional_from_designs(
    v: &[DMatrix<f64>],
    vs: &[DMatrix<f64>],
    y: &DVector<f64>,
    params: &CoregionalParams,
    noise_variance: f64,
) -> Result<PredictiveDistribution> {
    let q: usize = vs.iter().map(|m| m.nrows()).sum();
    if q == 0 {
        return Ok(PredictiveDistribution {
            mean: DVector::zeros(0),
            covariance: DMatrix::zeros(0, 0),
        });
    }
    let mut k11 = stacked_kernel(v, v, params);
    for i in 0..k11.nrows() {
        k11[(i, i)] += noise_variance;
    }
    symmetrize(&mut k11);
    let factor = jittered_cholesky(&k11, "coregional training covariance")
        .map_err(|e| Error::Singular(e.to_string()))?;
    let k21 = stacked_kernel(vs, v, params);
    let mut k22 = stacked_kernel(vs, vs, params);
    let mean = &k21 * factor.solve_vec(y);
    let l = factor.chol.l();
    let half = l
        .solve_lower_triangular(&k21.transpose())
        .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
    k22 -= half.transpose() * half;
    symmetrize(&mut k22);
    Ok(PredictiveDistribution { mean, covariance: k22 })
}

/// Log prior `N(0,1)` on `A` and `W`, HalfNormal(1) on `kappa` (up to
/// constants) plus the Gaussian marginal likelihood of the stacked data,
/// with analytic gradient in the layout of [`CoregionalParams::to_vec`].
pub fn coregional_logdensity(
    params: &CoregionalParams,
    designs: &[DMatrix<f64>],
    y: &DVector<f64>,
    noise_variance: f64,
) -> Result<(f64, Vec<f64>)> {
    params.validate()?;
    let o = params.n_outputs();
    let n = params.n_coefficients();
    if designs.len() != o {
        return Err(dim_mismatch("one design matrix per output required"));
    }
    let sizes: Vec<usize> = designs.iter().map(|v| v.nrows()).collect();
    let offsets: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &s| {
            let o = *acc;
            *acc += s;
            Some(o)
        })
        .collect();
    let total: usize = sizes.iter().sum();
    if y.len() != total {
        return Err(dim_mismatch("stacked outputs and designs differ in length"));
    }

    let b = params.b();
    let mut c = DMatrix::zeros(total, total);
    for i in 0..o {
        for j in i..o {
            let block = kernel_block(&designs[i], &designs[j], params, &b, i, j);
            c.view_mut((offsets[i], offsets[j]), (sizes[i], sizes[j])).copy_from(&block);
            if i != j {
                c.view_mut((offsets[j], offsets[i]), (sizes[j], sizes[i]))
                    .copy_from(&block.transpose());
            }
        }
    }
    for i in 0..total {
        c[(i, i)] += noise_variance;
    }
    let factor = jittered_cholesky(&c, "coregional training covariance")?;
    let beta = factor.solve_vec(y);
    let mut lp = -0.5 * y.dot(&beta) - 0.5 * factor.log_det() - 0.5 * total as f64 * (2.0 * std::f64::consts::PI).ln();

    // H_ij[k] = v_ik' (beta beta' - C^-1)_ij v_jk.
    // The C^-1 part uses Z_j = L^-1 [0; V_j; 0]; the leading zero rows of the
    // right-hand side stay zero, so each solve starts at the block offset.
    let l = factor.chol.l();
    let mut z: Vec<DMatrix<f64>> = Vec::with_capacity(o);
    for j in 0..o {
        let off = offsets[j];
        let mut rhs = DMatrix::zeros(total - off, n);
        rhs.view_mut((0, 0), (sizes[j], n)).copy_from(&designs[j]);
        let sub = l.view((off, off), (total - off, total - off)).into_owned();
        let zj = sub
            .solve_lower_triangular(&rhs)
            .ok_or_else(|| Error::Singular("triangular solve failed".into()))?;
        z.push(zj);
    }
    let proj: Vec<DVector<f64>> = (0..o)
        .map(|i| designs[i].transpose() * y_block(&beta, offsets[i], sizes[i]))
        .collect();
    let mut h = vec![vec![DVector::<f64>::zeros(n); o]; o];
    for i in 0..o {
        for j in i..o {
            // rows of Z_i and Z_j overlap from max(off_i, off_j)
            let start = offsets[i].max(offsets[j]);
            let zi = z[i].rows(start - offsets[i], total - start);
            let zj = z[j].rows(start - offsets[j], total - start);
            let mut hij = DVector::zeros(n);
            for k in 0..n {
                hij[k] = proj[i][k] * proj[j][k] - zi.column(k).dot(&zj.column(k));
            }
            h[j][i] = hij.clone();
            h[i][j] = hij;
        }
    }

    let mut grad = vec![0.0; n * o + 2 * o];
    let mut s = DMatrix::zeros(o, o);
    for i in 0..o {
        for j in 0..o {
            let mut sij = 0.0;
            for k in 0..n {
                let ai = params.a[(k, i)];
                let aj = params.a[(k, j)];
                sij += ai.abs() * aj.abs() * h[i][j][k];
                grad[i * n + k] += ai.signum() * h[i][j][k] * b[(i, j)] * aj.abs();
            }
            s[(i, j)] = sij;
        }
    }
    let gw = &s * &params.w;
    for i in 0..o {
        grad[n * o + i] = gw[i];
        grad[n * o + o + i] = 0.5 * s[(i, i)];
    }

    // priors
    for (k, &a) in params.a.iter().enumerate() {
        lp -= 0.5 * a * a;
        grad[k] -= a;
    }
    for i in 0..o {
        lp -= 0.5 * params.w[i] * params.w[i] + 0.5 * params.kappa[i] * params.kappa[i];
        grad[n * o + i] -= params.w[i];
        grad[n * o + o + i] -= params.kappa[i];
    }
    Ok((lp, grad))
}

fn y_block(y: &DVector<f64>, off: usize, len: usize) -> DVector<f64> {
    y.rows(off, len).into_owned()
}

/// Hyperparameter posterior for HMC. The likelihood depends on `A` only
/// through `|A|`, so the sampler works with the magnitudes (log scale,
/// HalfNormal(1) prior, equivalent to `N(0,1)` on the signed entries);
/// this removes the sign symmetry that would otherwise leave `2^(NO)`
/// equivalent modes. `B` is likewise unchanged by `W -> -W`, so `w[0]` is
/// kept positive.
pub struct CoregionalPosterior {
    designs: Vec<DMatrix<f64>>,
    y: DVector<f64>,
    n: usize,
    o: usize,
    noise_variance: f64,
}

impl CoregionalPosterior {
    pub fn new(space: &InputSpace, idx: &MultiIndexSet, data: &StackedDataset, noise_variance: f64) -> Result<Self> {
        if !(noise_variance > 0.0) {
            return Err(Error::InvalidArgument("noise variance must be positive".into()));
        }
        let designs = data
            .inputs
            .iter()
            .map(|x| design_matrix(space, idx, x, None).map(|d| d.values))
            .collect::<Result<Vec<_>>>()?;
        Ok(CoregionalPosterior {
            designs,
            y: data.stacked_outputs(),
            n: idx.len(),
            o: data.n_outputs(),
            noise_variance,
        })
    }

    pub fn designs(&self) -> &[DMatrix<f64>] {
        &self.designs
    }

    pub fn params_of(&self, draw: &[f64]) -> Result<CoregionalParams> {
        CoregionalParams::from_slice(draw, self.n, self.o)
    }
}

impl LogDensityModel for CoregionalPosterior {
    fn dim(&self) -> usize {
        self.n * self.o + 2 * self.o
    }

    fn transforms(&self) -> Vec<Transform> {
        let mut t = vec![Transform::Log; self.n * self.o];
        t.push(Transform::Log);
        t.extend(std::iter::repeat_n(Transform::Identity, self.o - 1));
        t.extend(std::iter::repeat_n(Transform::Log, self.o));
        t
    }

    fn parameter_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim());
        for i in 0..self.o {
            for k in 0..self.n {
                names.push(format!("abs_a[{k},{i}]"));
            }
        }
        for i in 0..self.o {
            names.push(format!("w[{i}]"));
        }
        for i in 0..self.o {
            names.push(format!("kappa[{i}]"));
        }
        names
    }

    fn log_density(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        let params = self.params_of(x)?;
        let (lp, g) = coregional_logdensity(&params, &self.designs, &self.y, self.noise_variance)?;
        grad.copy_from_slice(&g);
        Ok(lp)
    }
}

/// Which hyperparameter draws feed the predictive mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictOptions {
    /// Use the last `window` pooled draws...
    pub window: usize,
    /// ...thinned so that at least this many remain.
    pub min_draws: usize,
}

impl Default for PredictOptions {
    fn default() -> Self {
        PredictOptions {
            window: 500,
            min_draws: 100,
        }
    }
}

/// Minimum hyperparameter draws for a predictive mixture.
pub const MIN_PREDICT_DRAWS: usize = 100;

/// Draw indices used by [`predict`].
pub fn select_draws(total: usize, opts: PredictOptions) -> Result<Vec<usize>> {
    if total < MIN_PREDICT_DRAWS || opts.min_draws < MIN_PREDICT_DRAWS {
        return Err(Error::InvalidArgument(format!(
            "prediction needs at least {MIN_PREDICT_DRAWS} hyperparameter draws, have {total}"
        )));
    }
    let window = opts.window.max(opts.min_draws).min(total);
    let stride = (window / opts.min_draws).max(1);
    Ok((total - window..total).step_by(stride).collect())
}

/// Mixture moments of Gaussian components: mean of means, and mean of
/// covariances plus covariance of means.
pub fn mixture_moments(components: &[PredictiveDistribution]) -> Result<PredictiveDistribution> {
    let Some(first) = components.first() else {
        return Err(Error::InvalidArgument("empty mixture".into()));
    };
    let q = first.len();
    let s = components.len() as f64;
    let mut mean = DVector::zeros(q);
    let mut cov = DMatrix::zeros(q, q);
    for c in components {
        if c.len() != q {
            return Err(dim_mismatch("mixture components differ in size"));
        }
        mean += &c.mean;
        cov += &c.covariance;
    }
    mean /= s;
    cov /= s;
    for c in components {
        let d = &c.mean - &mean;
        cov += (&d * d.transpose()) / s;
    }
    symmetrize(&mut cov);
    Ok(PredictiveDistribution { mean, covariance: cov })
}

/// Per-output predictive distributions at `x_star`, averaging the Gaussian
/// conditionals of the selected hyperparameter draws.
pub fn predict(
    space: &InputSpace,
    idx: &MultiIndexSet,
    samples: &SampleBatch,
    data: &StackedDataset,
    x_star: &[DMatrix<f64>],
    noise_variance: f64,
    opts: PredictOptions,
) -> Result<Vec<PredictiveDistribution>> {
    let o = data.n_outputs();
    if x_star.len() != o {
        return Err(dim_mismatch("one test input matrix per output required"));
    }
    let n = idx.len();
    let all: Vec<&[f64]> = samples.iter_draws().collect();
    let chosen = select_draws(all.len(), opts)?;
    let v: Vec<DMatrix<f64>> = data
        .inputs
        .iter()
        .map(|x| design_matrix(space, idx, x, None).map(|d| d.values))
        .collect::<Result<_>>()?;
    let vs: Vec<DMatrix<f64>> = x_star
        .iter()
        .map(|x| design_matrix(space, idx, x, None).map(|d| d.values))
        .collect::<Result<_>>()?;
    let y = data.stacked_outputs();
    let components = chosen
        .iter()
        .map(|&k| {
            let params = CoregionalParams::from_slice(all[k], n, o)?;
            conditional_from_designs(&v, &vs, &y, &params, noise_variance)
        })
        .collect::<Result<Vec<_>>>()?;
    let joint = mixture_moments(&components)?;
    let mut out = Vec::with_capacity(o);
    let mut off = 0;
    for x in x_star {
        let q = x.nrows();
        out.push(PredictiveDistribution {
            mean: joint.mean.rows(off, q).into_owned(),
            covariance: joint.covariance.view((off, off), (q, q)).into_owned(),
        });
        off += q;
    }
    Ok(out)
}

/// Posterior mean and standard deviation of `B` over all draws.
pub fn b_summary(samples: &SampleBatch, n: usize, o: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let mut mean = DMatrix::zeros(o, o);
    let mut sq = DMatrix::zeros(o, o);
    let mut count = 0.0;
    for d in samples.iter_draws() {
        let b = CoregionalParams::from_slice(d, n, o)?.b();
        sq += b.component_mul(&b);
        mean += b;
        count += 1.0;
    }
    mean /= count;
    sq /= count;
    let sd = (sq - mean.component_mul(&mean)).map(|v| v.max(0.0).sqrt());
    Ok((mean, sd))
}

/// Design-matrix view for a single output, e.g. for independent baselines.
pub fn output_design(space: &InputSpace, idx: &MultiIndexSet, x: &DMatrix<f64>) -> Result<DesignMatrix> {
    design_matrix(space, idx, x, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_round_trip_and_b() {
        let p = CoregionalParams {
            a: DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]),
            w: DVector::from_vec(vec![0.5, -1.0]),
            kappa: DVector::from_vec(vec![0.1, 0.2]),
        };
        let q = CoregionalParams::from_slice(&p.to_vec(), 2, 2).unwrap();
        assert_eq!(p, q);
        let b = p.b();
        assert!((b[(0, 1)] + 0.5).abs() < 1e-15 && (b[(1, 1)] - 1.2).abs() < 1e-15);
    }

    #[test]
    fn mixture_of_two_gaussians() {
        let c1 = PredictiveDistribution {
            mean: DVector::from_vec(vec![0.0]),
            covariance: DMatrix::from_element(1, 1, 1.0),
        };
        let c2 = PredictiveDistribution {
            mean: DVector::from_vec(vec![2.0]),
            covariance: DMatrix::from_element(1, 1, 3.0),
        };
        let m = mixture_moments(&[c1, c2]).unwrap();
        // mean 1, var = (1 + 3)/2 + ((0-1)^2 + (2-1)^2)/2 = 3
        assert!((m.mean[0] - 1.0).abs() < 1e-15);
        assert!((m.covariance[(0, 0)] - 3.0).abs() < 1e-15);
    }

    #[test]
    fn too_few_draws_rejected() {
        assert!(select_draws(50, PredictOptions::default()).is_err());
        let d = select_draws(2000, PredictOptions::default()).unwrap();
        assert_eq!(d.len(), 100);
        assert_eq!(*d.last().unwrap(), 1995);
    }
}
