use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolyFamily {
    /// Orthonormal under the uniform density on [-1, 1].
    Legendre,
    /// Orthonormal under the standard normal density (probabilists' Hermite).
    Hermite,
}

/// Orthonormal polynomials `p_0, ..., p_max` defined by the symmetric
/// three-term recurrence
///
/// `x p_n(x) = b_{n+1} p_{n+1}(x) + a_n p_n(x) + b_n p_{n-1}(x)`
///
/// with `p_0 = 1`. The coefficients are the entries of the Jacobi matrix of
/// the weight, which is also what [`gauss_quadrature`](super::gauss_quadrature)
/// diagonalizes.
#[derive(Debug, Clone, PartialEq)]
pub struct UnivariateBasis {
    family: PolyFamily,
    /// `a_0..=a_max`
    a: Vec<f64>,
    /// `b_0..=b_{max+1}`; `b_0` is unused and kept at zero.
    b: Vec<f64>,
}

impl UnivariateBasis {
    pub fn new(family: PolyFamily, max_degree: usize) -> Self {
        let a = vec![0.0; max_degree + 1];
        let b = (0..=max_degree + 1)
            .map(|n| {
                if n == 0 {
                    return 0.0;
                }
                let n = n as f64;
                match family {
                    PolyFamily::Legendre => n / (4.0 * n * n - 1.0).sqrt(),
                    PolyFamily::Hermite => n.sqrt(),
                }
            })
            .collect();
        UnivariateBasis { family, a, b }
    }

    pub fn family(&self) -> PolyFamily {
        self.family
    }

    pub fn max_degree(&self) -> usize {
        self.a.len() - 1
    }

    pub(crate) fn recurrence(&self) -> (&[f64], &[f64]) {
        (&self.a, &self.b)
    }

    /// Value of the orthonormal polynomial of the given degree at `x`
    /// (reference variable).
    pub fn eval(&self, degree: usize, x: f64) -> Result<f64> {
        if degree > self.max_degree() {
            return Err(Error::InvalidArgument(format!(
                "degree {degree} exceeds stored recurrence (max {})",
                self.max_degree()
            )));
        }
        let mut out = vec![0.0; degree + 1];
        self.eval_all_into(x, &mut out);
        Ok(out[degree])
    }

    /// Fills `out[k] = p_k(x)` for `k < out.len()`.
    pub fn eval_all_into(&self, x: f64, out: &mut [f64]) {
        let n = out.len();
        assert!(n <= self.max_degree() + 1, "requested degree beyond recurrence");
        if n == 0 {
            return;
        }
        out[0] = 1.0;
        if n == 1 {
            return;
        }
        out[1] = (x - self.a[0]) / self.b[1];
        for k in 1..n - 1 {
            out[k + 1] = ((x - self.a[k]) * out[k] - self.b[k] * out[k - 1]) / self.b[k + 1];
        }
    }
}
