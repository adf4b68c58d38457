//! Rank-normalized split R-hat and effective sample size.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamDiagnostics {
    /// Max of the rank-normalized bulk and tail split R-hat and the classic
    /// split R-hat; NaN when undefined.
    pub r_hat: f64,
    pub ess_bulk: f64,
    pub ess_tail: f64,
    /// Set when every chain is constant and R-hat is undefined.
    pub degenerate: bool,
}

/// Diagnostics for one parameter given its per-chain draws.
pub fn param_diagnostics(chains: &[Vec<f64>]) -> Result<ParamDiagnostics> {
    if chains.len() < 2 {
        return Err(Error::InvalidArgument(
            "convergence diagnostics need at least two chains".into(),
        ));
    }
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    if n < 4 {
        return Err(Error::InvalidArgument("too few draws for diagnostics".into()));
    }
    let chains: Vec<&[f64]> = chains.iter().map(|c| &c[..n]).collect();
    let degenerate = chains.iter().all(|c| c.iter().all(|&v| v == c[0]));
    if degenerate {
        return Ok(ParamDiagnostics {
            r_hat: f64::NAN,
            ess_bulk: f64::NAN,
            ess_tail: f64::NAN,
            degenerate: true,
        });
    }

    let split = split_chains(&chains);
    let z = rank_normalize(&split);
    let median = {
        let mut all: Vec<f64> = split.iter().flatten().copied().collect();
        all.sort_by(|a, b| a.total_cmp(b));
        all[all.len() / 2]
    };
    let folded: Vec<Vec<f64>> = split
        .iter()
        .map(|c| c.iter().map(|v| (v - median).abs()).collect())
        .collect();
    let zf = rank_normalize(&folded);
    // Rank normalization saturates for chains that do not overlap at all
    // (about 1.8 for two separated chains), so the classic split R-hat of
    // the raw draws is included to keep gross disagreement visible.
    let r_hat = basic_rhat(&z).max(basic_rhat(&zf)).max(basic_rhat(&split));

    let ess_bulk = ess(&z);
    let ess_tail = {
        let mut all: Vec<f64> = split.iter().flatten().copied().collect();
        all.sort_by(|a, b| a.total_cmp(b));
        let q = |p: f64| all[((all.len() - 1) as f64 * p).round() as usize];
        let (q05, q95) = (q(0.05), q(0.95));
        let lo: Vec<Vec<f64>> = split
            .iter()
            .map(|c| c.iter().map(|&v| f64::from(u8::from(v <= q05))).collect())
            .collect();
        let hi: Vec<Vec<f64>> = split
            .iter()
            .map(|c| c.iter().map(|&v| f64::from(u8::from(v <= q95))).collect())
            .collect();
        ess(&lo).min(ess(&hi))
    };
    Ok(ParamDiagnostics {
        r_hat,
        ess_bulk,
        ess_tail,
        degenerate: false,
    })
}

fn split_chains(chains: &[&[f64]]) -> Vec<Vec<f64>> {
    let half = chains[0].len() / 2;
    let mut out = Vec::with_capacity(2 * chains.len());
    for c in chains {
        out.push(c[..half].to_vec());
        out.push(c[c.len() - half..].to_vec());
    }
    out
}

/// Pooled ranks (ties averaged) mapped through the normal quantile with the
/// Blom offset.
fn rank_normalize(chains: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let total: usize = chains.iter().map(|c| c.len()).sum();
    let mut order: Vec<(f64, usize, usize)> = chains
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| c.iter().enumerate().map(move |(i, &v)| (v, ci, i)))
        .collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let normal = Normal::standard();
    let mut out: Vec<Vec<f64>> = chains.iter().map(|c| vec![0.0; c.len()]).collect();
    let mut i = 0;
    while i < total {
        let mut j = i;
        while j + 1 < total && order[j + 1].0 == order[i].0 {
            j += 1;
        }
        let rank = 0.5 * ((i + 1) + (j + 1)) as f64;
        let z = normal.inverse_cdf((rank - 0.375) / (total as f64 + 0.25));
        for entry in &order[i..=j] {
            out[entry.1][entry.2] = z;
        }
        i = j + 1;
    }
    out
}

fn chain_mean_var(c: &[f64]) -> (f64, f64) {
    let n = c.len() as f64;
    let mean = c.iter().sum::<f64>() / n;
    let var = c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

fn basic_rhat(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len() as f64;
    let n = chains[0].len() as f64;
    let stats: Vec<(f64, f64)> = chains.iter().map(|c| chain_mean_var(c)).collect();
    let grand = stats.iter().map(|s| s.0).sum::<f64>() / m;
    let b = n / (m - 1.0) * stats.iter().map(|s| (s.0 - grand).powi(2)).sum::<f64>();
    let w = stats.iter().map(|s| s.1).sum::<f64>() / m;
    if w == 0.0 {
        return f64::NAN;
    }
    let var_plus = (n - 1.0) / n * w + b / n;
    (var_plus / w).sqrt()
}

/// Multi-chain ESS with Geyer's initial monotone sequence.
pub fn ess(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    let n = chains[0].len();
    let total = (m * n) as f64;
    let stats: Vec<(f64, f64)> = chains.iter().map(|c| chain_mean_var(c)).collect();
    let mean_var = stats.iter().map(|s| s.1).sum::<f64>() / m as f64;
    let grand = stats.iter().map(|s| s.0).sum::<f64>() / m as f64;
    let b_over_n = if m > 1 {
        stats.iter().map(|s| (s.0 - grand).powi(2)).sum::<f64>() / (m as f64 - 1.0)
    } else {
        0.0
    };
    let var_plus = mean_var * (n as f64 - 1.0) / n as f64 + b_over_n;
    if !(var_plus > 0.0) {
        return f64::NAN;
    }

    // Biased per-chain autocovariance at lag t, averaged over chains.
    let acov = |t: usize| -> f64 {
        chains
            .iter()
            .zip(&stats)
            .map(|(c, s)| {
                (0..n - t).map(|i| (c[i] - s.0) * (c[i + t] - s.0)).sum::<f64>() / n as f64
            })
            .sum::<f64>()
            / m as f64
    };
    // acov(0) uses the biased variance; mean_var is unbiased.
    let rho = |t: usize| -> f64 {
        if t == 0 {
            1.0
        } else {
            1.0 - (mean_var * (n as f64 - 1.0) / n as f64 - acov(t)) / var_plus
        }
    };

    let mut pair_sums: Vec<f64> = Vec::new();
    let mut t = 0;
    while t + 1 < n {
        let p = rho(t) + rho(t + 1);
        if p < 0.0 {
            break;
        }
        pair_sums.push(p);
        t += 2;
    }
    for k in 1..pair_sums.len() {
        if pair_sums[k] > pair_sums[k - 1] {
            pair_sums[k] = pair_sums[k - 1];
        }
    }
    let tau = (-1.0 + 2.0 * pair_sums.iter().sum::<f64>()).max(1.0 / total.log10());
    (total / tau).min(total * total.log10())
}
