//! Split-R̂ and effective sample size across multiple chains.
//!
//! Both follow the rank-free formulation used by Stan: chains are trimmed to
//! the shortest length, R̂ is computed on half-chains, and the effective
//! sample size combines per-chain autocovariances through Geyer's initial
//! monotone positive sequence.

use serde::{Deserialize, Serialize};

use crate::numeric::{mean, variance};

/// Chains whose split-R̂ exceeds this are flagged as not converged.
pub const RHAT_THRESHOLD: f64 = 1.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDiagnostics {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub rhat: f64,
    pub ess: f64,
    /// Monte-Carlo standard error of the posterior mean.
    pub mcse_mean: f64,
}

fn trimmed<'a>(chains: &[&'a [f64]]) -> Vec<&'a [f64]> {
    let n = chains.iter().map(|c| c.len()).min().unwrap_or(0);
    chains.iter().map(|c| &c[..n]).collect()
}

fn gelman_rubin(chains: &[&[f64]]) -> f64 {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = mean(&chains.iter().map(|c| variance(c)).collect::<Vec<_>>());
    let b_over_n = variance(&means);
    if w == 0.0 {
        return if b_over_n == 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (n - 1.0) / n * w + b_over_n;
    (var_plus / w).sqrt()
}

/// Potential scale reduction computed on each chain split in half.
pub fn split_rhat(chains: &[&[f64]]) -> f64 {
    let chains = trimmed(chains);
    let n = chains.first().map_or(0, |c| c.len());
    if n < 4 {
        return f64::NAN;
    }
    let half = n / 2;
    let mut split = Vec::with_capacity(2 * chains.len());
    for c in &chains {
        split.push(&c[..half]);
        split.push(&c[n - half..]);
    }
    gelman_rubin(&split)
}

fn autocovariance(x: &[f64], lag: usize, m: f64) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for t in 0..n - lag {
        s += (x[t] - m) * (x[t + lag] - m);
    }
    s / n as f64
}

/// Multi-chain effective sample size.
pub fn effective_sample_size(chains: &[&[f64]]) -> f64 {
    let chains = trimmed(chains);
    let m = chains.len();
    let n = chains.first().map_or(0, |c| c.len());
    if m == 0 || n < 4 {
        return f64::NAN;
    }
    let total = (m * n) as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = mean(&chains.iter().map(|c| variance(c)).collect::<Vec<_>>());
    let nf = n as f64;
    let var_plus = if m > 1 {
        (nf - 1.0) / nf * w + variance(&means)
    } else {
        (nf - 1.0) / nf * w
    };
    if var_plus <= 0.0 || !var_plus.is_finite() {
        return total;
    }

    let rho = |lag: usize| {
        let acov = chains
            .iter()
            .zip(&means)
            .map(|(c, &mu)| autocovariance(c, lag, mu))
            .sum::<f64>()
            / m as f64;
        1.0 - (w - acov) / var_plus
    };

    // Geyer: sum adjacent pairs while positive, enforcing monotonicity.
    let mut sum_pairs = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut lag = 0;
    while lag + 1 < n {
        let pair = if lag == 0 {
            1.0 + rho(1)
        } else {
            rho(lag) + rho(lag + 1)
        };
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev_pair);
        sum_pairs += pair;
        prev_pair = pair;
        lag += 2;
    }
    let tau = (-1.0 + 2.0 * sum_pairs).max(1.0 / total.log10());
    total / tau
}

pub fn diagnose(name: &str, chains: &[&[f64]]) -> ParamDiagnostics {
    let pooled: Vec<f64> = chains.iter().flat_map(|c| c.iter().copied()).collect();
    let sd = variance(&pooled).sqrt();
    let ess = effective_sample_size(chains);
    ParamDiagnostics {
        name: name.to_string(),
        mean: mean(&pooled),
        sd,
        rhat: split_rhat(chains),
        ess,
        mcse_mean: sd / ess.sqrt(),
    }
}
