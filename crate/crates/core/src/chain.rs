//! Container for multi-chain MCMC output.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{diagnose, ParamDiagnostics, RHAT_THRESHOLD};
use crate::error::{Error, Result};

/// Post-warmup draws from one chain, stored column-wise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainDraws {
    pub columns: Vec<Vec<f64>>,
}

/// Post-warmup draws from several chains plus their diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorChain {
    pub names: Vec<String>,
    pub chains: Vec<ChainDraws>,
    pub seed: u64,
    pub warmup: usize,
    pub diagnostics: Vec<ParamDiagnostics>,
    /// Parameters whose R̂ decides the convergence flag.
    pub monitored: Vec<String>,
    pub converged: bool,
}

impl PosteriorChain {
    /// Assemble chains, check every draw is finite and compute diagnostics.
    pub fn new(
        names: Vec<String>,
        chains: Vec<ChainDraws>,
        seed: u64,
        warmup: usize,
        monitored: &[&str],
    ) -> Result<Self> {
        if chains.is_empty() {
            return Err(Error::invalid("posterior needs at least one chain"));
        }
        for c in &chains {
            if c.columns.len() != names.len() {
                return Err(Error::invalid("column count does not match parameter names"));
            }
            for (name, col) in names.iter().zip(&c.columns) {
                if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                    return Err(Error::NonFinite {
                        parameter: name.clone(),
                        iteration: warmup + i,
                    });
                }
            }
        }
        let diagnostics = (0..names.len())
            .map(|p| {
                let cols: Vec<&[f64]> = chains.iter().map(|c| c.columns[p].as_slice()).collect();
                diagnose(&names[p], &cols)
            })
            .collect::<Vec<_>>();
        let converged = diagnostics
            .iter()
            .filter(|d| monitored.contains(&d.name.as_str()))
            .all(|d| d.rhat.is_finite() && d.rhat <= RHAT_THRESHOLD);
        Ok(Self {
            names,
            chains,
            seed,
            warmup,
            diagnostics,
            monitored: monitored.iter().map(|s| s.to_string()).collect(),
            converged,
        })
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// All draws of one parameter, chains concatenated in order.
    pub fn pooled(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.index_of(name)?;
        Some(self.chains.iter().flat_map(|c| c.columns[i].iter().copied()).collect())
    }

    pub fn per_chain(&self, name: &str) -> Option<Vec<&[f64]>> {
        let i = self.index_of(name)?;
        Some(self.chains.iter().map(|c| c.columns[i].as_slice()).collect())
    }

    pub fn diagnostics_for(&self, name: &str) -> Option<&ParamDiagnostics> {
        self.diagnostics.iter().find(|d| d.name == name)
    }

    /// Total number of kept draws across chains.
    pub fn len(&self) -> usize {
        self.chains
            .iter()
            .map(|c| c.columns.first().map_or(0, |col| col.len()))
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
