//! Bayesian reconciliation of expert judgements.
//!
//! Experts supply quantile triplets for continuous quantities or point
//! probabilities for one-off events. The crate treats those judgements as data
//! in hierarchical models (experts nested in groups) and returns the decision
//! maker's posterior as the aggregated distribution.
//!
//! Module map:
//!
//! * [`sll`]: shifted log-logistic distribution and its three-quantile fit.
//! * [`standardize`]: decision-maker prior CDF plus logit standardisation.
//! * [`continuous`]: Normal hierarchy on medians and log-differences, Gibbs sampler.
//! * [`events`]: Beta hierarchy on event probabilities, Metropolis-within-Gibbs.
//! * [`evaluate`]: log-score, equal-weights pool, calibration, paired comparison.
//! * [`simulate`]: synthetic panels and coverage/rank studies.
//! * [`delphi`]: Delphi round storage, anonymised bundles and stopping rules.

pub mod chain;
pub mod continuous;
pub mod delphi;
pub mod diagnostics;
pub mod error;
pub mod evaluate;
pub mod events;
pub mod judgement;
pub mod numeric;
pub mod rng;
pub mod simulate;
pub mod sll;
pub mod standardize;

pub use chain::PosteriorChain;
pub use error::{Error, Result};
pub use judgement::{EventJudgement, QuantileJudgement};
pub use sll::{QuantileTriplet, SllParams};
