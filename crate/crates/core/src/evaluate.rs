//! Scoring and baselines.
//!
//! Forecasters are sets of per-quantity densities. Individual experts are
//! single shifted log-logistic fits, the equal-weights pool and the reconciled
//! predictive are equally weighted SLL mixtures (over experts and over
//! posterior draws respectively). Scores are mean log-densities: higher is
//! better.

use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::integrate;
use crate::rng::stream;
use crate::sll::{solve_sll, QuantileTriplet, SllParams};

pub trait Density: Send + Sync {
    fn pdf(&self, x: f64) -> f64;
    fn cdf(&self, x: f64) -> f64;
}

impl Density for SllParams {
    fn pdf(&self, x: f64) -> f64 {
        SllParams::pdf(self, x)
    }
    fn cdf(&self, x: f64) -> f64 {
        SllParams::cdf(self, x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformDensity {
    pub low: f64,
    pub high: f64,
}

impl Density for UniformDensity {
    fn pdf(&self, x: f64) -> f64 {
        if x >= self.low && x <= self.high {
            1.0 / (self.high - self.low)
        } else {
            0.0
        }
    }
    fn cdf(&self, x: f64) -> f64 {
        ((x - self.low) / (self.high - self.low)).clamp(0.0, 1.0)
    }
}

/// Equally weighted mixture of shifted log-logistic components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SllMixture {
    pub components: Vec<SllParams>,
}

impl SllMixture {
    pub fn new(components: Vec<SllParams>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("mixture needs at least one component"));
        }
        Ok(Self { components })
    }

    /// Range holding all but `eps` of every component's mass in each tail.
    pub fn tail_bounds(&self, eps: f64) -> (f64, f64) {
        let lo = self
            .components
            .iter()
            .map(|c| c.quantile(eps).expect("eps in (0, 1)"))
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .components
            .iter()
            .map(|c| c.quantile(1.0 - eps).expect("eps in (0, 1)"))
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Quadrature estimate of total mass (should be 1).
    pub fn mass(&self, tol: f64) -> Result<f64> {
        let eps = 1e-12;
        let (lo, hi) = self.tail_bounds(eps);
        // split at component medians so narrow peaks are not skipped
        let mut knots: Vec<f64> = self.components.iter().map(|c| c.location).collect();
        knots.extend([lo, hi]);
        knots.retain(|k| *k >= lo && *k <= hi);
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let mut total = 0.0;
        for w in knots.windows(2) {
            total += integrate(&|x| Density::pdf(self, x), w[0], w[1], tol / knots.len() as f64)?;
        }
        Ok(total + 2.0 * eps)
    }
}

impl Density for SllMixture {
    fn pdf(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.pdf(x)).sum::<f64>() / self.components.len() as f64
    }
    fn cdf(&self, x: f64) -> f64 {
        self.components.iter().map(|c| c.cdf(x)).sum::<f64>() / self.components.len() as f64
    }
}

/// Fit one expert's triplet.
pub fn fit_expert(triplet: &QuantileTriplet) -> Result<SllParams> {
    solve_sll(triplet)
}

/// `(1/I) Σ f_i(x)`: the equal-weights linear pool.
pub fn equal_weights_pdf(experts: &[SllParams], x: f64) -> Result<f64> {
    if experts.is_empty() {
        return Err(Error::invalid("equal-weights pool needs at least one expert"));
    }
    Ok(experts.iter().map(|e| e.pdf(x)).sum::<f64>() / experts.len() as f64)
}

/// A named forecaster with one density per scored quantity.
pub struct ScoredForecaster {
    pub name: String,
    pub densities: Vec<Box<dyn Density>>,
}

impl std::fmt::Debug for ScoredForecaster {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ScoredForecaster")
            .field("name", &self.name)
            .field("quantities", &self.densities.len())
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogScore {
    /// Mean log-density; `-inf` when any included quantity has zero density.
    pub value: f64,
    pub per_quantity: Vec<f64>,
    /// Quantities whose realization had zero density.
    pub zero_density: Vec<usize>,
    /// Whether zero-density quantities were left out of `value`.
    pub excluded_zero_density: bool,
}

impl LogScore {
    pub fn is_flagged(&self) -> bool {
        !self.zero_density.is_empty()
    }
}

/// Average log-score `(1/J) Σ_j log f_j(θ_j)`.
///
/// Zero densities give `-inf`, which is kept in the mean unless
/// `exclude_zero_density` is set.
pub fn avg_log_score(
    forecaster: &ScoredForecaster,
    realizations: &[f64],
    exclude_zero_density: bool,
) -> Result<LogScore> {
    if forecaster.densities.len() != realizations.len() {
        return Err(Error::invalid(format!(
            "forecaster `{}` has {} densities but {} realizations were given",
            forecaster.name,
            forecaster.densities.len(),
            realizations.len()
        )));
    }
    if realizations.is_empty() {
        return Err(Error::invalid("no realizations to score"));
    }
    let per_quantity: Vec<f64> = forecaster
        .densities
        .iter()
        .zip(realizations)
        .map(|(d, &x)| d.pdf(x).ln())
        .collect();
    let zero_density: Vec<usize> = per_quantity
        .iter()
        .enumerate()
        .filter(|(_, s)| **s == f64::NEG_INFINITY)
        .map(|(i, _)| i)
        .collect();
    let included: Vec<f64> = per_quantity
        .iter()
        .copied()
        .filter(|s| !exclude_zero_density || s.is_finite())
        .collect();
    let value = if included.is_empty() {
        f64::NEG_INFINITY
    } else {
        included.iter().sum::<f64>() / included.len() as f64
    };
    Ok(LogScore {
        value,
        per_quantity,
        zero_density,
        excluded_zero_density: exclude_zero_density,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationCurve {
    /// `(sorted CDF value, j/J)` pairs; perfect calibration lies on `x = y`.
    pub points: Vec<(f64, f64)>,
    /// Kolmogorov distance `sup_x |ECDF(x) − x|` of the CDF values.
    pub max_deviation: f64,
}

pub fn calibration_curve(cdf_values: &[f64]) -> Result<CalibrationCurve> {
    if let Some(v) = cdf_values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::domain(format!("calibration value {v} outside [0, 1]")));
    }
    let mut sorted = cdf_values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let j = sorted.len() as f64;
    let points: Vec<(f64, f64)> = sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, (i + 1) as f64 / j))
        .collect();
    let max_deviation = sorted
        .iter()
        .enumerate()
        .map(|(i, &v)| ((i + 1) as f64 / j - v).max(v - i as f64 / j))
        .fold(0.0, f64::max);
    Ok(CalibrationCurve { points, max_deviation })
}

/// Diffuse priors of the paired score comparison: `μ ~ N(0, PRIOR_MEAN_VAR)`,
/// `σ² ~ InvGamma(PRIOR_SHAPE, PRIOR_SCALE)`.
pub const COMPARISON_PRIOR_MEAN_VAR: f64 = 1e6;
pub const COMPARISON_PRIOR_SHAPE: f64 = 1e-3;
pub const COMPARISON_PRIOR_SCALE: f64 = 1e-3;
const COMPARISON_WARMUP: usize = 1000;
const COMPARISON_DRAWS: usize = 40_000;

/// Posterior probability that the mean of `a − b` is positive, under a
/// Normal model for the paired differences.
pub fn paired_score_comparison(scores_a: &[f64], scores_b: &[f64], seed: u64) -> Result<f64> {
    if scores_a.len() != scores_b.len() {
        return Err(Error::invalid("score vectors differ in length"));
    }
    if scores_a.len() < 3 {
        return Err(Error::invalid("paired comparison needs at least three studies"));
    }
    let d: Vec<f64> = scores_a.iter().zip(scores_b).map(|(a, b)| a - b).collect();
    if d.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("score differences must be finite"));
    }
    if d.iter().all(|&v| v == 0.0) {
        return Ok(0.5);
    }
    let n = d.len() as f64;
    let sum: f64 = d.iter().sum();
    let mut rng = stream(seed, 0);
    let mut mu = sum / n;
    let mut positive = 0usize;
    for it in 0..COMPARISON_WARMUP + COMPARISON_DRAWS {
        let ss: f64 = d.iter().map(|x| (x - mu) * (x - mu)).sum();
        let rate = COMPARISON_PRIOR_SCALE + 0.5 * ss;
        let tau = Gamma::new(COMPARISON_PRIOR_SHAPE + 0.5 * n, 1.0 / rate)
            .expect("positive gamma parameters")
            .sample(&mut rng);
        let prec = n * tau + 1.0 / COMPARISON_PRIOR_MEAN_VAR;
        let z: f64 = StandardNormal.sample(&mut rng);
        mu = sum * tau / prec + z / prec.sqrt();
        if it >= COMPARISON_WARMUP && mu > 0.0 {
            positive += 1;
        }
    }
    Ok(positive as f64 / COMPARISON_DRAWS as f64)
}
