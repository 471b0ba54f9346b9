//! Standardisation of expert quantiles onto a common logit scale.
//!
//! Each quantile `Q` is pushed through the decision maker's prior CDF `F` and
//! then a logit, `Z = log(F(Q)/(1−F(Q)))`. The hierarchy is fitted to the
//! standardized median and the two positive differences `Z_M − Z_L` and
//! `Z_U − Z_M`. Reconciled quantiles are mapped back with the logistic
//! function followed by `F⁻¹`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::judgement::QuantileJudgement;
use crate::sll::{logistic, logit, QuantileTriplet};

/// CDF values are clamped to `[ε, 1 − ε]` before taking logits.
pub const CDF_CLAMP: f64 = 1e-6;

pub const DEFAULT_PADDING: f64 = 0.1;

/// The decision maker's prior for one quantity, reduced to its CDF.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DecisionMakerPrior {
    Uniform {
        low: f64,
        high: f64,
    },
    /// Piecewise-linear CDF through `(x, F(x))` knots. The first knot has
    /// `F = 0`, the last `F = 1`, and both coordinates strictly increase.
    Table {
        x: Vec<f64>,
        cdf: Vec<f64>,
    },
}

impl DecisionMakerPrior {
    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        let p = DecisionMakerPrior::Uniform { low, high };
        p.validate()?;
        Ok(p)
    }

    pub fn table(x: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        let p = DecisionMakerPrior::Table { x, cdf };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DecisionMakerPrior::Uniform { low, high } => {
                if !(low.is_finite() && high.is_finite() && low < high) {
                    return Err(Error::invalid(format!(
                        "decision-maker range must satisfy low < high, got [{low}, {high}]"
                    )));
                }
            }
            DecisionMakerPrior::Table { x, cdf } => {
                if x.len() < 2 || x.len() != cdf.len() {
                    return Err(Error::invalid(
                        "CDF table needs at least two knots and matching columns",
                    ));
                }
                if cdf[0] != 0.0 || cdf[cdf.len() - 1] != 1.0 {
                    return Err(Error::invalid("CDF table must start at 0 and end at 1"));
                }
                let increasing = |v: &[f64]| v.windows(2).all(|w| w[0] < w[1]);
                if !increasing(x) || !increasing(cdf) || x.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("CDF table must be strictly increasing"));
                }
            }
        }
        Ok(())
    }

    pub fn range(&self) -> (f64, f64) {
        match self {
            DecisionMakerPrior::Uniform { low, high } => (*low, *high),
            DecisionMakerPrior::Table { x, .. } => (x[0], x[x.len() - 1]),
        }
    }

    pub fn cdf(&self, v: f64) -> f64 {
        let (lo, hi) = self.range();
        if v <= lo {
            return 0.0;
        }
        if v >= hi {
            return 1.0;
        }
        match self {
            DecisionMakerPrior::Uniform { low, high } => (v - low) / (high - low),
            DecisionMakerPrior::Table { x, cdf } => interpolate(x, cdf, v),
        }
    }

    pub fn inverse_cdf(&self, y: f64) -> f64 {
        let y = y.clamp(0.0, 1.0);
        match self {
            DecisionMakerPrior::Uniform { low, high } => low + y * (high - low),
            DecisionMakerPrior::Table { x, cdf } => interpolate(cdf, x, y),
        }
    }

    /// Prior density, used to map original-scale densities onto the CDF scale.
    pub fn pdf(&self, v: f64) -> f64 {
        let (lo, hi) = self.range();
        if v < lo || v > hi {
            return 0.0;
        }
        match self {
            DecisionMakerPrior::Uniform { low, high } => 1.0 / (high - low),
            DecisionMakerPrior::Table { x, cdf } => {
                let i = segment(x, v);
                (cdf[i + 1] - cdf[i]) / (x[i + 1] - x[i])
            }
        }
    }
}

fn segment(xs: &[f64], v: f64) -> usize {
    match xs.partition_point(|&k| k <= v) {
        0 => 0,
        i => (i - 1).min(xs.len() - 2),
    }
}

fn interpolate(xs: &[f64], ys: &[f64], v: f64) -> f64 {
    let i = segment(xs, v);
    let w = (v - xs[i]) / (xs[i + 1] - xs[i]);
    ys[i] + w * (ys[i + 1] - ys[i])
}

/// Uniform prior over the panel's plausible range, widened by `padding` of
/// the width on each side. Plausible bounds fall back to the outer quantiles.
pub fn dm_range_from_panel(judgements: &[QuantileJudgement], padding: f64) -> Result<DecisionMakerPrior> {
    if judgements.is_empty() {
        return Err(Error::invalid(
            "cannot build a decision-maker range from an empty panel",
        ));
    }
    if !(padding >= 0.0 && padding.is_finite()) {
        return Err(Error::invalid(format!("padding must be non-negative, got {padding}")));
    }
    let lo = judgements
        .iter()
        .map(|j| j.plausible_low.unwrap_or(j.triplet.low).min(j.triplet.low))
        .fold(f64::INFINITY, f64::min);
    let hi = judgements
        .iter()
        .map(|j| j.plausible_high.unwrap_or(j.triplet.high).max(j.triplet.high))
        .fold(f64::NEG_INFINITY, f64::max);
    let width = hi - lo;
    if width.is_nan() || width <= 0.0 {
        return Err(Error::invalid(format!("panel range [{lo}, {hi}] has zero width")));
    }
    DecisionMakerPrior::uniform(lo - padding * width, hi + padding * width)
}

/// Median and log-scale spreads of one triplet on the logit scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardizedTriplet {
    pub z_median: f64,
    /// `z_median − z_low`
    pub d1: f64,
    /// `z_high − z_median`
    pub d2: f64,
}

impl StandardizedTriplet {
    pub fn z_low(&self) -> f64 {
        self.z_median - self.d1
    }

    pub fn z_high(&self) -> f64 {
        self.z_median + self.d2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileRole {
    Low,
    Median,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardized {
    pub triplet: StandardizedTriplet,
    /// Quantiles whose CDF value had to be clamped.
    pub clamped: Vec<QuantileRole>,
}

pub fn standardize_triplet(prior: &DecisionMakerPrior, triplet: &QuantileTriplet) -> Result<Standardized> {
    triplet.validate()?;
    let mut clamped = Vec::new();
    let mut z = |v: f64, role: QuantileRole| {
        let x = prior.cdf(v);
        let xc = x.clamp(CDF_CLAMP, 1.0 - CDF_CLAMP);
        if xc != x {
            clamped.push(role);
        }
        logit(xc)
    };
    let zl = z(triplet.low, QuantileRole::Low);
    let zm = z(triplet.median, QuantileRole::Median);
    let zu = z(triplet.high, QuantileRole::High);
    let (d1, d2) = (zm - zl, zu - zm);
    if !(d1 > 0.0 && d2 > 0.0) {
        return Err(Error::ordering(format!(
            "quantiles ({}, {}, {}) collapse after clamping to the decision-maker range {:?}",
            triplet.low,
            triplet.median,
            triplet.high,
            prior.range()
        )));
    }
    Ok(Standardized {
        triplet: StandardizedTriplet { z_median: zm, d1, d2 },
        clamped,
    })
}

/// [`standardize_triplet`] with the expert named in errors and warnings.
pub fn standardize_judgement(
    prior: &DecisionMakerPrior,
    judgement: &QuantileJudgement,
) -> Result<(StandardizedTriplet, Vec<String>)> {
    let s = standardize_triplet(prior, &judgement.triplet).map_err(|e| match e {
        Error::Ordering(m) => Error::Ordering(format!("expert `{}`: {m}", judgement.expert)),
        other => other,
    })?;
    let warnings = s
        .clamped
        .iter()
        .map(|role| {
            format!(
                "expert `{}` quantity `{}`: {:?} quantile outside decision-maker range, CDF clamped to {}",
                judgement.expert, judgement.quantity, role, CDF_CLAMP
            )
        })
        .collect();
    Ok((s.triplet, warnings))
}

/// Map logit-scale quantiles back to the original scale.
pub fn back_transform(
    prior: &DecisionMakerPrior,
    z_low: f64,
    z_median: f64,
    z_high: f64,
    p_low: f64,
) -> Result<QuantileTriplet> {
    if !(z_low < z_median && z_median < z_high) {
        return Err(Error::ordering(format!(
            "standardized quantiles must increase, got ({z_low}, {z_median}, {z_high})"
        )));
    }
    let q = |z: f64| prior.inverse_cdf(logistic(z));
    QuantileTriplet::new(q(z_low), q(z_median), q(z_high), p_low)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qj(expert: &str, l: f64, m: f64, u: f64) -> QuantileJudgement {
        QuantileJudgement {
            expert: expert.into(),
            group: "g".into(),
            quantity: "q".into(),
            round: 1,
            triplet: QuantileTriplet::new(l, m, u, 0.05).unwrap(),
            plausible_low: None,
            plausible_high: None,
        }
    }

    #[test]
    fn range_from_panel() {
        let panel = [qj("a", 1.0, 2.0, 4.0), qj("b", 0.0, 3.0, 5.0)];
        assert_eq!(
            dm_range_from_panel(&panel, 0.0).unwrap(),
            DecisionMakerPrior::Uniform { low: 0.0, high: 5.0 }
        );
        assert_eq!(
            dm_range_from_panel(&panel, 0.1).unwrap(),
            DecisionMakerPrior::Uniform { low: -0.5, high: 5.5 }
        );
        assert!(dm_range_from_panel(&[], 0.1).is_err());
    }

    #[test]
    fn range_uses_plausible_bounds() {
        let mut j = qj("a", 1.0, 2.0, 4.0);
        j.plausible_low = Some(-3.0);
        j.plausible_high = Some(9.0);
        assert_eq!(dm_range_from_panel(&[j], 0.0).unwrap().range(), (-3.0, 9.0));
    }

    #[test]
    fn degenerate_single_judgement_range() {
        let j = QuantileJudgement {
            triplet: QuantileTriplet {
                low: 1.0,
                median: 1.0,
                high: 1.0,
                p_low: 0.05,
            },
            ..qj("a", 0.0, 1.0, 2.0)
        };
        assert!(dm_range_from_panel(&[j], 0.1).is_err());
    }

    #[test]
    fn standardize_uniform_example() {
        let prior = DecisionMakerPrior::uniform(0.0, 10.0).unwrap();
        let t = QuantileTriplet::new(2.5, 5.0, 7.5, 0.05).unwrap();
        let s = standardize_triplet(&prior, &t).unwrap();
        assert!(s.clamped.is_empty());
        assert_eq!(s.triplet.z_median, 0.0);
        assert!((s.triplet.d1 - 1.098_612_288_668_11).abs() < 1e-12);
        assert!((s.triplet.d2 - 1.098_612_288_668_11).abs() < 1e-12);

        let unit = DecisionMakerPrior::uniform(0.0, 1.0).unwrap();
        let t = QuantileTriplet::new(0.2, 0.5, 0.9, 0.05).unwrap();
        assert_eq!(standardize_triplet(&unit, &t).unwrap().triplet.z_median, 0.0);
    }

    #[test]
    fn clamps_out_of_range_quantiles() {
        let prior = DecisionMakerPrior::uniform(0.0, 10.0).unwrap();
        let t = QuantileTriplet::new(-1.0, 5.0, 7.5, 0.05).unwrap();
        let s = standardize_triplet(&prior, &t).unwrap();
        assert_eq!(s.clamped, vec![QuantileRole::Low]);
        assert!((s.triplet.z_low() - logit(CDF_CLAMP)).abs() < 1e-12);

        let (_, w) = standardize_judgement(&prior, &qj("alice", -1.0, 5.0, 7.5)).unwrap();
        assert_eq!(w.len(), 1);
        assert!(w[0].contains("alice"));
    }

    #[test]
    fn clamp_collapse_names_expert() {
        let prior = DecisionMakerPrior::uniform(0.0, 10.0).unwrap();
        let err = standardize_judgement(&prior, &qj("bob", -3.0, -2.0, 5.0)).unwrap_err();
        assert!(matches!(&err, Error::Ordering(m) if m.contains("bob")));
    }

    #[test]
    fn back_transform_examples() {
        let prior = DecisionMakerPrior::uniform(0.0, 10.0).unwrap();
        let d = 3.0f64.ln();
        let t = back_transform(&prior, -d, 0.0, d, 0.05).unwrap();
        assert!((t.low - 2.5).abs() < 1e-12);
        assert_eq!(t.median, 5.0);
        assert!((t.high - 7.5).abs() < 1e-12);

        let ab = DecisionMakerPrior::uniform(-3.0, 11.0).unwrap();
        assert_eq!(back_transform(&ab, -1.0, 0.0, 1.0, 0.05).unwrap().median, 4.0);

        assert!(matches!(
            back_transform(&prior, 0.0, 0.0, 1.0, 0.05),
            Err(Error::Ordering(_))
        ));
    }

    #[test]
    fn table_prior_round_trips() {
        let prior = DecisionMakerPrior::table(vec![0.0, 1.0, 3.0, 10.0], vec![0.0, 0.2, 0.9, 1.0]).unwrap();
        for v in [0.1, 0.5, 1.0, 2.2, 7.0, 9.9] {
            let y = prior.cdf(v);
            assert!((prior.inverse_cdf(y) - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
        assert_eq!(prior.cdf(-1.0), 0.0);
        assert_eq!(prior.cdf(11.0), 1.0);
        assert!((prior.pdf(2.0) - 0.35).abs() < 1e-12);
        assert!(DecisionMakerPrior::table(vec![0.0, 1.0], vec![0.0, 0.9]).is_err());
        assert!(DecisionMakerPrior::table(vec![0.0, 0.0, 1.0], vec![0.0, 0.5, 1.0]).is_err());
    }
}
