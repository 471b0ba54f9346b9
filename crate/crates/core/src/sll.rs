//! Shifted log-logistic distribution.
//!
//! Parameterised by location `μ`, scale `σ > 0` and shape `γ`:
//!
//! ```text
//! F⁻¹(p) = μ + (σ/γ)·[(p/(1−p))^γ − 1]        γ ≠ 0
//! F⁻¹(p) = μ + σ·log(p/(1−p))                 γ = 0
//! ```
//!
//! The CDF and density are derived from this quantile function, so the three
//! are mutually consistent. The density is
//! `(1/σ)·t^{−(1/γ+1)}·[1 + t^{−1/γ}]^{−2}` with `t = 1 + γ(x−μ)/σ`.
//!
//! Small non-zero shapes are evaluated through `expm1`/`ln_1p` so that the
//! formulas join the `γ = 0` logistic limit continuously.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative gap `|(U−M) − (M−L)|` below which a triplet is treated as symmetric.
pub const SYMMETRY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SllParams {
    pub location: f64,
    pub scale: f64,
    pub shape: f64,
}

/// Lower quantile, median and upper quantile at probabilities
/// `(p_low, 0.5, 1 − p_low)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileTriplet {
    pub low: f64,
    pub median: f64,
    pub high: f64,
    pub p_low: f64,
}

impl QuantileTriplet {
    pub fn new(low: f64, median: f64, high: f64, p_low: f64) -> Result<Self> {
        let t = Self {
            low,
            median,
            high,
            p_low,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.low.is_finite() && self.median.is_finite() && self.high.is_finite()) {
            return Err(Error::domain(format!("non-finite quantile in {self:?}")));
        }
        if !(self.p_low > 0.0 && self.p_low < 0.5) {
            return Err(Error::domain(format!("p_low must lie in (0, 0.5), got {}", self.p_low)));
        }
        if !(self.low < self.median && self.median < self.high) {
            return Err(Error::ordering(format!(
                "require low < median < high, got ({}, {}, {})",
                self.low, self.median, self.high
            )));
        }
        Ok(())
    }

    pub fn p_high(&self) -> f64 {
        1.0 - self.p_low
    }

    /// Width of the plausible range `U − L`.
    pub fn range(&self) -> f64 {
        self.high - self.low
    }
}

pub(crate) fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

impl SllParams {
    pub fn new(location: f64, scale: f64, shape: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::domain(format!("scale must be positive, got {scale}")));
        }
        if !location.is_finite() || !shape.is_finite() {
            return Err(Error::domain("location and shape must be finite"));
        }
        Ok(Self { location, scale, shape })
    }

    /// `(lower, upper)` support bounds; infinite on the unbounded side.
    pub fn support(&self) -> (f64, f64) {
        let bound = self.location - self.scale / self.shape;
        if self.shape > 0.0 {
            (bound, f64::INFINITY)
        } else if self.shape < 0.0 {
            (f64::NEG_INFINITY, bound)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        }
    }

    /// `γ(x−μ)/σ`, the argument of `ln_1p` in the CDF.
    fn standardized(&self, x: f64) -> f64 {
        (x - self.location) / self.scale
    }

    /// Logit of the CDF at `x`, or `None` outside the support.
    fn cdf_logit(&self, x: f64) -> Option<f64> {
        let z = self.standardized(x);
        if self.shape == 0.0 {
            return Some(z);
        }
        let gz = self.shape * z;
        if gz <= -1.0 {
            return None;
        }
        Some(gz.ln_1p() / self.shape)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self.cdf_logit(x) {
            None => 0.0,
            Some(w) => {
                // dF/dx = F(1−F)·dw/dx with dw/dx = 1/(σ t)
                let t = if self.shape == 0.0 {
                    1.0
                } else {
                    1.0 + self.shape * self.standardized(x)
                };
                let e = (-w.abs()).exp();
                let f_one_minus_f = e / ((1.0 + e) * (1.0 + e));
                f_one_minus_f / (self.scale * t)
            }
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        self.pdf(x).ln()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.cdf_logit(x) {
            Some(w) => logistic(w),
            None => {
                if self.shape > 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::domain(format!(
                "quantile probability must lie in (0, 1), got {p}"
            )));
        }
        Ok(self.quantile_unchecked(p))
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        let lp = logit(p);
        if self.shape == 0.0 {
            self.location + self.scale * lp
        } else {
            self.location + self.scale * (self.shape * lp).exp_m1() / self.shape
        }
    }

    /// Inverse-CDF draw from a uniform variate `u`.
    pub fn sample(&self, u: f64) -> Result<f64> {
        self.quantile(u)
    }
}

/// Numerically stable logistic function `1/(1+e^{−w})`.
pub(crate) fn logistic(w: f64) -> f64 {
    if w >= 0.0 {
        1.0 / (1.0 + (-w).exp())
    } else {
        let e = w.exp();
        e / (1.0 + e)
    }
}

/// Closed-form fit of `(μ, σ, γ)` reproducing the triplet exactly.
///
/// With `a = M − L` and `b = U − M`, `γ = log(a/b)/logit(p_L)` and
/// `σ = γ·ab/(b − a)`; the latter is evaluated as
/// `−a·r/(expm1(r)·logit(p_L))`, `r = log a − log b`, which stays accurate as
/// the triplet approaches symmetry.
pub fn solve_sll(triplet: &QuantileTriplet) -> Result<SllParams> {
    triplet.validate()?;
    let a = triplet.median - triplet.low;
    let b = triplet.high - triplet.median;
    let lp = logit(triplet.p_low);

    if (b - a).abs() <= SYMMETRY_TOLERANCE * a.max(b) {
        return SllParams::new(triplet.median, -a / lp, 0.0);
    }

    let r = a.ln() - b.ln();
    let shape = r / lp;
    let scale = -a * r / (r.exp_m1() * lp);
    SllParams::new(triplet.median, scale, shape)
}
