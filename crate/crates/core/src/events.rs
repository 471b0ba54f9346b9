//! Beta hierarchy for one-off event probabilities.
//!
//! ```text
//! p_ig | n_W, p_g ~ Beta(n_W p_g, n_W (1 − p_g))
//! p_g  | n_B, p   ~ Beta(n_B p,   n_B (1 − p))
//! n_W ~ Gamma(a_W, b_W),  n_B ~ Gamma(a_B, b_B),  p ~ Beta(α₀, β₀)
//! ```
//!
//! `n_W` and `n_B` act as within- and between-group prior sample sizes. The
//! reconciled probability is the posterior mean of `p`. The hierarchy is not
//! conjugate, so every scalar is updated by a random-walk Metropolis step on
//! the logit (probabilities) or log (sample sizes) scale. Step sizes adapt
//! during warmup only.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::chain::{ChainDraws, PosteriorChain};
use crate::error::{Error, Result};
use crate::judgement::{group_panel, EventJudgement};
use crate::rng::stream;
use crate::sll::{logistic, logit};

/// Expert probabilities are clamped into `[ε, 1 − ε]`.
pub const PROBABILITY_CLAMP: f64 = 1e-4;

/// Target per-scalar acceptance rate for step-size adaptation.
pub const TARGET_ACCEPTANCE: f64 = 0.44;

pub const PARAM_P: &str = "p";
pub const PARAM_N_W: &str = "n_w";
pub const PARAM_N_B: &str = "n_b";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleSizePrior {
    Gamma {
        shape: f64,
        rate: f64,
    },
    /// Hold the sample size at a known value.
    Fixed(f64),
}

impl SampleSizePrior {
    fn validate(&self, what: &str) -> Result<()> {
        let ok = match *self {
            SampleSizePrior::Gamma { shape, rate } => {
                shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()
            }
            SampleSizePrior::Fixed(n) => n > 0.0 && n.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{what}: parameters must be positive, got {self:?}"
            )))
        }
    }

    fn ln_density(&self, n: f64) -> f64 {
        match *self {
            SampleSizePrior::Gamma { shape, rate } => {
                shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * n.ln() - rate * n
            }
            SampleSizePrior::Fixed(_) => 0.0,
        }
    }

    fn initial(&self) -> f64 {
        match *self {
            SampleSizePrior::Gamma { shape, rate } => shape / rate,
            SampleSizePrior::Fixed(n) => n,
        }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            SampleSizePrior::Gamma { shape, rate } => Gamma::new(shape, 1.0 / rate)
                .expect("validated gamma parameters")
                .sample(rng),
            SampleSizePrior::Fixed(n) => n,
        }
    }

    fn is_fixed(&self) -> bool {
        matches!(self, SampleSizePrior::Fixed(_))
    }
}

/// Decision maker's `Beta(α₀, β₀)` prior on `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaPrior {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaPrior {
    pub const UNIFORM: BetaPrior = BetaPrior { alpha: 1.0, beta: 1.0 };

    /// Beta prior with the given mean and `α + β = strength`.
    pub fn with_mean(mean: f64, strength: f64) -> Result<Self> {
        if !(mean > 0.0 && mean < 1.0 && strength > 0.0) {
            return Err(Error::invalid(format!(
                "prior mean must lie in (0, 1) and strength be positive, got {mean}, {strength}"
            )));
        }
        Ok(Self {
            alpha: mean * strength,
            beta: (1.0 - mean) * strength,
        })
    }

    pub fn mean(&self) -> f64 {
        self.alpha / (self.alpha + self.beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EventModelSpec {
    /// Prior on the within-group sample size `n_W ~ Gamma(a_W, b_W)`.
    pub within: SampleSizePrior,
    /// Prior on the between-group sample size `n_B ~ Gamma(a_B, b_B)`.
    pub between: SampleSizePrior,
    pub dm_prior: BetaPrior,
    pub warmup: usize,
    pub kept: usize,
    pub chains: usize,
    pub seed: u64,
    /// Starting random-walk scale for every scalar.
    pub initial_step: f64,
}

impl Default for EventModelSpec {
    fn default() -> Self {
        Self {
            within: SampleSizePrior::Gamma { shape: 20.0, rate: 2.0 },
            between: SampleSizePrior::Gamma { shape: 20.0, rate: 2.0 },
            dm_prior: BetaPrior::UNIFORM,
            warmup: 2000,
            kept: 2000,
            chains: 4,
            seed: 0,
            initial_step: 1.0,
        }
    }
}

impl EventModelSpec {
    pub fn validate(&self) -> Result<()> {
        self.within.validate("within-group sample size prior")?;
        self.between.validate("between-group sample size prior")?;
        let BetaPrior { alpha, beta } = self.dm_prior;
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(Error::invalid(
                "decision-maker Beta prior must have positive parameters",
            ));
        }
        if self.chains == 0 || self.kept < 4 {
            return Err(Error::invalid("need at least one chain and four kept draws"));
        }
        if !(self.initial_step >= 0.0 && self.initial_step.is_finite()) {
            return Err(Error::invalid("initial step must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventState {
    pub p: f64,
    pub p_g: Vec<f64>,
    pub n_w: f64,
    pub n_b: f64,
}

/// Expert probabilities arranged by group in canonical order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventData {
    pub labels: Vec<String>,
    pub probs: Vec<Vec<f64>>,
}

impl EventData {
    pub fn from_groups(groups: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::invalid("no groups"));
        }
        let mut rows = Vec::with_capacity(groups.len());
        for (label, mut probs) in groups {
            if probs.is_empty() {
                return Err(Error::invalid(format!("group `{label}` has no experts")));
            }
            probs.sort_by(f64::total_cmp);
            rows.push((label, probs));
        }
        rows.sort_by(|a, b| {
            a.1.len()
                .cmp(&b.1.len())
                .then_with(|| {
                    a.1.iter()
                        .zip(&b.1)
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .then_with(|| a.0.cmp(&b.0))
        });
        let (labels, probs) = rows.into_iter().unzip();
        Ok(Self { labels, probs })
    }

    pub fn n_experts(&self) -> usize {
        self.probs.iter().map(Vec::len).sum()
    }
}

/// `ln Beta(x; α, β)`.
fn ln_beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    (a - 1.0) * x.ln() + (b - 1.0) * (-x).ln_1p() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
}

fn group_terms(probs: &[f64], p_g: f64, n_w: f64) -> f64 {
    probs
        .iter()
        .map(|&x| ln_beta_pdf(x, n_w * p_g, n_w * (1.0 - p_g)))
        .sum()
}

fn between_term(p_g: f64, p: f64, n_b: f64) -> f64 {
    ln_beta_pdf(p_g, n_b * p, n_b * (1.0 - p))
}

fn in_open_unit(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

/// Joint log posterior density (up to a constant) on the natural scale.
pub fn event_log_posterior(state: &EventState, data: &EventData, spec: &EventModelSpec) -> Result<f64> {
    if state.p_g.len() != data.probs.len() {
        return Err(Error::invalid("state and data disagree on the number of groups"));
    }
    if let Some(x) = data.probs.iter().flatten().find(|x| !in_open_unit(**x)) {
        return Err(Error::domain(format!(
            "expert probability {x} is on the boundary of [0, 1]"
        )));
    }
    if !in_open_unit(state.p) || !state.p_g.iter().all(|x| in_open_unit(*x)) {
        return Err(Error::domain("state probabilities must lie strictly inside (0, 1)"));
    }
    if !(state.n_w > 0.0 && state.n_b > 0.0) {
        return Err(Error::domain("sample sizes must be positive"));
    }
    let mut lp = 0.0;
    for (probs, &pg) in data.probs.iter().zip(&state.p_g) {
        lp += group_terms(probs, pg, state.n_w);
        lp += between_term(pg, state.p, state.n_b);
    }
    lp += spec.within.ln_density(state.n_w);
    lp += spec.between.ln_density(state.n_b);
    lp += ln_beta_pdf(state.p, spec.dm_prior.alpha, spec.dm_prior.beta);
    Ok(lp)
}

/// Random-walk scales in transformed space, laid out as
/// `[p_g for each group..., p, n_W, n_B]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProposalScales(pub Vec<f64>);

impl ProposalScales {
    pub fn uniform(n_groups: usize, step: f64) -> Self {
        Self(vec![step; n_groups + 3])
    }
}

/// Metropolis accept/reject on a scalar; returns whether the proposal was taken.
fn mh_step<R: Rng + ?Sized, F: Fn(f64) -> f64>(rng: &mut R, current: &mut f64, scale: f64, target: F) -> bool {
    let z: f64 = StandardNormal.sample(rng);
    let proposal = *current + scale * z;
    let log_ratio = target(proposal) - target(*current);
    let u: f64 = rng.random();
    if log_ratio.is_finite() && (log_ratio >= 0.0 || u.ln() < log_ratio) {
        *current = proposal;
        true
    } else {
        false
    }
}

/// One sweep of scalar Metropolis updates. Returns per-scalar acceptance
/// indicators in [`ProposalScales`] layout; fixed sample sizes report `false`.
pub fn mwg_update<R: Rng + ?Sized>(
    state: &mut EventState,
    data: &EventData,
    spec: &EventModelSpec,
    scales: &ProposalScales,
    rng: &mut R,
) -> Vec<bool> {
    let g_count = state.p_g.len();
    let mut accepted = vec![false; g_count + 3];

    // Densities below include the Jacobian of the logit / log transform.
    for g in 0..g_count {
        let (p, n_w, n_b) = (state.p, state.n_w, state.n_b);
        let probs = &data.probs[g];
        let mut u = logit(state.p_g[g]);
        let u0 = u;
        accepted[g] = mh_step(rng, &mut u, scales.0[g], |v| {
            let pg = logistic(v);
            if !in_open_unit(pg) {
                return f64::NEG_INFINITY;
            }
            group_terms(probs, pg, n_w) + between_term(pg, p, n_b) + pg.ln() + (-pg).ln_1p()
        });
        if accepted[g] && u != u0 {
            state.p_g[g] = logistic(u);
        }
    }

    {
        let (p_g, n_b) = (&state.p_g, state.n_b);
        let dm = spec.dm_prior;
        let mut u = logit(state.p);
        let u0 = u;
        accepted[g_count] = mh_step(rng, &mut u, scales.0[g_count], |v| {
            let p = logistic(v);
            if !in_open_unit(p) {
                return f64::NEG_INFINITY;
            }
            p_g.iter().map(|&pg| between_term(pg, p, n_b)).sum::<f64>()
                + ln_beta_pdf(p, dm.alpha, dm.beta)
                + p.ln()
                + (-p).ln_1p()
        });
        if accepted[g_count] && u != u0 {
            state.p = logistic(u);
        }
    }

    if !spec.within.is_fixed() {
        let p_g = &state.p_g;
        let mut u = state.n_w.ln();
        let u0 = u;
        accepted[g_count + 1] = mh_step(rng, &mut u, scales.0[g_count + 1], |v| {
            let n = v.exp();
            if !(n > 0.0 && n.is_finite()) {
                return f64::NEG_INFINITY;
            }
            data.probs
                .iter()
                .zip(p_g)
                .map(|(probs, &pg)| group_terms(probs, pg, n))
                .sum::<f64>()
                + spec.within.ln_density(n)
                + v
        });
        if accepted[g_count + 1] && u != u0 {
            state.n_w = u.exp();
        }
    }

    if !spec.between.is_fixed() {
        let (p_g, p) = (&state.p_g, state.p);
        let mut u = state.n_b.ln();
        let u0 = u;
        accepted[g_count + 2] = mh_step(rng, &mut u, scales.0[g_count + 2], |v| {
            let n = v.exp();
            if !(n > 0.0 && n.is_finite()) {
                return f64::NEG_INFINITY;
            }
            p_g.iter().map(|&pg| between_term(pg, p, n)).sum::<f64>() + spec.between.ln_density(n) + v
        });
        if accepted[g_count + 2] && u != u0 {
            state.n_b = u.exp();
        }
    }
    accepted
}

impl EventState {
    pub fn initial(data: &EventData, spec: &EventModelSpec) -> Self {
        let p_g: Vec<f64> = data
            .probs
            .iter()
            .map(|g| crate::numeric::mean(g).clamp(0.01, 0.99))
            .collect();
        EventState {
            p: crate::numeric::mean(&p_g),
            p_g,
            n_w: spec.within.initial(),
            n_b: spec.between.initial(),
        }
    }
}

/// Simple averages reported alongside the reconciled probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventSummary {
    pub equal_weights: f64,
    pub group_means: Vec<(String, f64)>,
}

#[derive(Debug, Clone)]
pub struct EventRun {
    pub probability: f64,
    pub chain: PosteriorChain,
    pub data: EventData,
    pub summary: EventSummary,
    /// Post-warmup acceptance rate per scalar, in [`ProposalScales`] layout.
    pub acceptance: Vec<f64>,
    pub warnings: Vec<String>,
}

fn p_g_name(label: &str) -> String {
    format!("p_g[{label}]")
}

/// Run adapted Metropolis-within-Gibbs chains on prepared data.
pub fn sample_events(data: &EventData, spec: &EventModelSpec) -> Result<(PosteriorChain, Vec<f64>)> {
    spec.validate()?;
    let g_count = data.probs.len();
    let n_scalars = g_count + 3;
    let results = (0..spec.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(spec.seed, c as u64);
            let mut state = EventState::initial(data, spec);
            let mut log_scales = vec![spec.initial_step.max(f64::MIN_POSITIVE).ln(); n_scalars];
            let zero_step = spec.initial_step == 0.0;
            let mut accepts = vec![0usize; n_scalars];
            let mut cols: Vec<Vec<f64>> = (0..n_scalars).map(|_| Vec::with_capacity(spec.kept)).collect();
            for it in 0..spec.warmup + spec.kept {
                let scales = if zero_step {
                    ProposalScales::uniform(g_count, 0.0)
                } else {
                    ProposalScales(log_scales.iter().map(|s| s.exp()).collect())
                };
                let acc = mwg_update(&mut state, data, spec, &scales, &mut rng);
                if it < spec.warmup {
                    // Robbins-Monro on the log scale; frozen after warmup.
                    let rate = (it as f64 + 1.0).powf(-0.6);
                    for (s, a) in log_scales.iter_mut().zip(&acc) {
                        *s += rate * (f64::from(u8::from(*a)) - TARGET_ACCEPTANCE);
                    }
                } else {
                    for (n, a) in accepts.iter_mut().zip(&acc) {
                        *n += usize::from(*a);
                    }
                    cols[0].push(state.p);
                    cols[1].push(state.n_w);
                    cols[2].push(state.n_b);
                    for g in 0..g_count {
                        cols[3 + g].push(state.p_g[g]);
                    }
                }
            }
            Ok((ChainDraws { columns: cols }, accepts))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut names = vec![PARAM_P.to_string(), PARAM_N_W.to_string(), PARAM_N_B.to_string()];
    names.extend(data.labels.iter().map(|l| p_g_name(l)));
    let mut totals = vec![0usize; n_scalars];
    let mut chains = Vec::with_capacity(results.len());
    for (draws, acc) in results {
        for (t, a) in totals.iter_mut().zip(acc) {
            *t += a;
        }
        chains.push(draws);
    }
    let denom = (spec.kept * spec.chains) as f64;
    let acceptance = totals.iter().map(|&t| t as f64 / denom).collect();
    let chain = PosteriorChain::new(names, chains, spec.seed, spec.warmup, &[PARAM_P])?;
    Ok((chain, acceptance))
}

/// Clamp boundary probabilities and arrange a single-event panel by group.
pub fn prepare_events(panel: &[EventJudgement]) -> Result<(EventData, EventSummary, Vec<String>)> {
    if let Some(q) = panel.iter().find(|j| j.quantity != panel[0].quantity) {
        return Err(Error::invalid(format!(
            "panel mixes events `{}` and `{}`",
            panel[0].quantity, q.quantity
        )));
    }
    let mut warnings = Vec::new();
    let mut groups = Vec::new();
    let mut group_means = Vec::new();
    for (label, members) in group_panel(panel)? {
        let mut probs = Vec::with_capacity(members.len());
        for j in &members {
            if !(0.0..=1.0).contains(&j.probability) {
                return Err(Error::domain(format!(
                    "expert `{}` gave probability {} outside [0, 1]",
                    j.expert, j.probability
                )));
            }
            let c = j.probability.clamp(PROBABILITY_CLAMP, 1.0 - PROBABILITY_CLAMP);
            if c != j.probability {
                warnings.push(format!(
                    "expert `{}` event `{}`: probability {} clamped to {}",
                    j.expert, j.quantity, j.probability, c
                ));
            }
            probs.push(c);
        }
        let raw: Vec<f64> = members.iter().map(|j| j.probability).collect();
        group_means.push((label.clone(), crate::numeric::mean(&raw)));
        groups.push((label, probs));
    }
    let all: Vec<f64> = panel.iter().map(|j| j.probability).collect();
    let summary = EventSummary {
        equal_weights: crate::numeric::mean(&all),
        group_means,
    };
    Ok((EventData::from_groups(groups)?, summary, warnings))
}

/// Reconciled probability `Pr(X = 1) ≈ mean of posterior p draws`.
pub fn reconcile_event(panel: &[EventJudgement], spec: &EventModelSpec) -> Result<EventRun> {
    if panel.len() < 2 {
        return Err(Error::invalid(format!(
            "reconciliation needs at least two experts, got {}",
            panel.len()
        )));
    }
    let (data, summary, mut warnings) = prepare_events(panel)?;
    let (chain, acceptance) = sample_events(&data, spec)?;
    let probability = crate::numeric::mean(&chain.pooled(PARAM_P).expect("p column"));
    if !chain.converged {
        warnings.push("split R-hat above 1.05 on p".to_string());
    }
    Ok(EventRun {
        probability,
        chain,
        data,
        summary,
        acceptance,
        warnings,
    })
}

/// Prior strength `α₀ + β₀` used for the decision-maker prior in sensitivity sweeps.
pub const SENSITIVITY_PRIOR_STRENGTH: f64 = 2.0;
pub const SENSITIVITY_RATE: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityGrid {
    pub a_values: Vec<f64>,
    pub prior_means: Vec<f64>,
    /// `values[i][k]` for `a_values[i]` and `prior_means[k]`.
    pub values: Vec<Vec<f64>>,
}

/// Reconciled probability over a grid of `a_W = a_B = a` (with `b = 2`)
/// and decision-maker prior means (with `α₀ + β₀ = 2`).
pub fn sensitivity_curve(
    panel: &[EventJudgement],
    template: &EventModelSpec,
    a_values: &[f64],
    prior_means: &[f64],
) -> Result<SensitivityGrid> {
    let cells: Vec<(usize, usize)> = (0..a_values.len())
        .flat_map(|i| (0..prior_means.len()).map(move |k| (i, k)))
        .collect();
    let results = cells
        .par_iter()
        .map(|&(i, k)| {
            let gamma = SampleSizePrior::Gamma {
                shape: a_values[i],
                rate: SENSITIVITY_RATE,
            };
            let spec = EventModelSpec {
                within: gamma,
                between: gamma,
                dm_prior: BetaPrior::with_mean(prior_means[k], SENSITIVITY_PRIOR_STRENGTH)?,
                ..template.clone()
            };
            reconcile_event(panel, &spec).map(|r| r.probability)
        })
        .collect::<Result<Vec<f64>>>()?;
    let values = results.chunks(prior_means.len().max(1)).map(|r| r.to_vec()).collect();
    Ok(SensitivityGrid {
        a_values: a_values.to_vec(),
        prior_means: prior_means.to_vec(),
        values,
    })
}

/// Beta draw parameterised by mean and concentration, with the Bernoulli
/// limit for vanishing concentration.
pub(crate) fn beta_mean_draw<R: Rng + ?Sized>(rng: &mut R, mean: f64, strength: f64) -> f64 {
    let (a, b) = (strength * mean, strength * (1.0 - mean));
    if a > 0.0 && b > 0.0 {
        if let Ok(d) = Beta::new(a, b) {
            let x: f64 = d.sample(rng);
            if x.is_finite() {
                return x;
            }
        }
    }
    if rng.random::<f64>() < mean {
        1.0
    } else {
        0.0
    }
}

pub const MIN_CORRELATION_DRAWS: usize = 100_000;

/// Monte-Carlo prior correlation between two experts' probabilities, either
/// in the same group or in two different groups.
pub fn prior_correlation<R: Rng + ?Sized>(
    spec: &EventModelSpec,
    same_group: bool,
    mc_draws: usize,
    rng: &mut R,
) -> Result<f64> {
    spec.validate()?;
    if mc_draws < MIN_CORRELATION_DRAWS {
        return Err(Error::invalid(format!(
            "prior correlation needs at least {MIN_CORRELATION_DRAWS} draws, got {mc_draws}"
        )));
    }
    let dm = Beta::new(spec.dm_prior.alpha, spec.dm_prior.beta)
        .map_err(|e| Error::invalid(format!("decision-maker prior: {e}")))?;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for _ in 0..mc_draws {
        let n_w = spec.within.draw(rng);
        let n_b = spec.between.draw(rng);
        let p: f64 = dm.sample(rng);
        let g1 = beta_mean_draw(rng, p, n_b);
        let g2 = if same_group { g1 } else { beta_mean_draw(rng, p, n_b) };
        let x = beta_mean_draw(rng, g1, n_w);
        let y = beta_mean_draw(rng, g2, n_w);
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    let n = mc_draws as f64;
    let cov = sxy / n - (sx / n) * (sy / n);
    let vx = sxx / n - (sx / n).powi(2);
    let vy = syy / n - (sy / n).powi(2);
    Ok((cov / (vx * vy).sqrt()).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(expert: &str, group: &str, p: f64) -> EventJudgement {
        EventJudgement {
            expert: expert.into(),
            group: group.into(),
            quantity: "pump".into(),
            round: 1,
            probability: p,
        }
    }

    #[test]
    fn uniform_prior_term_vanishes() {
        // One group at p_g = p = 0.5 with n_B = 2: Beta(1, 1) density is 1.
        assert!(between_term(0.5, 0.5, 2.0).abs() < 1e-14);
        assert!(ln_beta_pdf(0.37, 1.0, 1.0).abs() < 1e-14);
    }

    #[test]
    fn log_posterior_grows_with_concentration() {
        let data = EventData::from_groups(vec![("g".into(), vec![0.3])]).unwrap();
        let spec = EventModelSpec {
            within: SampleSizePrior::Fixed(1.0),
            between: SampleSizePrior::Fixed(1.0),
            ..Default::default()
        };
        let mut last = f64::NEG_INFINITY;
        for n_w in [1.0, 10.0, 100.0, 1e4, 1e6] {
            let st = EventState {
                p: 0.4,
                p_g: vec![0.3],
                n_w,
                n_b: 2.0,
            };
            let lp = event_log_posterior(&st, &data, &spec).unwrap();
            assert!(lp > last);
            last = lp;
        }
    }

    #[test]
    fn log_posterior_rejects_boundary() {
        let data = EventData::from_groups(vec![("g".into(), vec![0.0, 0.3])]).unwrap();
        let st = EventState {
            p: 0.4,
            p_g: vec![0.3],
            n_w: 3.0,
            n_b: 2.0,
        };
        assert!(matches!(
            event_log_posterior(&st, &data, &EventModelSpec::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn zero_scale_leaves_state_unchanged() {
        let data = EventData::from_groups(vec![("a".into(), vec![0.2, 0.3]), ("b".into(), vec![0.6])]).unwrap();
        let spec = EventModelSpec::default();
        let mut st = EventState::initial(&data, &spec);
        let before = st.clone();
        let mut rng = stream(1, 0);
        for _ in 0..50 {
            mwg_update(&mut st, &data, &spec, &ProposalScales::uniform(2, 0.0), &mut rng);
        }
        assert_eq!(st, before);
    }

    #[test]
    fn clamps_boundary_probabilities() {
        let panel = [ev("a", "g", 0.0), ev("b", "g", 1.0), ev("c", "h", 0.5)];
        let (data, summary, warnings) = prepare_events(&panel).unwrap();
        assert_eq!(warnings.len(), 2);
        assert!(data.probs.iter().flatten().all(|&x| in_open_unit(x)));
        assert!((summary.equal_weights - 0.5).abs() < 1e-15);
        assert!(prepare_events(&[ev("a", "g", 1.5)]).is_err());
    }

    #[test]
    fn beta_prior_with_mean() {
        let b = BetaPrior::with_mean(0.05, 2.0).unwrap();
        assert!((b.alpha - 0.1).abs() < 1e-15 && (b.beta - 1.9).abs() < 1e-15);
        assert!((b.mean() - 0.05).abs() < 1e-15);
        assert!(BetaPrior::with_mean(0.0, 2.0).is_err());
    }

    #[test]
    fn correlation_needs_enough_draws() {
        let mut rng = stream(0, 0);
        assert!(prior_correlation(&EventModelSpec::default(), true, 10, &mut rng).is_err());
    }

    #[test]
    fn relabelling_groups_keeps_p_chain() {
        let spec = EventModelSpec {
            warmup: 300,
            kept: 500,
            chains: 2,
            seed: 5,
            ..Default::default()
        };
        let a = [
            ev("1", "x", 0.4),
            ev("2", "x", 0.45),
            ev("3", "y", 0.1),
            ev("4", "y", 0.12),
        ];
        let b = [
            ev("4", "a", 0.12),
            ev("3", "a", 0.1),
            ev("2", "b", 0.4),
            ev("1", "b", 0.45),
        ];
        let ra = reconcile_event(&a, &spec).unwrap();
        let rb = reconcile_event(&b, &spec).unwrap();
        assert_eq!(ra.chain.pooled(PARAM_P), rb.chain.pooled(PARAM_P));
        assert_eq!(ra.probability, rb.probability);
    }
}
