//! Hierarchical Normal reconciliation of quantile triplets.
//!
//! On the standardized scale each expert `i` in group `g` contributes a median
//! `M` and two log-differences `log D₁ = log(M − L)`, `log D₂ = log(U − M)`.
//! Each of the three is modelled by the same two-level Normal hierarchy:
//!
//! ```text
//! y_ig | μ_g, v_g  ~ N(μ_g, v_g)          1/v_g ~ Gamma(a_g, b_g)
//! μ_g  | μ, ṽ      ~ N(μ, ṽ)              1/ṽ   ~ Gamma(ã, b̃)
//! μ                ~ N(m, v̄)
//! ```
//!
//! with `m = log d_k` for the difference blocks. Gamma distributions use the
//! shape/rate convention. All full conditionals are conjugate, so the sampler
//! is plain Gibbs. The reconciled quantiles are `M = μ`, `L = μ − exp(δ₁)` and
//! `U = μ + exp(δ₂)` where `δ_k` is the top-level mean of difference block `k`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::{ChainDraws, PosteriorChain};
use crate::error::{Error, Result};
use crate::judgement::{group_panel, QuantileJudgement};
use crate::rng::stream;
use crate::sll::{solve_sll, SllParams};
use crate::standardize::{back_transform, standardize_judgement, DecisionMakerPrior};

pub const PARAM_MU: &str = "mu";
pub const PARAM_DELTA1: &str = "delta1";
pub const PARAM_DELTA2: &str = "delta2";

/// Floor applied to initial variances.
const INIT_VARIANCE_FLOOR: f64 = 1e-6;

/// Prior on a precision `1/v`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionPrior {
    Gamma {
        shape: f64,
        rate: f64,
    },
    /// Hold the precision at a known value (degenerate test mode).
    Fixed(f64),
}

impl PrecisionPrior {
    fn validate(&self, what: &str) -> Result<()> {
        let ok = match *self {
            PrecisionPrior::Gamma { shape, rate } => shape > 0.0 && rate > 0.0,
            PrecisionPrior::Fixed(p) => p > 0.0 && p.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "{what}: parameters must be positive, got {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ContinuousModelSpec {
    /// Prior mean `m` of the overall standardized median.
    pub median_mean: f64,
    /// Prior variance `v̄` of the overall standardized median.
    pub median_var: f64,
    /// Prior medians `d_k` of the two standardized differences.
    pub difference_median: [f64; 2],
    /// Prior variances `v̄_k` of the overall log-differences.
    pub difference_var: [f64; 2],
    /// Within-group precision prior `(a_g, b_g)`.
    pub within: PrecisionPrior,
    /// Per-group overrides of `within`, keyed by group label.
    pub within_overrides: BTreeMap<String, PrecisionPrior>,
    /// Between-group precision prior `(ã, b̃)`.
    pub between: PrecisionPrior,
    pub warmup: usize,
    pub kept: usize,
    pub chains: usize,
    pub seed: u64,
}

impl Default for ContinuousModelSpec {
    fn default() -> Self {
        Self {
            median_mean: 0.0,
            median_var: 100.0,
            difference_median: [1.0, 1.0],
            difference_var: [100.0, 100.0],
            within: PrecisionPrior::Gamma { shape: 2.0, rate: 2.0 },
            within_overrides: BTreeMap::new(),
            between: PrecisionPrior::Gamma { shape: 2.0, rate: 2.0 },
            warmup: 2000,
            kept: 2000,
            chains: 4,
            seed: 0,
        }
    }
}

pub const MIN_KEPT: usize = 1000;

impl ContinuousModelSpec {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64| v > 0.0 && v.is_finite();
        if !self.median_mean.is_finite() || !pos(self.median_var) {
            return Err(Error::invalid("median prior needs finite mean and positive variance"));
        }
        if !self.difference_median.iter().all(|&d| pos(d)) || !self.difference_var.iter().all(|&v| pos(v)) {
            return Err(Error::invalid("difference priors must be positive"));
        }
        self.within.validate("within-group precision prior")?;
        self.between.validate("between-group precision prior")?;
        for (g, p) in &self.within_overrides {
            p.validate(&format!("within-group precision prior for `{g}`"))?;
        }
        if self.kept < MIN_KEPT {
            return Err(Error::invalid(format!(
                "at least {MIN_KEPT} kept draws per chain required, got {}",
                self.kept
            )));
        }
        if self.chains == 0 {
            return Err(Error::invalid("at least one chain required"));
        }
        Ok(())
    }

    fn block_priors(&self, groups: &[String]) -> [BlockPrior; 3] {
        let within: Vec<PrecisionPrior> = groups
            .iter()
            .map(|g| *self.within_overrides.get(g).unwrap_or(&self.within))
            .collect();
        let block = |mean: f64, var: f64| BlockPrior {
            mean,
            var,
            within: within.clone(),
            between: self.between,
        };
        [
            block(self.median_mean, self.median_var),
            block(self.difference_median[0].ln(), self.difference_var[0]),
            block(self.difference_median[1].ln(), self.difference_var[1]),
        ]
    }
}

#[derive(Debug, Clone)]
struct BlockPrior {
    mean: f64,
    var: f64,
    within: Vec<PrecisionPrior>,
    between: PrecisionPrior,
}

/// State of one two-level Normal hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockState {
    /// Overall mean (`μ` or `δ_k`).
    pub top: f64,
    pub group_means: Vec<f64>,
    pub group_vars: Vec<f64>,
    pub between_var: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousState {
    pub median: BlockState,
    pub log_diff: [BlockState; 2],
}

/// Standardized panel arranged by group.
///
/// Groups are kept in a canonical order determined by their data, and values
/// within a group are sorted, so neither record order nor group labels affect
/// the sampler's arithmetic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupedData {
    pub labels: Vec<String>,
    pub medians: Vec<Vec<f64>>,
    pub log_diffs: [Vec<Vec<f64>>; 2],
}

impl GroupedData {
    /// Build from per-group `(z_median, d1, d2)` rows.
    pub fn from_groups(groups: Vec<(String, Vec<(f64, f64, f64)>)>) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::invalid("no groups"));
        }
        let mut rows: Vec<(String, [Vec<f64>; 3])> = Vec::with_capacity(groups.len());
        for (label, members) in groups {
            if members.is_empty() {
                return Err(Error::invalid(format!("group `{label}` has no experts")));
            }
            let mut cols = [Vec::new(), Vec::new(), Vec::new()];
            for (zm, d1, d2) in members {
                if !(zm.is_finite() && d1 > 0.0 && d2 > 0.0 && d1.is_finite() && d2.is_finite()) {
                    return Err(Error::invalid(format!(
                        "group `{label}`: invalid standardized triplet ({zm}, {d1}, {d2})"
                    )));
                }
                cols[0].push(zm);
                cols[1].push(d1.ln());
                cols[2].push(d2.ln());
            }
            for c in &mut cols {
                c.sort_by(f64::total_cmp);
            }
            rows.push((label, cols));
        }
        rows.sort_by(|a, b| {
            let key = |r: &[Vec<f64>; 3]| r.iter().flatten().copied().collect::<Vec<f64>>();
            let (ka, kb) = (key(&a.1), key(&b.1));
            ka.len()
                .cmp(&kb.len())
                .then_with(|| {
                    ka.iter()
                        .zip(&kb)
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
                .then_with(|| a.0.cmp(&b.0))
        });
        let mut data = GroupedData {
            labels: Vec::new(),
            medians: Vec::new(),
            log_diffs: [Vec::new(), Vec::new()],
        };
        for (label, [m, l1, l2]) in rows {
            data.labels.push(label);
            data.medians.push(m);
            data.log_diffs[0].push(l1);
            data.log_diffs[1].push(l2);
        }
        Ok(data)
    }

    pub fn n_experts(&self) -> usize {
        self.medians.iter().map(Vec::len).sum()
    }

    fn block(&self, b: usize) -> &[Vec<f64>] {
        match b {
            0 => &self.medians,
            k => &self.log_diffs[k - 1],
        }
    }
}

fn block_init(data: &[Vec<f64>], prior: &BlockPrior) -> BlockState {
    let group_means: Vec<f64> = data.iter().map(|g| crate::numeric::mean(g)).collect();
    let group_vars = data
        .iter()
        .zip(&prior.within)
        .map(|(g, p)| match p {
            PrecisionPrior::Fixed(t) => 1.0 / t,
            _ => crate::numeric::variance(g).max(INIT_VARIANCE_FLOOR),
        })
        .collect();
    let between_var = match prior.between {
        PrecisionPrior::Fixed(t) => 1.0 / t,
        _ => crate::numeric::variance(&group_means).max(INIT_VARIANCE_FLOOR),
    };
    BlockState {
        top: crate::numeric::mean(&group_means),
        group_means,
        group_vars,
        between_var,
    }
}

impl ContinuousState {
    /// Start at group sample means and variances, grand mean on top.
    pub fn initial(data: &GroupedData, spec: &ContinuousModelSpec) -> Self {
        let priors = spec.block_priors(&data.labels);
        ContinuousState {
            median: block_init(data.block(0), &priors[0]),
            log_diff: [
                block_init(data.block(1), &priors[1]),
                block_init(data.block(2), &priors[2]),
            ],
        }
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, precision: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    mean + z / precision.sqrt()
}

fn precision_draw<R: Rng + ?Sized>(rng: &mut R, prior: &PrecisionPrior, n: usize, ss: f64) -> f64 {
    match *prior {
        PrecisionPrior::Fixed(t) => t,
        PrecisionPrior::Gamma { shape, rate } => {
            let post_rate = rate + 0.5 * ss;
            // Gamma::new only fails for non-positive parameters, excluded by validation.
            Gamma::new(shape + 0.5 * n as f64, 1.0 / post_rate)
                .expect("valid gamma parameters")
                .sample(rng)
        }
    }
}

fn check(name: &str, value: f64, iteration: usize) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite {
            parameter: name.to_string(),
            iteration,
        })
    }
}

fn block_update<R: Rng + ?Sized>(
    s: &mut BlockState,
    data: &[Vec<f64>],
    prior: &BlockPrior,
    rng: &mut R,
    name: &str,
    iteration: usize,
) -> Result<()> {
    let g_count = data.len();
    // group means
    for g in 0..g_count {
        let ys = &data[g];
        let prec = ys.len() as f64 / s.group_vars[g] + 1.0 / s.between_var;
        let mean = (ys.iter().sum::<f64>() / s.group_vars[g] + s.top / s.between_var) / prec;
        s.group_means[g] = check(&format!("{name}_group[{g}]"), normal(rng, mean, prec), iteration)?;
    }
    // overall mean
    let prec = g_count as f64 / s.between_var + 1.0 / prior.var;
    let mean = (s.group_means.iter().sum::<f64>() / s.between_var + prior.mean / prior.var) / prec;
    s.top = check(name, normal(rng, mean, prec), iteration)?;
    // within-group variances
    for g in 0..g_count {
        let mg = s.group_means[g];
        let ss: f64 = data[g].iter().map(|y| (y - mg) * (y - mg)).sum();
        let tau = precision_draw(rng, &prior.within[g], data[g].len(), ss);
        s.group_vars[g] = check(&format!("{name}_within_var[{g}]"), 1.0 / tau, iteration)?;
    }
    // between-group variance
    let ss: f64 = s.group_means.iter().map(|m| (m - s.top) * (m - s.top)).sum();
    let tau = precision_draw(rng, &prior.between, g_count, ss);
    s.between_var = check(&format!("{name}_between_var"), 1.0 / tau, iteration)?;
    Ok(())
}

/// One full Gibbs sweep: the median block, then both log-difference blocks.
pub fn gibbs_update<R: Rng + ?Sized>(
    state: &mut ContinuousState,
    data: &GroupedData,
    spec: &ContinuousModelSpec,
    rng: &mut R,
    iteration: usize,
) -> Result<()> {
    let priors = spec.block_priors(&data.labels);
    gibbs_sweep(state, data, &priors, rng, iteration)
}

fn gibbs_sweep<R: Rng + ?Sized>(
    state: &mut ContinuousState,
    data: &GroupedData,
    priors: &[BlockPrior; 3],
    rng: &mut R,
    iteration: usize,
) -> Result<()> {
    block_update(&mut state.median, data.block(0), &priors[0], rng, PARAM_MU, iteration)?;
    block_update(
        &mut state.log_diff[0],
        data.block(1),
        &priors[1],
        rng,
        PARAM_DELTA1,
        iteration,
    )?;
    block_update(
        &mut state.log_diff[1],
        data.block(2),
        &priors[2],
        rng,
        PARAM_DELTA2,
        iteration,
    )?;
    Ok(())
}

/// Run `spec.chains` independent chains on already-standardized data.
pub fn sample_standardized(data: &GroupedData, spec: &ContinuousModelSpec) -> Result<PosteriorChain> {
    spec.validate()?;
    let priors = spec.block_priors(&data.labels);
    let chains = (0..spec.chains)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(spec.seed, c as u64);
            let mut state = ContinuousState::initial(data, spec);
            let mut cols: Vec<Vec<f64>> = (0..3).map(|_| Vec::with_capacity(spec.kept)).collect();
            for it in 0..spec.warmup + spec.kept {
                gibbs_sweep(&mut state, data, &priors, &mut rng, it)?;
                if it >= spec.warmup {
                    cols[0].push(state.median.top);
                    cols[1].push(state.log_diff[0].top);
                    cols[2].push(state.log_diff[1].top);
                }
            }
            Ok(ChainDraws { columns: cols })
        })
        .collect::<Result<Vec<_>>>()?;
    let names = [PARAM_MU, PARAM_DELTA1, PARAM_DELTA2];
    PosteriorChain::new(
        names.iter().map(|s| s.to_string()).collect(),
        chains,
        spec.seed,
        spec.warmup,
        &names,
    )
}

#[derive(Debug, Clone)]
pub struct ContinuousRun {
    pub chain: PosteriorChain,
    pub data: GroupedData,
    pub warnings: Vec<String>,
}

/// Standardize a single-quantity panel and sample the reconciled quantiles.
pub fn run_continuous(
    panel: &[QuantileJudgement],
    prior: &DecisionMakerPrior,
    spec: &ContinuousModelSpec,
) -> Result<ContinuousRun> {
    if panel.len() < 2 {
        return Err(Error::invalid(format!(
            "reconciliation needs at least two experts, got {}",
            panel.len()
        )));
    }
    if let Some(q) = panel.iter().find(|j| j.quantity != panel[0].quantity) {
        return Err(Error::invalid(format!(
            "panel mixes quantities `{}` and `{}`",
            panel[0].quantity, q.quantity
        )));
    }
    prior.validate()?;
    let mut warnings = Vec::new();
    let mut groups = Vec::new();
    for (label, members) in group_panel(panel)? {
        let mut rows = Vec::with_capacity(members.len());
        for j in &members {
            let (s, w) = standardize_judgement(prior, j)?;
            warnings.extend(w);
            rows.push((s.z_median, s.d1, s.d2));
        }
        groups.push((label, rows));
    }
    let data = GroupedData::from_groups(groups)?;
    let chain = sample_standardized(&data, spec)?;
    if !chain.converged {
        warnings.push("split R-hat above 1.05 on a reported parameter".to_string());
    }
    Ok(ContinuousRun { chain, data, warnings })
}

/// Standardized `(L, M, U)` for every kept draw.
pub fn reconciled_quantiles(chain: &PosteriorChain) -> Result<Vec<[f64; 3]>> {
    let col = |n: &str| {
        chain
            .pooled(n)
            .ok_or_else(|| Error::invalid(format!("chain has no `{n}` column")))
    };
    let (mu, d1, d2) = (col(PARAM_MU)?, col(PARAM_DELTA1)?, col(PARAM_DELTA2)?);
    Ok(mu
        .iter()
        .zip(&d1)
        .zip(&d2)
        .map(|((&m, &a), &b)| [m - a.exp(), m, m + b.exp()])
        .collect())
}

/// Per-draw SLL parameters on the original scale.
pub fn reconciled_params(chain: &PosteriorChain, prior: &DecisionMakerPrior, p_low: f64) -> Result<Vec<SllParams>> {
    reconciled_quantiles(chain)?
        .iter()
        .map(|[l, m, u]| solve_sll(&back_transform(prior, *l, *m, *u, p_low)?))
        .collect()
}

/// Per-draw SLL parameters on the standardized scale (no back-transform).
pub fn reconciled_params_standardized(chain: &PosteriorChain, p_low: f64) -> Result<Vec<SllParams>> {
    reconciled_quantiles(chain)?
        .iter()
        .map(|[l, m, u]| solve_sll(&crate::sll::QuantileTriplet::new(*l, *m, *u, p_low)?))
        .collect()
}

/// Uniform variate on the open interval (0, 1).
pub fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

/// One θ per kept draw from the posterior-predictive mixture.
pub fn sample_theta<R: Rng + ?Sized>(
    chain: &PosteriorChain,
    prior: &DecisionMakerPrior,
    p_low: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(p_low > 0.0 && p_low < 0.5) {
        return Err(Error::domain(format!("p_low must lie in (0, 0.5), got {p_low}")));
    }
    reconciled_params(chain, prior, p_low)?
        .iter()
        .map(|p| p.sample(open_unit(rng)))
        .collect()
}

/// `Pr(X = 1) = E[θ]` for a proportion reconciled as a continuous quantity.
pub fn proportion_event_probability(theta: &[f64]) -> Result<f64> {
    if theta.is_empty() {
        return Err(Error::invalid("no θ samples"));
    }
    if let Some(bad) = theta.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(Error::domain(format!(
            "θ sample {bad} lies outside [0, 1]; set the decision-maker range within [0, 1]"
        )));
    }
    Ok(crate::numeric::mean(theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sll::QuantileTriplet;

    fn chain_from(rows: &[[f64; 3]]) -> PosteriorChain {
        let cols = (0..3).map(|k| rows.iter().map(|r| r[k]).collect()).collect();
        PosteriorChain::new(
            vec![PARAM_MU.into(), PARAM_DELTA1.into(), PARAM_DELTA2.into()],
            vec![ChainDraws { columns: cols }],
            0,
            0,
            &[],
        )
        .unwrap()
    }

    fn qj(expert: &str, group: &str, t: (f64, f64, f64)) -> QuantileJudgement {
        QuantileJudgement {
            expert: expert.into(),
            group: group.into(),
            quantity: "q".into(),
            round: 1,
            triplet: QuantileTriplet::new(t.0, t.1, t.2, 0.05).unwrap(),
            plausible_low: None,
            plausible_high: None,
        }
    }

    fn quick_spec(seed: u64) -> ContinuousModelSpec {
        ContinuousModelSpec {
            warmup: 500,
            kept: 1000,
            chains: 2,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn reconciled_quantile_examples() {
        let q = reconciled_quantiles(&chain_from(&[[0.0, 0.0, 0.0], [2.0, 0.0, 2f64.ln()]])).unwrap();
        assert_eq!(q[0], [-1.0, 0.0, 1.0]);
        assert_eq!(q[1][0], 1.0);
        assert_eq!(q[1][1], 2.0);
        assert!((q[1][2] - 4.0).abs() < 1e-15);
    }

    #[test]
    fn proportion_examples() {
        assert!((proportion_event_probability(&[0.3; 10]).unwrap() - 0.3).abs() < 1e-15);
        let mix: Vec<f64> = (0..10).map(|i| if i % 2 == 0 { 0.2 } else { 0.6 }).collect();
        assert!((proportion_event_probability(&mix).unwrap() - 0.4).abs() < 1e-15);
        let mut rng = stream(3, 0);
        let u: Vec<f64> = (0..200_000).map(|_| open_unit(&mut rng)).collect();
        assert!((proportion_event_probability(&u).unwrap() - 0.5).abs() < 0.005);
        assert!(matches!(
            proportion_event_probability(&[0.2, 1.2]),
            Err(Error::Domain(m)) if m.contains("[0, 1]")
        ));
    }

    #[test]
    fn sample_theta_rejects_half() {
        let chain = chain_from(&[[0.0, 0.0, 0.0]; 4]);
        let prior = DecisionMakerPrior::uniform(0.0, 10.0).unwrap();
        let mut rng = stream(1, 0);
        assert!(matches!(
            sample_theta(&chain, &prior, 0.5, &mut rng),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn run_rejects_small_or_bad_panels() {
        let prior = DecisionMakerPrior::uniform(0.0, 10.0).unwrap();
        let one = [qj("a", "g", (1.0, 2.0, 3.0))];
        assert!(run_continuous(&one, &prior, &quick_spec(1)).is_err());
        let empty_group = [qj("a", "g", (1.0, 2.0, 3.0)), qj("b", "", (1.0, 2.0, 3.0))];
        assert!(run_continuous(&empty_group, &prior, &quick_spec(1)).is_err());
        assert!(GroupedData::from_groups(vec![("g".into(), vec![])]).is_err());
    }

    #[test]
    fn spec_validation() {
        let mut s = ContinuousModelSpec::default();
        assert!(s.validate().is_ok());
        s.kept = 999;
        assert!(s.validate().is_err());
        let s = ContinuousModelSpec {
            between: PrecisionPrior::Gamma { shape: 0.0, rate: 1.0 },
            ..Default::default()
        };
        assert!(s.validate().is_err());
    }

    #[test]
    fn deterministic_by_seed() {
        let prior = DecisionMakerPrior::uniform(0.0, 10.0).unwrap();
        let panel = [
            qj("a", "g1", (1.0, 2.0, 4.0)),
            qj("b", "g1", (2.0, 3.0, 5.0)),
            qj("c", "g2", (3.0, 5.0, 6.0)),
        ];
        let a = run_continuous(&panel, &prior, &quick_spec(9)).unwrap();
        let b = run_continuous(&panel, &prior, &quick_spec(9)).unwrap();
        assert_eq!(a.chain, b.chain);
        let c = run_continuous(&panel, &prior, &quick_spec(10)).unwrap();
        assert_ne!(a.chain.chains, c.chain.chains);
    }

    #[test]
    fn permutation_and_relabel_invariance() {
        let prior = DecisionMakerPrior::uniform(0.0, 10.0).unwrap();
        let panel = vec![
            qj("a", "g1", (1.0, 2.0, 4.0)),
            qj("b", "g1", (2.0, 3.0, 5.0)),
            qj("c", "g2", (3.0, 5.0, 6.0)),
            qj("d", "g2", (2.5, 4.0, 7.0)),
        ];
        let base = run_continuous(&panel, &prior, &quick_spec(4)).unwrap();

        // swap which expert holds which triplet within g1
        let mut swapped = panel.clone();
        let t = swapped[0].triplet;
        swapped[0].triplet = swapped[1].triplet;
        swapped[1].triplet = t;
        swapped.reverse();
        let s = run_continuous(&swapped, &prior, &quick_spec(4)).unwrap();
        assert_eq!(base.chain.chains, s.chain.chains);

        // rename g1 -> zz, which changes lexical order of groups
        let renamed: Vec<_> = panel
            .iter()
            .cloned()
            .map(|mut j| {
                if j.group == "g1" {
                    j.group = "zz".into();
                }
                j
            })
            .collect();
        let r = run_continuous(&renamed, &prior, &quick_spec(4)).unwrap();
        assert_eq!(base.chain.chains, r.chain.chains);
    }
}
