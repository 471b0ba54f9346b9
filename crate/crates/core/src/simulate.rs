//! Synthetic panels and recovery studies.
//!
//! Generators run the two hierarchies forwards. The calibration studies draw
//! a fresh truth from the inference prior in every replication, so a correct
//! sampler yields uniform ranks and nominal predictive coverage. Continuous
//! recovery works on the standardized scale, which keeps the decision-maker
//! back-transform out of the check.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::continuous::{
    open_unit, reconciled_params_standardized, sample_standardized, ContinuousModelSpec, GroupedData, PrecisionPrior,
    PARAM_MU,
};
use crate::error::{Error, Result};
use crate::events::{beta_mean_draw, sample_events, EventData, EventModelSpec, SampleSizePrior, PARAM_P};
use crate::judgement::{EventJudgement, QuantileJudgement};
use crate::numeric::quantiles;
use crate::rng::{derive_seed, stream};
use crate::sll::{solve_sll, QuantileTriplet};
use crate::standardize::{back_transform, DecisionMakerPrior};

/// Fixed generating values for the continuous hierarchy, one entry per block
/// (median, log-difference 1, log-difference 2).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuousTruth {
    pub top: [f64; 3],
    pub between_var: [f64; 3],
    pub within_var: [f64; 3],
    pub p_low: f64,
    /// Decision-maker prior used to map generated triplets to the original scale.
    pub dm_prior: DecisionMakerPrior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventTruth {
    pub p: f64,
    pub n_w: f64,
    pub n_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScenarioTruth {
    Continuous(ContinuousTruth),
    Event(EventTruth),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelScenario {
    /// Number of experts in each group.
    pub groups: Vec<usize>,
    pub truth: ScenarioTruth,
    /// Number of quantities (or events) to generate.
    pub quantities: usize,
    pub seed: u64,
}

impl PanelScenario {
    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() || self.groups.contains(&0) {
            return Err(Error::invalid("every group needs at least one expert"));
        }
        if self.quantities == 0 {
            return Err(Error::invalid("scenario needs at least one quantity"));
        }
        Ok(())
    }

    fn members(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let mut e = 0;
        for (g, &size) in self.groups.iter().enumerate() {
            for _ in 0..size {
                e += 1;
                out.push((format!("e{e:02}"), format!("g{}", g + 1)));
            }
        }
        out
    }
}

fn normal_draw<R: Rng + ?Sized>(rng: &mut R, mean: f64, var: f64) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    mean + var.sqrt() * z
}

/// Per-group, per-expert standardized values for one block.
fn block_values<R: Rng + ?Sized>(
    rng: &mut R,
    groups: &[usize],
    top: f64,
    between: f64,
    within: &[f64],
) -> Vec<Vec<f64>> {
    groups
        .iter()
        .enumerate()
        .map(|(g, &size)| {
            let mg = normal_draw(rng, top, between);
            (0..size).map(|_| normal_draw(rng, mg, within[g])).collect()
        })
        .collect()
}

/// Run the continuous hierarchy forwards and map triplets to the original scale.
pub fn generate_continuous_panel<R: Rng + ?Sized>(
    scenario: &PanelScenario,
    rng: &mut R,
) -> Result<Vec<QuantileJudgement>> {
    scenario.validate()?;
    let ScenarioTruth::Continuous(truth) = &scenario.truth else {
        return Err(Error::invalid("scenario truth is not continuous"));
    };
    let members = scenario.members();
    let mut out = Vec::new();
    for j in 0..scenario.quantities {
        let blocks: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|b| {
                let within = vec![truth.within_var[b]; scenario.groups.len()];
                block_values(rng, &scenario.groups, truth.top[b], truth.between_var[b], &within)
            })
            .collect();
        let flat = |b: usize| blocks[b].iter().flatten().copied().collect::<Vec<f64>>();
        let (zm, l1, l2) = (flat(0), flat(1), flat(2));
        for (i, (expert, group)) in members.iter().enumerate() {
            let triplet = back_transform(
                &truth.dm_prior,
                zm[i] - l1[i].exp(),
                zm[i],
                zm[i] + l2[i].exp(),
                truth.p_low,
            )?;
            out.push(QuantileJudgement {
                expert: expert.clone(),
                group: group.clone(),
                quantity: format!("q{}", j + 1),
                round: 1,
                triplet,
                plausible_low: None,
                plausible_high: None,
            });
        }
    }
    Ok(out)
}

/// Run the event hierarchy forwards at the scenario's truth.
pub fn generate_event_panel<R: Rng + ?Sized>(scenario: &PanelScenario, rng: &mut R) -> Result<Vec<EventJudgement>> {
    scenario.validate()?;
    let ScenarioTruth::Event(truth) = &scenario.truth else {
        return Err(Error::invalid("scenario truth is not an event"));
    };
    if !(truth.p > 0.0 && truth.p < 1.0 && truth.n_w > 0.0 && truth.n_b > 0.0) {
        return Err(Error::invalid(format!("invalid event truth {truth:?}")));
    }
    let members = scenario.members();
    let mut out = Vec::new();
    for j in 0..scenario.quantities {
        let p_g: Vec<f64> = (0..scenario.groups.len())
            .map(|_| beta_mean_draw(rng, truth.p, truth.n_b))
            .collect();
        for (expert, group) in &members {
            let g: usize = group[1..].parse::<usize>().expect("generated label") - 1;
            out.push(EventJudgement {
                expert: expert.clone(),
                group: group.clone(),
                quantity: format!("event{}", j + 1),
                round: 1,
                probability: beta_mean_draw(rng, p_g[g], truth.n_w),
            });
        }
    }
    Ok(out)
}

fn precision_prior_draw<R: Rng + ?Sized>(rng: &mut R, prior: &PrecisionPrior) -> f64 {
    match *prior {
        PrecisionPrior::Fixed(t) => 1.0 / t,
        PrecisionPrior::Gamma { shape, rate } => {
            let tau: f64 = rand_distr::Gamma::new(shape, 1.0 / rate)
                .expect("validated gamma parameters")
                .sample(rng);
            1.0 / tau
        }
    }
}

/// Truth for the three top-level means, drawn from the model prior, with
/// the standardized data it generates.
pub fn draw_standardized_from_prior<R: Rng + ?Sized>(
    groups: &[usize],
    spec: &ContinuousModelSpec,
    rng: &mut R,
) -> Result<([f64; 3], GroupedData)> {
    spec.validate()?;
    let tops = [
        (spec.median_mean, spec.median_var),
        (spec.difference_median[0].ln(), spec.difference_var[0]),
        (spec.difference_median[1].ln(), spec.difference_var[1]),
    ];
    let mut truth = [0.0; 3];
    let mut values = Vec::with_capacity(3);
    for (b, (m, v)) in tops.iter().enumerate() {
        truth[b] = normal_draw(rng, *m, *v);
        let between = precision_prior_draw(rng, &spec.between);
        let within: Vec<f64> = (0..groups.len())
            .map(|g| {
                let label = format!("g{}", g + 1);
                let prior = spec.within_overrides.get(&label).unwrap_or(&spec.within);
                precision_prior_draw(rng, prior)
            })
            .collect();
        values.push(block_values(rng, groups, truth[b], between, &within));
    }
    let rows = (0..groups.len())
        .map(|g| {
            let members = (0..groups[g])
                .map(|i| (values[0][g][i], values[1][g][i].exp(), values[2][g][i].exp()))
                .collect();
            (format!("g{}", g + 1), members)
        })
        .collect();
    Ok((truth, GroupedData::from_groups(rows)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationScenario {
    pub groups: Vec<usize>,
    /// Generating prior, also used for inference.
    pub spec: ContinuousModelSpec,
    pub p_low: f64,
    /// Posterior draws (after thinning) the truth is ranked among.
    pub rank_draws: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoverageReport {
    pub level: f64,
    pub coverage: f64,
    /// Rank of the true median parameter among thinned posterior draws.
    pub ranks: Vec<usize>,
    pub rank_draws: usize,
    pub rank_pvalue: f64,
}

/// χ² goodness of fit of ranks in `0..=draws` against uniform over `bins`.
pub fn rank_uniformity_pvalue(ranks: &[usize], draws: usize, bins: usize) -> f64 {
    let mut counts = vec![0usize; bins];
    let outcomes = draws + 1;
    for &r in ranks {
        counts[(r * bins / outcomes).min(bins - 1)] += 1;
    }
    // bins need not hold equally many outcomes
    let n = ranks.len() as f64;
    let mut stat = 0.0;
    for (b, &c) in counts.iter().enumerate() {
        let lo = (b * outcomes).div_ceil(bins);
        let hi = ((b + 1) * outcomes).div_ceil(bins);
        let expected = n * (hi - lo) as f64 / outcomes as f64;
        stat += (c as f64 - expected).powi(2) / expected;
    }
    let chi = ChiSquared::new((bins - 1) as f64).expect("positive dof");
    1.0 - chi.cdf(stat)
}

fn thinned(xs: &[f64], count: usize) -> Vec<f64> {
    let step = xs.len() as f64 / count as f64;
    (0..count).map(|i| xs[(i as f64 * step) as usize]).collect()
}

/// Predictive coverage of the central `level` interval plus median-parameter
/// ranks over `replications` truths drawn from the prior.
pub fn coverage_study(
    scenario: &CalibrationScenario,
    replications: usize,
    level: f64,
    seed: u64,
) -> Result<CoverageReport> {
    if replications < 200 {
        return Err(Error::invalid(format!(
            "coverage study needs at least 200 replications, got {replications}"
        )));
    }
    if !(level > 0.0 && level <= 1.0) {
        return Err(Error::domain(format!("coverage level must lie in (0, 1], got {level}")));
    }
    if scenario.groups.is_empty() || scenario.groups.contains(&0) || scenario.rank_draws == 0 {
        return Err(Error::invalid("invalid calibration scenario"));
    }
    let results = (0..replications)
        .into_par_iter()
        .map(|r| {
            let rep_seed = derive_seed(seed, r as u64);
            let mut rng = stream(rep_seed, u64::MAX);
            let (truth, data) = draw_standardized_from_prior(&scenario.groups, &scenario.spec, &mut rng)?;
            let true_triplet = QuantileTriplet::new(
                truth[0] - truth[1].exp(),
                truth[0],
                truth[0] + truth[2].exp(),
                scenario.p_low,
            )?;
            let theta_true = solve_sll(&true_triplet)?.sample(open_unit(&mut rng))?;

            let spec = ContinuousModelSpec {
                seed: rep_seed,
                ..scenario.spec.clone()
            };
            let chain = sample_standardized(&data, &spec)?;
            let draws = reconciled_params_standardized(&chain, scenario.p_low)?;
            let theta: Vec<f64> = draws
                .iter()
                .map(|p| p.sample(open_unit(&mut rng)))
                .collect::<Result<_>>()?;
            let covered = if level >= 1.0 {
                true
            } else {
                let q = quantiles(&theta, &[(1.0 - level) / 2.0, (1.0 + level) / 2.0]);
                theta_true >= q[0] && theta_true <= q[1]
            };
            let mu = chain.pooled(PARAM_MU).expect("mu column");
            let rank = thinned(&mu, scenario.rank_draws)
                .iter()
                .filter(|&&m| m < truth[0])
                .count();
            Ok((covered, rank))
        })
        .collect::<Result<Vec<_>>>()?;
    let coverage = results.iter().filter(|r| r.0).count() as f64 / replications as f64;
    let ranks: Vec<usize> = results.iter().map(|r| r.1).collect();
    Ok(CoverageReport {
        level,
        coverage,
        rank_pvalue: rank_uniformity_pvalue(&ranks, scenario.rank_draws, 20),
        ranks,
        rank_draws: scenario.rank_draws,
    })
}

/// Ranks of the true `p` among thinned posterior draws, with truths drawn
/// from the event model's prior.
pub fn event_rank_study(
    groups: &[usize],
    spec: &EventModelSpec,
    replications: usize,
    rank_draws: usize,
    seed: u64,
) -> Result<(Vec<usize>, f64)> {
    spec.validate()?;
    if groups.is_empty() || groups.contains(&0) {
        return Err(Error::invalid("every group needs at least one expert"));
    }
    let draw = |prior: &SampleSizePrior, rng: &mut crate::rng::StreamRng| match *prior {
        SampleSizePrior::Fixed(n) => n,
        SampleSizePrior::Gamma { shape, rate } => rand_distr::Gamma::new(shape, 1.0 / rate)
            .expect("validated")
            .sample(rng),
    };
    let ranks = (0..replications)
        .into_par_iter()
        .map(|r| {
            let rep_seed = derive_seed(seed, r as u64);
            let mut rng = stream(rep_seed, u64::MAX);
            let n_w = draw(&spec.within, &mut rng);
            let n_b = draw(&spec.between, &mut rng);
            let p: f64 = rand_distr::Beta::new(spec.dm_prior.alpha, spec.dm_prior.beta)
                .map_err(|e| Error::invalid(e.to_string()))?
                .sample(&mut rng);
            let rows = groups
                .iter()
                .enumerate()
                .map(|(g, &size)| {
                    let pg = beta_mean_draw(&mut rng, p, n_b);
                    let probs = (0..size)
                        .map(|_| {
                            beta_mean_draw(&mut rng, pg, n_w)
                                .clamp(crate::events::PROBABILITY_CLAMP, 1.0 - crate::events::PROBABILITY_CLAMP)
                        })
                        .collect();
                    (format!("g{}", g + 1), probs)
                })
                .collect();
            let data = EventData::from_groups(rows)?;
            let (chain, _) = sample_events(
                &data,
                &EventModelSpec {
                    seed: rep_seed,
                    ..spec.clone()
                },
            )?;
            let ps = chain.pooled(PARAM_P).expect("p column");
            Ok(thinned(&ps, rank_draws).iter().filter(|&&x| x < p).count())
        })
        .collect::<Result<Vec<usize>>>()?;
    let pvalue = rank_uniformity_pvalue(&ranks, rank_draws, 20);
    Ok((ranks, pvalue))
}
