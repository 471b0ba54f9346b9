//! Subcommand implementations. Each returns a [`Report`] for stdout; artifacts
//! go to the configured output directory.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use reconcile_core::continuous::{
    proportion_event_probability, reconciled_params, reconciled_quantiles, run_continuous, sample_theta, ContinuousRun,
};
use reconcile_core::delphi::{parse_round_csv, StopDecision, Study, StudyMeta, TypedPanel};
use reconcile_core::diagnostics::ParamDiagnostics;
use reconcile_core::evaluate::{avg_log_score, calibration_curve, fit_expert, Density, ScoredForecaster, SllMixture};
use reconcile_core::events::{
    prior_correlation, reconcile_event, sensitivity_curve, EventModelSpec, EventRun, SampleSizePrior, SENSITIVITY_RATE,
};
use reconcile_core::numeric::{quantile_sorted, quantiles};
use reconcile_core::rng::{derive_seed, stream};
use reconcile_core::standardize::{back_transform, dm_range_from_panel, DecisionMakerPrior};
use reconcile_core::{PosteriorChain, QuantileJudgement, SllParams};

use crate::config::{ModelKind, RangeConfig, RunConfig};
use crate::output::{num, to_json, write, Header, Table};
use crate::panel::{load_panels, load_realizations};

pub const POSTERIOR_FILE: &str = "posterior.csv";
pub const RECONCILED_FILE: &str = "reconciled.json";
pub const THETA_FILE: &str = "theta_samples.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const CALIBRATION_FILE: &str = "calibration.csv";
pub const INTERVALS_FILE: &str = "intervals.csv";
pub const SENSITIVITY_FILE: &str = "sensitivity.csv";
pub const CORRELATION_FILE: &str = "prior_correlation.csv";

/// Probabilities of the central 90% interval and median.
const INTERVAL_PROBS: [f64; 3] = [0.05, 0.5, 0.95];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Artifacts written but at least one monitored R̂ exceeded the threshold.
    NonConverged,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::NonConverged => 2,
        }
    }

    fn from_converged(ok: bool) -> Self {
        if ok {
            Outcome::Success
        } else {
            Outcome::NonConverged
        }
    }
}

/// What a command prints, in both output formats.
#[derive(Debug, Clone)]
pub struct Report {
    pub outcome: Outcome,
    pub csv: String,
    pub json: serde_json::Value,
}

#[derive(Debug, Clone, Serialize)]
pub struct IntervalSummary {
    pub low: f64,
    pub median: f64,
    pub high: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum QuantitySummary {
    Continuous {
        id: String,
        experts: usize,
        groups: Vec<String>,
        p_low: f64,
        dm_range: [f64; 2],
        /// θ quantiles at `p_low`, 0.5 and `1 - p_low`.
        reconciled: IntervalSummary,
        /// Back-transformed elementwise posterior median of the standardized triplet.
        triplet_posterior_median: IntervalSummary,
        #[serde(skip_serializing_if = "Option::is_none")]
        event_probability: Option<f64>,
        diagnostics: Vec<ParamDiagnostics>,
        converged: bool,
        warnings: Vec<String>,
    },
    Event {
        id: String,
        experts: usize,
        probability: f64,
        equal_weights: f64,
        group_means: BTreeMap<String, f64>,
        acceptance: BTreeMap<String, f64>,
        diagnostics: Vec<ParamDiagnostics>,
        converged: bool,
        warnings: Vec<String>,
    },
}

impl QuantitySummary {
    pub fn id(&self) -> &str {
        match self {
            QuantitySummary::Continuous { id, .. } | QuantitySummary::Event { id, .. } => id,
        }
    }

    pub fn converged(&self) -> bool {
        match self {
            QuantitySummary::Continuous { converged, .. } | QuantitySummary::Event { converged, .. } => *converged,
        }
    }
}

pub struct ContinuousResult {
    pub run: ContinuousRun,
    pub prior: DecisionMakerPrior,
    pub p_low: f64,
    pub theta: Vec<f64>,
    pub panel: Vec<QuantileJudgement>,
}

pub enum QuantityResult {
    Continuous(Box<ContinuousResult>),
    Event(Box<EventRun>),
}

impl QuantityResult {
    fn chain(&self) -> &PosteriorChain {
        match self {
            QuantityResult::Continuous(c) => &c.run.chain,
            QuantityResult::Event(e) => &e.chain,
        }
    }
}

pub struct Reconciliation {
    pub header: Header,
    pub results: BTreeMap<String, QuantityResult>,
    pub summaries: Vec<QuantitySummary>,
}

impl Reconciliation {
    pub fn converged(&self) -> bool {
        self.summaries.iter().all(QuantitySummary::converged)
    }
}

fn header_for(cfg: &RunConfig) -> Result<Header> {
    Ok(Header::new(cfg.seed()?, cfg.hash()))
}

fn common_p_low(panel: &[QuantileJudgement]) -> Result<f64> {
    let p = panel[0].triplet.p_low;
    if let Some(j) = panel.iter().find(|j| j.triplet.p_low != p) {
        bail!(
            "quantity `{}`: experts use different lower probabilities ({} and {})",
            j.quantity,
            p,
            j.triplet.p_low
        );
    }
    Ok(p)
}

fn prior_for(cfg: &RunConfig, quantity: &str, panel: &[QuantileJudgement]) -> Result<DecisionMakerPrior> {
    let range = cfg.range_for(quantity);
    Ok(match (range.fixed_prior()?, range) {
        (Some(p), _) => p,
        (None, RangeConfig::FromPanel { padding }) => dm_range_from_panel(panel, padding)?,
        (None, _) => unreachable!("only from-panel ranges are deferred"),
    })
}

fn reconcile_continuous(cfg: &RunConfig, id: &str, seed: u64, panel: &[QuantileJudgement]) -> Result<ContinuousResult> {
    let p_low = common_p_low(panel)?;
    let prior = prior_for(cfg, id, panel)?;
    let spec = reconcile_core::continuous::ContinuousModelSpec {
        seed,
        ..cfg.continuous.clone()
    };
    let run = run_continuous(panel, &prior, &spec).with_context(|| format!("quantity `{id}`"))?;
    let theta = sample_theta(&run.chain, &prior, p_low, &mut stream(seed, u64::MAX))
        .with_context(|| format!("quantity `{id}`"))?;
    Ok(ContinuousResult {
        run,
        prior,
        p_low,
        theta,
        panel: panel.to_vec(),
    })
}

fn continuous_summary(id: &str, c: &ContinuousResult, proportion: bool) -> Result<QuantitySummary> {
    let q = quantiles(&c.theta, &[c.p_low, 0.5, 1.0 - c.p_low]);
    let draws = reconciled_quantiles(&c.run.chain)?;
    let column = |k: usize| {
        let mut xs: Vec<f64> = draws.iter().map(|d| d[k]).collect();
        xs.sort_by(f64::total_cmp);
        quantile_sorted(&xs, 0.5)
    };
    let t = back_transform(&c.prior, column(0), column(1), column(2), c.p_low)?;
    let (lo, hi) = c.prior.range();
    let mut warnings = c.run.warnings.clone();
    let event_probability = if proportion {
        match proportion_event_probability(&c.theta) {
            Ok(p) => Some(p),
            Err(e) => {
                warnings.push(e.to_string());
                None
            }
        }
    } else {
        None
    };
    Ok(QuantitySummary::Continuous {
        id: id.to_string(),
        experts: c.panel.len(),
        groups: c.run.data.labels.clone(),
        p_low: c.p_low,
        dm_range: [lo, hi],
        reconciled: IntervalSummary {
            low: q[0],
            median: q[1],
            high: q[2],
        },
        triplet_posterior_median: IntervalSummary {
            low: t.low,
            median: t.median,
            high: t.high,
        },
        event_probability,
        diagnostics: c.run.chain.diagnostics.clone(),
        converged: c.run.chain.converged,
        warnings,
    })
}

fn event_summary(id: &str, r: &EventRun) -> QuantitySummary {
    QuantitySummary::Event {
        id: id.to_string(),
        experts: r.data.n_experts(),
        probability: r.probability,
        equal_weights: r.summary.equal_weights,
        group_means: r.summary.group_means.iter().cloned().collect(),
        acceptance: r
            .chain
            .names
            .iter()
            .cloned()
            .zip(r.acceptance.iter().copied())
            .collect(),
        diagnostics: r.chain.diagnostics.clone(),
        converged: r.chain.converged,
        warnings: r.warnings.clone(),
    }
}

/// Run every quantity. Quantity `i` (in id order) uses seed `derive_seed(seed, i)`.
pub fn reconcile_panels(cfg: &RunConfig, panels: &BTreeMap<String, TypedPanel>) -> Result<Reconciliation> {
    let header = header_for(cfg)?;
    let proportion = cfg.model == ModelKind::Proportion;
    let mut results = BTreeMap::new();
    let mut summaries = Vec::new();
    for (i, (id, panel)) in panels.iter().enumerate() {
        let seed = derive_seed(header.seed, i as u64);
        let result = match panel {
            TypedPanel::Continuous(p) => {
                let c = reconcile_continuous(cfg, id, seed, p)?;
                summaries.push(continuous_summary(id, &c, proportion)?);
                QuantityResult::Continuous(Box::new(c))
            }
            TypedPanel::Event(p) => {
                let spec = EventModelSpec {
                    seed,
                    ..cfg.event.clone()
                };
                let r = reconcile_event(p, &spec).with_context(|| format!("event `{id}`"))?;
                summaries.push(event_summary(id, &r));
                QuantityResult::Event(Box::new(r))
            }
        };
        results.insert(id.clone(), result);
    }
    Ok(Reconciliation {
        header,
        results,
        summaries,
    })
}

#[derive(Serialize)]
struct ReconciledBody<'a> {
    converged: bool,
    quantities: &'a [QuantitySummary],
}

/// `posterior.csv`, `reconciled.json` and, with continuous quantities, `theta_samples.csv`.
pub fn write_reconcile_artifacts(dir: &Path, rec: &Reconciliation) -> Result<()> {
    let mut posterior = Table::new(&["quantity_id", "chain", "iteration", "parameter", "value"]);
    let mut theta = Table::new(&["quantity_id", "chain", "iteration", "theta"]);
    for (id, result) in &rec.results {
        let chain = result.chain();
        for (c, draws) in chain.chains.iter().enumerate() {
            let kept = draws.columns.first().map_or(0, Vec::len);
            for it in 0..kept {
                for (name, col) in chain.names.iter().zip(&draws.columns) {
                    posterior.push(vec![
                        id.clone(),
                        (c + 1).to_string(),
                        (it + 1).to_string(),
                        name.clone(),
                        num(col[it]),
                    ]);
                }
            }
        }
        if let QuantityResult::Continuous(cr) = result {
            // θ draws follow the pooled (chain-major) order of the posterior
            let kept = chain.len() / chain.chains.len();
            for (k, t) in cr.theta.iter().enumerate() {
                theta.push(vec![
                    id.clone(),
                    (k / kept + 1).to_string(),
                    (k % kept + 1).to_string(),
                    num(*t),
                ]);
            }
        }
    }
    write(dir, POSTERIOR_FILE, &posterior.to_csv(&rec.header)?)?;
    let body = ReconciledBody {
        converged: rec.converged(),
        quantities: &rec.summaries,
    };
    write(dir, RECONCILED_FILE, &to_json(&rec.header, &body)?)?;
    if !theta.is_empty() {
        write(dir, THETA_FILE, &theta.to_csv(&rec.header)?)?;
    }
    Ok(())
}

fn reconcile_report(rec: &Reconciliation) -> Result<Report> {
    let mut t = Table::new(&[
        "quantity_id",
        "kind",
        "low",
        "median",
        "high",
        "probability",
        "converged",
    ]);
    for s in &rec.summaries {
        match s {
            QuantitySummary::Continuous {
                id,
                reconciled,
                event_probability,
                converged,
                ..
            } => t.push(vec![
                id.clone(),
                "continuous".into(),
                num(reconciled.low),
                num(reconciled.median),
                num(reconciled.high),
                event_probability.map(num).unwrap_or_default(),
                converged.to_string(),
            ]),
            QuantitySummary::Event {
                id,
                probability,
                converged,
                ..
            } => t.push(vec![
                id.clone(),
                "event".into(),
                String::new(),
                String::new(),
                String::new(),
                num(*probability),
                converged.to_string(),
            ]),
        }
    }
    Ok(Report {
        outcome: Outcome::from_converged(rec.converged()),
        csv: String::from_utf8(t.to_csv(&rec.header)?)?,
        json: serde_json::to_value(ReconciledBody {
            converged: rec.converged(),
            quantities: &rec.summaries,
        })?,
    })
}

/// Reconcile every quantity in the panel file and write the run artifacts.
pub fn cmd_reconcile(cfg: &RunConfig) -> Result<Report> {
    cfg.seed()?;
    let panels = load_panels(&cfg.panel_path()?, cfg.model, &cfg.groups)?;
    let rec = reconcile_panels(cfg, &panels)?;
    write_reconcile_artifacts(&cfg.out_dir(), &rec)?;
    reconcile_report(&rec)
}

/// Inverse CDF of an equal-weights SLL mixture by bisection.
fn mixture_quantile(m: &SllMixture, p: f64) -> f64 {
    let (mut lo, mut hi) = m.tail_bounds(1e-12);
    while m.cdf(lo) > p {
        lo -= (hi - lo).max(1.0);
    }
    while m.cdf(hi) < p {
        hi += (hi - lo).max(1.0);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if m.cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Reconcile, then score each expert, the equal-weights pool and the
/// reconciled distribution against realizations.
pub fn cmd_score(cfg: &RunConfig) -> Result<Report> {
    cfg.seed()?;
    if cfg.model == ModelKind::Event {
        bail!("scoring needs continuous quantities; one-off events have no realization density");
    }
    let panels = load_panels(&cfg.panel_path()?, cfg.model, &cfg.groups)?;
    let realizations = load_realizations(&cfg.realizations_path()?)?;
    if let Some(q) = panels.keys().find(|q| !realizations.contains_key(*q)) {
        bail!("no realization for quantity `{q}`");
    }
    let mut experts: Vec<String> = Vec::new();
    for p in panels.values() {
        if let TypedPanel::Continuous(p) = p {
            experts.extend(p.iter().map(|j| j.expert.clone()));
        }
    }
    experts.sort();
    experts.dedup();
    for (q, p) in &panels {
        if let TypedPanel::Continuous(p) = p {
            if p.len() != experts.len() {
                let missing: Vec<&str> = experts
                    .iter()
                    .filter(|e| !p.iter().any(|j| &j.expert == *e))
                    .map(String::as_str)
                    .collect();
                bail!(
                    "quantity `{q}` lacks judgements from {}; scoring needs a complete panel",
                    missing.join(", ")
                );
            }
        }
    }

    let mut rec = reconcile_panels(cfg, &panels)?;
    let ids: Vec<&String> = rec.results.keys().collect();
    let truth: Vec<f64> = ids.iter().map(|q| realizations[*q]).collect();
    let mut per_expert: Vec<Vec<SllParams>> = vec![Vec::new(); experts.len()];
    let mut pools = Vec::new();
    let mut reconciled = Vec::new();
    let mut intervals = Table::new(&["quantity_id", "forecaster", "q05", "q50", "q95", "realization"]);
    let mut score_warnings = Vec::new();
    for (id, &x) in ids.iter().zip(&truth) {
        let QuantityResult::Continuous(c) = &rec.results[*id] else {
            unreachable!("continuous model")
        };
        let (lo, hi) = c.prior.range();
        if x < lo || x > hi {
            score_warnings.push(format!(
                "realization {x} of `{id}` lies outside the decision-maker range [{lo}, {hi}]"
            ));
        }
        let fitted: Vec<SllParams> = c
            .panel
            .iter()
            .map(|j| fit_expert(&j.triplet))
            .collect::<reconcile_core::Result<_>>()?;
        // panels are complete and sorted by expert, like `experts`
        for (e, p) in per_expert.iter_mut().zip(&fitted) {
            e.push(*p);
        }
        for (j, p) in c.panel.iter().zip(&fitted) {
            let q: Vec<f64> = INTERVAL_PROBS
                .iter()
                .map(|&pr| p.quantile(pr))
                .collect::<reconcile_core::Result<_>>()?;
            intervals.push(vec![
                (*id).clone(),
                j.expert.clone(),
                num(q[0]),
                num(q[1]),
                num(q[2]),
                num(x),
            ]);
        }
        let pool = SllMixture::new(fitted)?;
        let q: Vec<f64> = INTERVAL_PROBS.iter().map(|&pr| mixture_quantile(&pool, pr)).collect();
        intervals.push(vec![
            (*id).clone(),
            "equal_weights".into(),
            num(q[0]),
            num(q[1]),
            num(q[2]),
            num(x),
        ]);
        pools.push(pool);
        let q = quantiles(&c.theta, &INTERVAL_PROBS);
        intervals.push(vec![
            (*id).clone(),
            "reconciled".into(),
            num(q[0]),
            num(q[1]),
            num(q[2]),
            num(x),
        ]);
        reconciled.push(SllMixture::new(reconciled_params(&c.run.chain, &c.prior, c.p_low)?)?);
    }

    let mut forecasters: Vec<ScoredForecaster> = experts
        .iter()
        .zip(per_expert)
        .map(|(name, ps)| ScoredForecaster {
            name: name.clone(),
            densities: ps.into_iter().map(|p| Box::new(p) as Box<dyn Density>).collect(),
        })
        .collect();
    forecasters.push(ScoredForecaster {
        name: "equal_weights".into(),
        densities: pools.into_iter().map(|p| Box::new(p) as Box<dyn Density>).collect(),
    });
    forecasters.push(ScoredForecaster {
        name: "reconciled".into(),
        densities: reconciled
            .into_iter()
            .map(|p| Box::new(p) as Box<dyn Density>)
            .collect(),
    });

    let mut scores = Table::new(&[
        "forecaster",
        "avg_log_score",
        "zero_density",
        "calibration_max_deviation",
    ]);
    let mut calibration = Table::new(&["forecaster", "point", "x", "y"]);
    for f in &forecasters {
        let s = avg_log_score(f, &truth, false)?;
        let cdfs: Vec<f64> = f.densities.iter().zip(&truth).map(|(d, &x)| d.cdf(x)).collect();
        let curve = calibration_curve(&cdfs)?;
        scores.push(vec![
            f.name.clone(),
            num(s.value),
            s.zero_density.len().to_string(),
            num(curve.max_deviation),
        ]);
        for (k, (x, y)) in curve.points.iter().enumerate() {
            calibration.push(vec![f.name.clone(), (k + 1).to_string(), num(*x), num(*y)]);
        }
        if s.is_flagged() {
            score_warnings.push(format!("forecaster `{}` has zero density at a realization", f.name));
        }
    }

    for s in &mut rec.summaries {
        if let QuantitySummary::Continuous { warnings, id, .. } = s {
            warnings.extend(
                score_warnings
                    .iter()
                    .filter(|w| w.contains(&format!("`{id}`")))
                    .cloned(),
            );
        }
    }
    let dir = cfg.out_dir();
    write_reconcile_artifacts(&dir, &rec)?;
    write(&dir, SCORES_FILE, &scores.to_csv(&rec.header)?)?;
    write(&dir, CALIBRATION_FILE, &calibration.to_csv(&rec.header)?)?;
    write(&dir, INTERVALS_FILE, &intervals.to_csv(&rec.header)?)?;
    for w in &score_warnings {
        eprintln!("warning: {w}");
    }
    let csv = String::from_utf8(scores.to_csv(&rec.header)?)?;
    let json = serde_json::json!({
        "converged": rec.converged(),
        "warnings": score_warnings,
        "scores": csv_rows(&csv),
    });
    Ok(Report {
        outcome: Outcome::from_converged(rec.converged()),
        csv,
        json,
    })
}

fn csv_rows(text: &str) -> Vec<BTreeMap<String, String>> {
    let mut r = crate::output::csv_reader(text.as_bytes());
    let headers = r.headers().cloned().unwrap_or_default();
    r.records()
        .filter_map(|rec| rec.ok())
        .map(|rec| {
            headers
                .iter()
                .map(String::from)
                .zip(rec.iter().map(String::from))
                .collect()
        })
        .collect()
}

/// Reconciled probability over `a × prior mean` and the prior correlation
/// between two experts over `a_W × a_B`.
pub fn cmd_sensitivity(cfg: &RunConfig) -> Result<Report> {
    let header = header_for(cfg)?;
    if cfg.model != ModelKind::Event {
        bail!("sensitivity sweeps need `model = \"event\"`");
    }
    let panels = load_panels(&cfg.panel_path()?, cfg.model, &cfg.groups)?;
    let id = match &cfg.sensitivity.quantity {
        Some(q) => q.clone(),
        None if panels.len() == 1 => panels.keys().next().cloned().expect("one panel"),
        None => bail!("panel holds {} events; set `sensitivity.quantity`", panels.len()),
    };
    let Some(TypedPanel::Event(panel)) = panels.get(&id) else {
        bail!("no event `{id}` in the panel");
    };
    let s = &cfg.sensitivity;
    let template = EventModelSpec {
        seed: derive_seed(header.seed, 0),
        ..cfg.event.clone()
    };
    let grid = sensitivity_curve(panel, &template, &s.a_values, &s.prior_means)?;
    let mut sens = Table::new(&["a", "prior_mean", "reconciled"]);
    for (i, a) in grid.a_values.iter().enumerate() {
        for (k, m) in grid.prior_means.iter().enumerate() {
            sens.push(vec![num(*a), num(*m), num(grid.values[i][k])]);
        }
    }
    let mut corr = Table::new(&["a_w", "a_b", "relation", "correlation"]);
    let mut cell = 0u64;
    for (same, relation) in [(false, "different-group"), (true, "same-group")] {
        for &a_w in &s.a_values {
            for &a_b in &s.a_values {
                let spec = EventModelSpec {
                    within: SampleSizePrior::Gamma {
                        shape: a_w,
                        rate: SENSITIVITY_RATE,
                    },
                    between: SampleSizePrior::Gamma {
                        shape: a_b,
                        rate: SENSITIVITY_RATE,
                    },
                    ..cfg.event.clone()
                };
                let mut rng = stream(derive_seed(header.seed, 1), cell);
                cell += 1;
                let rho = prior_correlation(&spec, same, s.correlation_draws, &mut rng)?;
                corr.push(vec![num(a_w), num(a_b), relation.into(), num(rho)]);
            }
        }
    }
    let dir = cfg.out_dir();
    write(&dir, SENSITIVITY_FILE, &sens.to_csv(&header)?)?;
    write(&dir, CORRELATION_FILE, &corr.to_csv(&header)?)?;
    let csv = String::from_utf8(sens.to_csv(&header)?)?;
    let json = serde_json::json!({ "event": id, "sensitivity": grid });
    Ok(Report {
        outcome: Outcome::Success,
        csv,
        json,
    })
}

/// Create a study directory from a JSON description.
pub fn delphi_init(study_dir: &Path, meta_path: &Path) -> Result<Study> {
    let text = std::fs::read_to_string(meta_path).with_context(|| format!("cannot read {}", meta_path.display()))?;
    let meta: StudyMeta =
        serde_json::from_str(&text).with_context(|| format!("invalid study file {}", meta_path.display()))?;
    Ok(Study::create(study_dir, meta)?)
}

pub fn delphi_add_round(study_dir: &Path, round_csv: &Path) -> Result<u32> {
    let mut study = Study::open(study_dir)?;
    let entries = parse_round_csv(round_csv)?;
    Ok(study.add_round(entries)?)
}

/// Anonymised bundle of `round`, or of the latest round.
pub fn delphi_bundle(study_dir: &Path, round: Option<u32>) -> Result<String> {
    let study = Study::open(study_dir)?;
    let round = match round {
        Some(r) => r,
        None => study
            .rounds
            .last()
            .map(|r| r.index)
            .context("study has no rounds yet")?,
    };
    Ok(study.anonymised_bundle(round)?)
}

pub fn delphi_status(study_dir: &Path) -> Result<StopDecision> {
    Ok(Study::open(study_dir)?.stopping_check()?)
}

/// Reconcile the final round of a stopped study.
pub fn delphi_finalize(study_dir: &Path, cfg: &RunConfig) -> Result<Report> {
    cfg.seed()?;
    let study = Study::open(study_dir)?;
    let panels = study.final_panel()?;
    let mut cfg = cfg.clone();
    for q in &study.meta.quantities {
        if let (Some([low, high]), None) = (q.range, cfg.quantity_ranges.get(&q.id)) {
            cfg.quantity_ranges
                .insert(q.id.clone(), RangeConfig::Uniform { low, high });
        }
    }
    let rec = reconcile_panels(&cfg, &panels)?;
    write_reconcile_artifacts(&cfg.out_dir(), &rec)?;
    reconcile_report(&rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use reconcile_core::QuantileTriplet;

    #[test]
    fn exit_codes() {
        assert_eq!(Outcome::Success.exit_code(), 0);
        assert_eq!(Outcome::NonConverged.exit_code(), 2);
    }

    #[test]
    fn mixture_quantile_inverts_cdf() {
        let ps: Vec<SllParams> = [(1.0, 2.0, 4.0), (0.0, 3.0, 3.5)]
            .iter()
            .map(|&(l, m, u)| fit_expert(&QuantileTriplet::new(l, m, u, 0.05).unwrap()).unwrap())
            .collect();
        let single = SllMixture::new(vec![ps[0]]).unwrap();
        assert!((mixture_quantile(&single, 0.95) - 4.0).abs() < 1e-9);
        let m = SllMixture::new(ps).unwrap();
        for p in [0.05, 0.5, 0.95] {
            assert!((m.cdf(mixture_quantile(&m, p)) - p).abs() < 1e-10);
        }
    }

    #[test]
    fn mixed_lower_probabilities_are_rejected() {
        let j = |e: &str, p: f64| QuantileJudgement {
            expert: e.into(),
            group: "g".into(),
            quantity: "q".into(),
            round: 1,
            triplet: QuantileTriplet::new(1.0, 2.0, 3.0, p).unwrap(),
            plausible_low: None,
            plausible_high: None,
        };
        assert_eq!(common_p_low(&[j("a", 0.05), j("b", 0.05)]).unwrap(), 0.05);
        assert!(common_p_low(&[j("a", 0.05), j("b", 0.1)]).is_err());
    }
}
