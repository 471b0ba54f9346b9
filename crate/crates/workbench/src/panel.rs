//! Judgement and realization files.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use anyhow::{bail, Context, Result};

use reconcile_core::delphi::{parse_round_csv, EntryValue, RoundEntry, TypedPanel};
use reconcile_core::{EventJudgement, QuantileJudgement, QuantileTriplet};

use crate::config::ModelKind;
use crate::output::csv_reader;

/// Parse a judgement CSV into one typed panel per quantity.
///
/// Every row must match `model`: quantile rows for continuous and proportion
/// models, probability rows for events.
pub fn load_panels(
    path: &Path,
    model: ModelKind,
    groups: &BTreeMap<String, String>,
) -> Result<BTreeMap<String, TypedPanel>> {
    let entries = parse_round_csv(path)?;
    panels_from_entries(&entries, model, groups)
}

pub fn panels_from_entries(
    entries: &[RoundEntry],
    model: ModelKind,
    groups: &BTreeMap<String, String>,
) -> Result<BTreeMap<String, TypedPanel>> {
    if entries.is_empty() {
        bail!("panel has no judgements");
    }
    let mut seen = BTreeSet::new();
    for e in entries {
        if !seen.insert((e.expert.as_str(), e.quantity.as_str())) {
            bail!("expert `{}` judges `{}` more than once", e.expert, e.quantity);
        }
    }
    let unassigned: BTreeSet<&str> = entries
        .iter()
        .map(|e| e.expert.as_str())
        .filter(|e| groups.get(*e).is_none_or(|g| g.is_empty()))
        .collect();
    if !unassigned.is_empty() {
        bail!(
            "no group assigned for expert(s): {}",
            unassigned.into_iter().collect::<Vec<_>>().join(", ")
        );
    }
    let mut by_quantity: BTreeMap<&str, Vec<&RoundEntry>> = BTreeMap::new();
    for e in entries {
        by_quantity.entry(e.quantity.as_str()).or_default().push(e);
    }
    let mut out = BTreeMap::new();
    for (q, mut rows) in by_quantity {
        rows.sort_by(|a, b| a.expert.cmp(&b.expert));
        let panel = match model {
            ModelKind::Continuous | ModelKind::Proportion => {
                TypedPanel::Continuous(rows.iter().map(|e| quantile_row(e, groups)).collect::<Result<_>>()?)
            }
            ModelKind::Event => TypedPanel::Event(rows.iter().map(|e| event_row(e, groups)).collect::<Result<_>>()?),
        };
        out.insert(q.to_string(), panel);
    }
    Ok(out)
}

fn quantile_row(e: &RoundEntry, groups: &BTreeMap<String, String>) -> Result<QuantileJudgement> {
    let EntryValue::Quantile {
        p_low,
        low,
        median,
        high,
        plausible_low,
        plausible_high,
    } = e.value
    else {
        bail!(
            "expert `{}` gives a probability for `{}` but the model expects quantiles",
            e.expert,
            e.quantity
        );
    };
    Ok(QuantileJudgement {
        expert: e.expert.clone(),
        group: groups[&e.expert].clone(),
        quantity: e.quantity.clone(),
        round: 1,
        triplet: QuantileTriplet::new(low, median, high, p_low)?,
        plausible_low,
        plausible_high,
    })
}

fn event_row(e: &RoundEntry, groups: &BTreeMap<String, String>) -> Result<EventJudgement> {
    let EntryValue::Probability { probability } = e.value else {
        bail!(
            "expert `{}` gives quantiles for `{}` but the model expects a probability",
            e.expert,
            e.quantity
        );
    };
    Ok(EventJudgement {
        expert: e.expert.clone(),
        group: groups[&e.expert].clone(),
        quantity: e.quantity.clone(),
        round: 1,
        probability,
    })
}

/// `quantity_id,value` rows; `#` lines are comments.
pub fn load_realizations(path: &Path) -> Result<BTreeMap<String, f64>> {
    let file = std::fs::File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut reader = csv_reader(file);
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("{}: missing column `{name}`", path.display()))
    };
    let (qi, vi) = (col("quantity_id")?, col("value")?);
    let mut out = BTreeMap::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("{}: malformed row", path.display()))?;
        let line = record.position().map_or(0, |p| p.line());
        let q = record.get(qi).unwrap_or("");
        let v: f64 = record
            .get(vi)
            .unwrap_or("")
            .parse()
            .ok()
            .filter(|v: &f64| v.is_finite())
            .with_context(|| format!("{}: line {line}: value is not a finite number", path.display()))?;
        if q.is_empty() {
            bail!("{}: line {line}: empty quantity_id", path.display());
        }
        if out.insert(q.to_string(), v).is_some() {
            bail!("{}: line {line}: duplicate realization for `{q}`", path.display());
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use reconcile_core::delphi::parse_round_bytes;

    fn groups() -> BTreeMap<String, String> {
        [("a", "g1"), ("b", "g1"), ("c", "g2")]
            .iter()
            .map(|(e, g)| (e.to_string(), g.to_string()))
            .collect()
    }

    #[test]
    fn splits_by_quantity_and_sorts_experts() {
        let csv = b"expert_id,quantity_id,p_low,low,median,high\n\
                    c,q1,0.05,1,2,3\na,q1,0.05,1,2,4\nb,q2,0.05,0,1,2\na,q2,0.05,0,1,3\n";
        let entries = parse_round_bytes(csv, "t").unwrap();
        let panels = panels_from_entries(&entries, ModelKind::Continuous, &groups()).unwrap();
        assert_eq!(panels.keys().collect::<Vec<_>>(), ["q1", "q2"]);
        let TypedPanel::Continuous(q1) = &panels["q1"] else {
            panic!()
        };
        assert_eq!(q1.iter().map(|j| j.expert.as_str()).collect::<Vec<_>>(), ["a", "c"]);
        assert_eq!(q1[1].group, "g2");
    }

    #[test]
    fn rejects_kind_mismatch_unassigned_and_duplicates() {
        let prob = parse_round_bytes(b"expert_id,quantity_id,probability\na,e,0.3\n", "t").unwrap();
        let err = panels_from_entries(&prob, ModelKind::Continuous, &groups()).unwrap_err();
        assert!(err.to_string().contains("expects quantiles"));
        let stranger = parse_round_bytes(b"expert_id,quantity_id,probability\nz,e,0.3\n", "t").unwrap();
        let err = panels_from_entries(&stranger, ModelKind::Event, &groups()).unwrap_err();
        assert!(err.to_string().contains("z"), "{err}");
        let dup = parse_round_bytes(b"expert_id,quantity_id,probability\na,e,0.3\na,e,0.4\n", "t").unwrap();
        assert!(panels_from_entries(&dup, ModelKind::Event, &groups()).is_err());
    }

    #[test]
    fn realizations_parse_and_report_lines() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("r.csv");
        std::fs::write(&good, "# comment\nquantity_id,value\nq1,2.5\nq2,-1\n").unwrap();
        let r = load_realizations(&good).unwrap();
        assert_eq!(r["q1"], 2.5);
        assert_eq!(r["q2"], -1.0);
        let bad = dir.path().join("b.csv");
        std::fs::write(&bad, "quantity_id,value\nq1,2.5\nq2,abc\n").unwrap();
        let err = load_realizations(&bad).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
    }
}
