//! Expert judgement records shared by the models and the Delphi store.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sll::QuantileTriplet;

/// One expert's quantile triplet for one continuous quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileJudgement {
    pub expert: String,
    pub group: String,
    pub quantity: String,
    pub round: u32,
    pub triplet: QuantileTriplet,
    pub plausible_low: Option<f64>,
    pub plausible_high: Option<f64>,
}

/// One expert's probability for one binary event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventJudgement {
    pub expert: String,
    pub group: String,
    pub quantity: String,
    pub round: u32,
    pub probability: f64,
}

/// Anything that belongs to an expert within a group.
pub trait Grouped {
    fn expert(&self) -> &str;
    fn group(&self) -> &str;
}

impl Grouped for QuantileJudgement {
    fn expert(&self) -> &str {
        &self.expert
    }
    fn group(&self) -> &str {
        &self.group
    }
}

impl Grouped for EventJudgement {
    fn expert(&self) -> &str {
        &self.expert
    }
    fn group(&self) -> &str {
        &self.group
    }
}

/// Partition a panel by group label.
///
/// Groups are returned in lexical label order and members in lexical expert
/// order, so the result does not depend on record order. Duplicate experts are
/// rejected.
pub fn group_panel<T: Grouped + Clone>(panel: &[T]) -> Result<Vec<(String, Vec<T>)>> {
    let mut groups: BTreeMap<String, BTreeMap<String, T>> = BTreeMap::new();
    for j in panel {
        if j.group().is_empty() {
            return Err(Error::invalid(format!(
                "expert `{}` has no group assignment",
                j.expert()
            )));
        }
        let members = groups.entry(j.group().to_string()).or_default();
        if members.insert(j.expert().to_string(), j.clone()).is_some() {
            return Err(Error::invalid(format!(
                "expert `{}` appears more than once",
                j.expert()
            )));
        }
    }
    let mut seen = BTreeMap::new();
    for (g, members) in &groups {
        for e in members.keys() {
            if let Some(prev) = seen.insert(e.clone(), g.clone()) {
                return Err(Error::invalid(format!(
                    "expert `{e}` assigned to both `{prev}` and `{g}`"
                )));
            }
        }
    }
    Ok(groups
        .into_iter()
        .map(|(g, m)| (g, m.into_values().collect()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(expert: &str, group: &str, p: f64) -> EventJudgement {
        EventJudgement {
            expert: expert.into(),
            group: group.into(),
            quantity: "q".into(),
            round: 1,
            probability: p,
        }
    }

    #[test]
    fn grouping_is_order_invariant() {
        let a = vec![ev("e2", "b", 0.2), ev("e1", "a", 0.1), ev("e3", "a", 0.3)];
        let mut b = a.clone();
        b.reverse();
        assert_eq!(group_panel(&a).unwrap(), group_panel(&b).unwrap());
        let g = group_panel(&a).unwrap();
        assert_eq!(g[0].0, "a");
        assert_eq!(g[0].1[0].expert, "e1");
    }

    #[test]
    fn rejects_duplicates_and_missing_groups() {
        assert!(group_panel(&[ev("e1", "a", 0.1), ev("e1", "b", 0.1)]).is_err());
        assert!(group_panel(&[ev("e1", "", 0.1)]).is_err());
    }
}
