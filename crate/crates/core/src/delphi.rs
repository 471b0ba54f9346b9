//! Delphi-round bookkeeping on disk.
//!
//! A study is a directory holding `study.json` and one `round-<n>.csv` per
//! completed round. Round files are written once, via temp-then-rename, and
//! never rewritten; `study.json` is the only mutable file (group labels).

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::judgement::{EventJudgement, QuantileJudgement};
use crate::sll::QuantileTriplet;

pub const STUDY_FILE: &str = "study.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantityKind {
    Continuous,
    Event,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantitySpec {
    pub id: String,
    pub kind: QuantityKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
    /// Decision-maker range for continuous quantities, if fixed in advance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpertSpec {
    pub id: String,
    /// Identifying name; never exported in bundles.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyMeta {
    pub id: String,
    pub quantities: Vec<QuantitySpec>,
    pub experts: Vec<ExpertSpec>,
    /// Expert id to group label, assigned by the facilitator.
    #[serde(default)]
    pub groups: BTreeMap<String, String>,
    pub max_rounds: u32,
    /// Relative tolerance for the no-change rule; zero means exact equality.
    #[serde(default)]
    pub tolerance: f64,
}

impl StudyMeta {
    pub fn validate(&self) -> Result<()> {
        if self.max_rounds == 0 {
            return Err(Error::Study("max_rounds must be at least 1".into()));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return Err(Error::Study(format!("invalid tolerance {}", self.tolerance)));
        }
        if self.experts.is_empty() || self.quantities.is_empty() {
            return Err(Error::Study("study needs experts and quantities".into()));
        }
        let mut seen = BTreeSet::new();
        for e in &self.experts {
            if e.id.is_empty() || !seen.insert(e.id.as_str()) {
                return Err(Error::Study(format!("duplicate or empty expert id `{}`", e.id)));
            }
        }
        let mut seen = BTreeSet::new();
        for q in &self.quantities {
            if q.id.is_empty() || !seen.insert(q.id.as_str()) {
                return Err(Error::Study(format!("duplicate or empty quantity id `{}`", q.id)));
            }
            if let Some([lo, hi]) = q.range {
                if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                    return Err(Error::Study(format!("quantity `{}` has an empty range", q.id)));
                }
            }
        }
        if let Some(e) = self.groups.keys().find(|e| self.expert(e).is_none()) {
            return Err(Error::Study(format!("group map names unknown expert `{e}`")));
        }
        Ok(())
    }

    pub fn expert(&self, id: &str) -> Option<&ExpertSpec> {
        self.experts.iter().find(|e| e.id == id)
    }

    pub fn quantity(&self, id: &str) -> Option<&QuantitySpec> {
        self.quantities.iter().find(|q| q.id == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EntryValue {
    Quantile {
        p_low: f64,
        low: f64,
        median: f64,
        high: f64,
        plausible_low: Option<f64>,
        plausible_high: Option<f64>,
    },
    Probability {
        probability: f64,
    },
}

impl EntryValue {
    /// `plausible_low <= low < median < high <= plausible_high`, or a probability in [0, 1].
    pub fn validate(&self) -> std::result::Result<(), String> {
        match *self {
            EntryValue::Quantile {
                p_low,
                low,
                median,
                high,
                plausible_low,
                plausible_high,
            } => {
                let all = [
                    Some(p_low),
                    Some(low),
                    Some(median),
                    Some(high),
                    plausible_low,
                    plausible_high,
                ];
                if all.iter().flatten().any(|v| !v.is_finite()) {
                    return Err("non-finite value".into());
                }
                if !(p_low > 0.0 && p_low < 0.5) {
                    return Err(format!("p_low must lie in (0, 0.5), got {p_low}"));
                }
                if !(low < median && median < high) {
                    return Err(format!("quantiles not strictly increasing: {low}, {median}, {high}"));
                }
                if plausible_low.is_some_and(|l| l > low) || plausible_high.is_some_and(|u| u < high) {
                    return Err("plausible bounds must enclose the quantiles".into());
                }
                Ok(())
            }
            EntryValue::Probability { probability } => {
                if (0.0..=1.0).contains(&probability) {
                    Ok(())
                } else {
                    Err(format!("probability must lie in [0, 1], got {probability}"))
                }
            }
        }
    }

    fn numbers(&self) -> Vec<Option<f64>> {
        match *self {
            EntryValue::Quantile {
                p_low,
                low,
                median,
                high,
                plausible_low,
                plausible_high,
            } => {
                vec![
                    Some(p_low),
                    Some(low),
                    Some(median),
                    Some(high),
                    plausible_low,
                    plausible_high,
                ]
            }
            EntryValue::Probability { probability } => vec![Some(probability)],
        }
    }

    /// Elementwise equality up to relative tolerance `tol`.
    pub fn same_as(&self, other: &EntryValue, tol: f64) -> bool {
        let (a, b) = (self.numbers(), other.numbers());
        a.len() == b.len()
            && a.iter().zip(&b).all(|(x, y)| match (x, y) {
                (None, None) => true,
                (Some(x), Some(y)) => x == y || (x - y).abs() <= tol * x.abs().max(y.abs()),
                _ => false,
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundEntry {
    pub expert: String,
    pub quantity: String,
    pub value: EntryValue,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub index: u32,
    /// Sorted by (expert, quantity).
    pub entries: Vec<RoundEntry>,
}

impl RoundRecord {
    fn get(&self, expert: &str, quantity: &str) -> Option<&RoundEntry> {
        self.entries
            .binary_search_by(|e| (e.expert.as_str(), e.quantity.as_str()).cmp(&(expert, quantity)))
            .ok()
            .map(|i| &self.entries[i])
    }
}

const COLUMNS: [&str; 10] = [
    "expert_id",
    "quantity_id",
    "p_low",
    "low",
    "median",
    "high",
    "plausible_low",
    "plausible_high",
    "probability",
    "rationale",
];

fn round_file(index: u32) -> String {
    format!("round-{index}.csv")
}

/// Parse a round CSV. Errors carry the 1-based file line.
pub fn parse_round_csv(path: &Path) -> Result<Vec<RoundEntry>> {
    let text = fs::read(path)?;
    parse_round_bytes(&text, &path.display().to_string())
}

pub fn parse_round_bytes(bytes: &[u8], path: &str) -> Result<Vec<RoundEntry>> {
    let perr = |line: u64, message: String| Error::Parse {
        path: path.to_string(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(bytes);
    let headers = reader.headers().map_err(|e| perr(1, e.to_string()))?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let required = ["expert_id", "quantity_id"];
    for r in required {
        if col(r).is_none() {
            return Err(perr(1, format!("missing column `{r}`")));
        }
    }
    let idx: BTreeMap<&str, Option<usize>> = COLUMNS.iter().map(|c| (*c, col(c))).collect();
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            perr(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |name: &str| -> Option<&str> { idx[name].and_then(|i| record.get(i)).filter(|s| !s.is_empty()) };
        let number = |name: &str| -> Result<Option<f64>> {
            field(name)
                .map(|s| {
                    s.parse::<f64>()
                        .map_err(|_| perr(line, format!("column `{name}`: `{s}` is not a number")))
                })
                .transpose()
        };
        let expert = field("expert_id").ok_or_else(|| perr(line, "empty expert_id".into()))?;
        let quantity = field("quantity_id").ok_or_else(|| perr(line, "empty quantity_id".into()))?;
        let probability = number("probability")?;
        let quantiles = [number("low")?, number("median")?, number("high")?];
        let value = match (probability, quantiles) {
            (Some(p), [None, None, None]) => EntryValue::Probability { probability: p },
            (None, [Some(low), Some(median), Some(high)]) => EntryValue::Quantile {
                p_low: number("p_low")?.ok_or_else(|| perr(line, "missing p_low".into()))?,
                low,
                median,
                high,
                plausible_low: number("plausible_low")?,
                plausible_high: number("plausible_high")?,
            },
            _ => {
                return Err(perr(
                    line,
                    "row needs either low/median/high or probability, not both".into(),
                ))
            }
        };
        value.validate().map_err(|m| perr(line, m))?;
        out.push(RoundEntry {
            expert: expert.to_string(),
            quantity: quantity.to_string(),
            value,
            rationale: field("rationale").unwrap_or("").to_string(),
        });
    }
    Ok(out)
}

fn fmt_opt(v: Option<f64>) -> String {
    // shortest representation that parses back to the same double
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn render_round(entries: &[RoundEntry]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Study(format!("csv write failed: {e}"));
    w.write_record(COLUMNS).map_err(io)?;
    for e in entries {
        let (q, prob) = match e.value {
            EntryValue::Quantile {
                p_low,
                low,
                median,
                high,
                plausible_low,
                plausible_high,
            } => (
                [
                    Some(p_low),
                    Some(low),
                    Some(median),
                    Some(high),
                    plausible_low,
                    plausible_high,
                ],
                None,
            ),
            EntryValue::Probability { probability } => ([None; 6], Some(probability)),
        };
        let mut row = vec![e.expert.clone(), e.quantity.clone()];
        row.extend(q.iter().map(|v| fmt_opt(*v)));
        row.push(fmt_opt(prob));
        row.push(e.rationale.clone());
        w.write_record(&row).map_err(io)?;
    }
    w.into_inner()
        .map_err(|e| Error::Study(format!("csv write failed: {e}")))
}

/// Write `bytes` to `path` atomically. Fails if `path` exists and `overwrite` is false.
pub fn write_atomic(path: &Path, bytes: &[u8], overwrite: bool) -> Result<()> {
    if !overwrite && path.exists() {
        return Err(Error::Study(format!("{} already exists", path.display())));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    NoChange,
    MaxRounds,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "decision", content = "reason", rename_all = "lowercase")]
pub enum StopDecision {
    Continue,
    Stop(StopReason),
}

impl std::fmt::Display for StopDecision {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StopDecision::Continue => write!(f, "continue"),
            StopDecision::Stop(StopReason::NoChange) => write!(f, "stop: no-change"),
            StopDecision::Stop(StopReason::MaxRounds) => write!(f, "stop: max-rounds"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypedPanel {
    Continuous(Vec<QuantileJudgement>),
    Event(Vec<EventJudgement>),
}

#[derive(Debug, Serialize)]
struct BundleEntry<'a> {
    quantity: &'a str,
    #[serde(flatten)]
    value: &'a EntryValue,
    rationale: &'a str,
}

#[derive(Debug, Serialize)]
struct BundleExpert<'a> {
    pseudonym: String,
    entries: Vec<BundleEntry<'a>>,
}

#[derive(Debug, Serialize)]
struct Bundle<'a> {
    round: u32,
    experts: Vec<BundleExpert<'a>>,
}

#[derive(Debug, Clone)]
pub struct Study {
    pub dir: PathBuf,
    pub meta: StudyMeta,
    /// Rounds in order, starting at 1.
    pub rounds: Vec<RoundRecord>,
}

impl Study {
    /// Create a new study directory. Refuses to reuse an existing study.
    pub fn create(dir: &Path, meta: StudyMeta) -> Result<Self> {
        meta.validate()?;
        fs::create_dir_all(dir)?;
        let bytes = serde_json::to_vec_pretty(&meta)?;
        write_atomic(&dir.join(STUDY_FILE), &bytes, false)?;
        Ok(Study {
            dir: dir.to_path_buf(),
            meta,
            rounds: Vec::new(),
        })
    }

    pub fn open(dir: &Path) -> Result<Self> {
        let path = dir.join(STUDY_FILE);
        let meta: StudyMeta = serde_json::from_slice(
            &fs::read(&path).map_err(|e| Error::Study(format!("cannot read {}: {e}", path.display())))?,
        )?;
        meta.validate()?;
        let mut study = Study {
            dir: dir.to_path_buf(),
            meta,
            rounds: Vec::new(),
        };
        let mut index = 1;
        loop {
            let path = dir.join(round_file(index));
            if !path.exists() {
                break;
            }
            let entries = parse_round_csv(&path)?;
            let record = study.check_round(index, entries, &path.display().to_string())?;
            study.rounds.push(record);
            index += 1;
        }
        Ok(study)
    }

    fn check_round(&self, index: u32, mut entries: Vec<RoundEntry>, source: &str) -> Result<RoundRecord> {
        for e in &entries {
            if self.meta.expert(&e.expert).is_none() {
                return Err(Error::Study(format!("{source}: unknown expert `{}`", e.expert)));
            }
            let q = self
                .meta
                .quantity(&e.quantity)
                .ok_or_else(|| Error::Study(format!("{source}: unknown quantity `{}`", e.quantity)))?;
            let matches = matches!(
                (q.kind, &e.value),
                (QuantityKind::Continuous, EntryValue::Quantile { .. })
                    | (QuantityKind::Event, EntryValue::Probability { .. })
            );
            if !matches {
                return Err(Error::Study(format!(
                    "{source}: entry for `{}` by `{}` does not match the quantity kind",
                    e.quantity, e.expert
                )));
            }
        }
        entries.sort_by(|a, b| (&a.expert, &a.quantity).cmp(&(&b.expert, &b.quantity)));
        if let Some(w) = entries
            .windows(2)
            .find(|w| w[0].expert == w[1].expert && w[0].quantity == w[1].quantity)
        {
            return Err(Error::Study(format!(
                "{source}: expert `{}` answered `{}` twice",
                w[0].expert, w[0].quantity
            )));
        }
        Ok(RoundRecord { index, entries })
    }

    /// Experts missing at least one quantity in `round`.
    pub fn missing_experts(&self, round: &RoundRecord) -> Vec<String> {
        self.meta
            .experts
            .iter()
            .filter(|e| self.meta.quantities.iter().any(|q| round.get(&e.id, &q.id).is_none()))
            .map(|e| e.id.clone())
            .collect()
    }

    fn require_complete(&self, round: &RoundRecord) -> Result<()> {
        let missing = self.missing_experts(round);
        if missing.is_empty() {
            Ok(())
        } else {
            Err(Error::Study(format!(
                "round {} is incomplete; missing experts: {}",
                round.index,
                missing.join(", ")
            )))
        }
    }

    /// Record the next round. Incomplete rounds and rounds past the limit are rejected.
    pub fn add_round(&mut self, entries: Vec<RoundEntry>) -> Result<u32> {
        let index = self.rounds.len() as u32 + 1;
        if index > self.meta.max_rounds {
            return Err(Error::Study(format!(
                "study already has the maximum of {} rounds",
                self.meta.max_rounds
            )));
        }
        for e in &entries {
            e.value
                .validate()
                .map_err(|m| Error::Study(format!("entry `{}`/`{}`: {m}", e.expert, e.quantity)))?;
        }
        let record = self.check_round(index, entries, &format!("round {index}"))?;
        self.require_complete(&record)?;
        let bytes = render_round(&record.entries)?;
        write_atomic(&self.dir.join(round_file(index)), &bytes, false)?;
        self.rounds.push(record);
        Ok(index)
    }

    /// Replace the group map. Every key must be a known expert.
    pub fn assign_groups(&mut self, groups: BTreeMap<String, String>) -> Result<()> {
        let meta = StudyMeta {
            groups,
            ..self.meta.clone()
        };
        meta.validate()?;
        let bytes = serde_json::to_vec_pretty(&meta)?;
        write_atomic(&self.dir.join(STUDY_FILE), &bytes, true)?;
        self.meta = meta;
        Ok(())
    }

    fn round(&self, index: u32) -> Result<&RoundRecord> {
        self.rounds
            .get((index as usize).wrapping_sub(1))
            .ok_or_else(|| Error::Study(format!("round {index} does not exist")))
    }

    /// Stable pseudonyms: experts ordered by a salted hash of their id.
    pub fn pseudonyms(&self) -> BTreeMap<String, String> {
        let mut hashed: Vec<(Vec<u8>, &str)> = self
            .meta
            .experts
            .iter()
            .map(|e| {
                let mut h = Sha256::new();
                h.update(self.meta.id.as_bytes());
                h.update([0u8]);
                h.update(e.id.as_bytes());
                (h.finalize().to_vec(), e.id.as_str())
            })
            .collect();
        hashed.sort();
        hashed
            .into_iter()
            .enumerate()
            .map(|(i, (_, id))| (id.to_string(), format!("P{:02}", i + 1)))
            .collect()
    }

    /// Values and rationales of `round` keyed by pseudonym, as pretty JSON.
    pub fn anonymised_bundle(&self, round: u32) -> Result<String> {
        let record = self.round(round)?;
        self.require_complete(record)?;
        let names = self.pseudonyms();
        let mut experts: Vec<BundleExpert> = self
            .meta
            .experts
            .iter()
            .map(|e| BundleExpert {
                pseudonym: names[&e.id].clone(),
                entries: record
                    .entries
                    .iter()
                    .filter(|r| r.expert == e.id)
                    .map(|r| BundleEntry {
                        quantity: &r.quantity,
                        value: &r.value,
                        rationale: &r.rationale,
                    })
                    .collect(),
            })
            .collect();
        experts.sort_by(|a, b| a.pseudonym.cmp(&b.pseudonym));
        let mut out = serde_json::to_string_pretty(&Bundle { round, experts })?;
        out.push('\n');
        Ok(out)
    }

    pub fn stopping_check(&self) -> Result<StopDecision> {
        let last = self
            .rounds
            .last()
            .ok_or_else(|| Error::Study("no complete round recorded".into()))?;
        self.require_complete(last)?;
        if self.rounds.len() >= 2 {
            let prev = &self.rounds[self.rounds.len() - 2];
            let unchanged = last.entries.len() == prev.entries.len()
                && last.entries.iter().all(|e| {
                    prev.get(&e.expert, &e.quantity)
                        .is_some_and(|p| e.value.same_as(&p.value, self.meta.tolerance))
                });
            if unchanged {
                return Ok(StopDecision::Stop(StopReason::NoChange));
            }
        }
        if last.index >= self.meta.max_rounds {
            return Ok(StopDecision::Stop(StopReason::MaxRounds));
        }
        Ok(StopDecision::Continue)
    }

    /// Final-round judgements per quantity, each panel sorted by expert.
    pub fn final_panel(&self) -> Result<BTreeMap<String, TypedPanel>> {
        let decision = self.stopping_check()?;
        if decision == StopDecision::Continue {
            return Err(Error::Study(
                "stopping criteria not met; record another round before finalizing".into(),
            ));
        }
        let last = self.rounds.last().expect("checked by stopping_check");
        let mut unassigned: Vec<&str> = self
            .meta
            .experts
            .iter()
            .filter(|e| self.meta.groups.get(&e.id).is_none_or(|g| g.is_empty()))
            .map(|e| e.id.as_str())
            .collect();
        unassigned.sort();
        if !unassigned.is_empty() {
            return Err(Error::Study(format!(
                "no group assigned for expert(s): {}",
                unassigned.join(", ")
            )));
        }
        let mut panels = BTreeMap::new();
        for q in &self.meta.quantities {
            let mut rows: Vec<&RoundEntry> = last.entries.iter().filter(|e| e.quantity == q.id).collect();
            rows.sort_by(|a, b| a.expert.cmp(&b.expert));
            let group = |e: &str| self.meta.groups[e].clone();
            let panel = match q.kind {
                QuantityKind::Continuous => TypedPanel::Continuous(
                    rows.iter()
                        .map(|e| {
                            let EntryValue::Quantile {
                                p_low,
                                low,
                                median,
                                high,
                                plausible_low,
                                plausible_high,
                            } = e.value
                            else {
                                unreachable!("kinds checked on load")
                            };
                            let triplet = QuantileTriplet::new(low, median, high, p_low).map_err(|err| {
                                Error::Study(format!("expert `{}` on `{}`: {err}", e.expert, e.quantity))
                            })?;
                            Ok(QuantileJudgement {
                                expert: e.expert.clone(),
                                group: group(&e.expert),
                                quantity: q.id.clone(),
                                round: last.index,
                                triplet,
                                plausible_low,
                                plausible_high,
                            })
                        })
                        .collect::<Result<_>>()?,
                ),
                QuantityKind::Event => TypedPanel::Event(
                    rows.iter()
                        .map(|e| {
                            let EntryValue::Probability { probability } = e.value else {
                                unreachable!("kinds checked on load")
                            };
                            EventJudgement {
                                expert: e.expert.clone(),
                                group: group(&e.expert),
                                quantity: q.id.clone(),
                                round: last.index,
                                probability,
                            }
                        })
                        .collect(),
                ),
            };
            panels.insert(q.id.clone(), panel);
        }
        Ok(panels)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn meta() -> StudyMeta {
        StudyMeta {
            id: "s1".into(),
            quantities: vec![
                QuantitySpec {
                    id: "q1".into(),
                    kind: QuantityKind::Continuous,
                    unit: None,
                    range: None,
                },
                QuantitySpec {
                    id: "ev".into(),
                    kind: QuantityKind::Event,
                    unit: None,
                    range: None,
                },
            ],
            experts: ["alice", "bob", "carol"]
                .iter()
                .map(|e| ExpertSpec {
                    id: e.to_string(),
                    display_name: Some(format!("Dr {e} Smith")),
                })
                .collect(),
            groups: BTreeMap::new(),
            max_rounds: 3,
            tolerance: 0.0,
        }
    }

    fn entries(shift: f64) -> Vec<RoundEntry> {
        let mut out = Vec::new();
        for (i, e) in ["carol", "alice", "bob"].iter().enumerate() {
            let m = 10.0 + i as f64 + shift;
            out.push(RoundEntry {
                expert: e.to_string(),
                quantity: "q1".into(),
                value: EntryValue::Quantile {
                    p_low: 0.05,
                    low: m - 2.0,
                    median: m,
                    high: m + 3.0,
                    plausible_low: Some(m - 2.0),
                    plausible_high: None,
                },
                rationale: format!("because, \"{e}\" said so"),
            });
            out.push(RoundEntry {
                expert: e.to_string(),
                quantity: "ev".into(),
                value: EntryValue::Probability {
                    probability: 0.1 * (i + 1) as f64,
                },
                rationale: String::new(),
            });
        }
        out
    }

    #[test]
    fn rounds_round_trip_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Study::create(dir.path(), meta()).unwrap();
        s.add_round(entries(0.0)).unwrap();
        s.add_round(entries(0.1)).unwrap();
        let reopened = Study::open(dir.path()).unwrap();
        assert_eq!(reopened.rounds, s.rounds);
        assert!(Study::create(dir.path(), meta()).is_err());
    }

    #[test]
    fn incomplete_round_names_missing_expert() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Study::create(dir.path(), meta()).unwrap();
        let partial: Vec<_> = entries(0.0)
            .into_iter()
            .filter(|e| !(e.expert == "bob" && e.quantity == "ev"))
            .collect();
        let err = s.add_round(partial).unwrap_err().to_string();
        assert!(err.contains("bob") && !err.contains("alice"), "{err}");
        assert!(s.rounds.is_empty());
        assert!(!dir.path().join("round-1.csv").exists());
    }

    #[test]
    fn stopping_rules() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Study::create(dir.path(), meta()).unwrap();
        assert!(s.stopping_check().is_err());
        s.add_round(entries(0.0)).unwrap();
        assert_eq!(s.stopping_check().unwrap(), StopDecision::Continue);
        s.add_round(entries(0.0)).unwrap();
        assert_eq!(s.stopping_check().unwrap(), StopDecision::Stop(StopReason::NoChange));
        assert_eq!(s.stopping_check().unwrap().to_string(), "stop: no-change");

        let dir = tempfile::tempdir().unwrap();
        let mut s = Study::create(dir.path(), meta()).unwrap();
        for k in 0..3 {
            s.add_round(entries(k as f64)).unwrap();
        }
        assert_eq!(s.stopping_check().unwrap(), StopDecision::Stop(StopReason::MaxRounds));
        assert!(s.add_round(entries(9.0)).is_err());
    }

    #[test]
    fn tolerance_relaxes_no_change() {
        let dir = tempfile::tempdir().unwrap();
        let mut m = meta();
        m.tolerance = 1e-3;
        let mut s = Study::create(dir.path(), m).unwrap();
        s.add_round(entries(0.0)).unwrap();
        s.add_round(entries(1e-6)).unwrap();
        assert_eq!(s.stopping_check().unwrap(), StopDecision::Stop(StopReason::NoChange));
    }

    #[test]
    fn bundle_is_anonymous_and_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Study::create(dir.path(), meta()).unwrap();
        s.add_round(entries(0.0)).unwrap();
        let b = s.anonymised_bundle(1).unwrap();
        for e in &s.meta.experts {
            assert!(!b.contains(e.display_name.as_deref().unwrap()));
            assert!(!b.contains(&format!("\"{}\"", e.id)));
        }
        let v: serde_json::Value = serde_json::from_str(&b).unwrap();
        assert_eq!(v["experts"].as_array().unwrap().len(), 3);
        let again = Study::open(dir.path()).unwrap().anonymised_bundle(1).unwrap();
        assert_eq!(b, again);
        assert!(s.anonymised_bundle(2).is_err());
    }

    #[test]
    fn final_panel_requires_stop_and_groups() {
        let dir = tempfile::tempdir().unwrap();
        let mut s = Study::create(dir.path(), meta()).unwrap();
        s.add_round(entries(0.0)).unwrap();
        assert!(s.final_panel().unwrap_err().to_string().contains("stopping"));
        s.add_round(entries(0.0)).unwrap();
        let groups: BTreeMap<String, String> = [("alice", "g1"), ("carol", "g2")]
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect();
        s.assign_groups(groups.clone()).unwrap();
        let err = s.final_panel().unwrap_err().to_string();
        assert!(err.contains("bob") && !err.contains("alice"), "{err}");

        let mut groups = groups;
        groups.insert("bob".into(), "g1".into());
        s.assign_groups(groups).unwrap();
        let panels = Study::open(dir.path()).unwrap().final_panel().unwrap();
        let TypedPanel::Continuous(q) = &panels["q1"] else {
            panic!("wrong kind")
        };
        assert_eq!(
            q.iter().map(|j| j.expert.as_str()).collect::<Vec<_>>(),
            ["alice", "bob", "carol"]
        );
        assert!(q.iter().all(|j| j.round == 2));
        let TypedPanel::Event(e) = &panels["ev"] else {
            panic!("wrong kind")
        };
        assert_eq!(e[1].group, "g1");
        assert_eq!(e[2].probability, 0.1);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let csv = "expert_id,quantity_id,p_low,low,median,high,probability,rationale\n\
                   a,q1,0.05,1,2,3,,ok\n\
                   b,q1,0.05,1,x,3,,bad\n";
        let err = parse_round_bytes(csv.as_bytes(), "r.csv").unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");

        let csv = "expert_id,quantity_id,p_low,low,median,high,probability,rationale\n\
                   a,q1,0.05,3,2,1,,unordered\n";
        let err = parse_round_bytes(csv.as_bytes(), "r.csv").unwrap_err().to_string();
        assert!(err.contains("line 2") && err.contains("increasing"), "{err}");

        let csv = "expert_id,quantity_id,probability\na,e,1.5\n";
        assert!(parse_round_bytes(csv.as_bytes(), "r.csv").is_err());
    }
}
