//! Run configuration: a TOML file plus command-line overrides.
//!
//! Relative paths in the file resolve against the file's own directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use reconcile_core::continuous::ContinuousModelSpec;
use reconcile_core::events::EventModelSpec;
use reconcile_core::standardize::{DecisionMakerPrior, DEFAULT_PADDING};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    #[default]
    Continuous,
    Event,
    /// A proportion in [0, 1] reconciled as a continuous quantity; also
    /// reports `Pr(X = 1) = E[θ]`.
    Proportion,
}

/// Decision-maker prior on the original scale of a continuous quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RangeConfig {
    /// Uniform over the panel's plausible range, padded on both sides.
    FromPanel {
        #[serde(default = "default_padding")]
        padding: f64,
    },
    Uniform {
        low: f64,
        high: f64,
    },
    /// Piecewise-linear CDF through `(x, cdf)` knots.
    Table {
        x: Vec<f64>,
        cdf: Vec<f64>,
    },
}

fn default_padding() -> f64 {
    DEFAULT_PADDING
}

impl RangeConfig {
    /// `None` when the range must come from the panel.
    pub fn fixed_prior(&self) -> reconcile_core::Result<Option<DecisionMakerPrior>> {
        match self {
            RangeConfig::FromPanel { .. } => Ok(None),
            RangeConfig::Uniform { low, high } => DecisionMakerPrior::uniform(*low, *high).map(Some),
            RangeConfig::Table { x, cdf } => DecisionMakerPrior::table(x.clone(), cdf.clone()).map(Some),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensitivityConfig {
    /// Event to sweep; may be omitted when the panel holds a single event.
    pub quantity: Option<String>,
    /// Values of `a_W = a_B` (rates fixed at 2).
    pub a_values: Vec<f64>,
    /// Decision-maker prior means (prior strength fixed at 2).
    pub prior_means: Vec<f64>,
    pub correlation_draws: usize,
}

impl Default for SensitivityConfig {
    fn default() -> Self {
        Self {
            quantity: None,
            a_values: vec![2.0, 25.0, 50.0, 100.0, 200.0],
            prior_means: vec![0.05, 0.1625, 0.275, 0.3875, 0.5],
            correlation_draws: reconcile_core::events::MIN_CORRELATION_DRAWS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: ModelKind,
    /// Judgement CSV (delphi round schema).
    #[serde(default)]
    pub panel: Option<PathBuf>,
    /// Realization CSV with columns `quantity_id,value`.
    #[serde(default)]
    pub realizations: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Expert id to group label.
    #[serde(default)]
    pub groups: BTreeMap<String, String>,
    /// Default decision-maker range for continuous quantities.
    #[serde(default)]
    pub dm_range: Option<RangeConfig>,
    /// Per-quantity overrides of `dm_range`.
    #[serde(default)]
    pub quantity_ranges: BTreeMap<String, RangeConfig>,
    #[serde(default)]
    pub continuous: ContinuousModelSpec,
    #[serde(default)]
    pub event: EventModelSpec,
    #[serde(default)]
    pub sensitivity: SensitivityConfig,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Continuous,
            panel: None,
            realizations: None,
            seed: None,
            out: None,
            groups: BTreeMap::new(),
            dm_range: None,
            quantity_ranges: BTreeMap::new(),
            continuous: ContinuousModelSpec::default(),
            event: EventModelSpec::default(),
            sensitivity: SensitivityConfig::default(),
            base_dir: PathBuf::from("."),
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub chains: Option<usize>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: RunConfig = toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = Some(s);
        }
        if let Some(c) = o.chains {
            self.continuous.chains = c;
            self.event.chains = c;
        }
        if let Some(out) = &o.out {
            // command-line paths are relative to the working directory
            self.out = Some(std::path::absolute(out).unwrap_or_else(|_| out.clone()));
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .context("no seed given; set `seed` in the config or pass --seed")
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(self.out.as_deref().unwrap_or(Path::new("out")))
    }

    pub fn panel_path(&self) -> Result<PathBuf> {
        let p = self.panel.as_deref().context("config has no `panel` file")?;
        let p = self.resolve(p);
        if !p.is_file() {
            bail!("panel file {} does not exist", p.display());
        }
        Ok(p)
    }

    pub fn realizations_path(&self) -> Result<PathBuf> {
        let p = self
            .realizations
            .as_deref()
            .context("scoring needs a `realizations` file")?;
        let p = self.resolve(p);
        if !p.is_file() {
            bail!("realizations file {} does not exist", p.display());
        }
        Ok(p)
    }

    pub fn range_for(&self, quantity: &str) -> RangeConfig {
        if let Some(r) = self.quantity_ranges.get(quantity).or(self.dm_range.as_ref()) {
            return r.clone();
        }
        match self.model {
            ModelKind::Proportion => RangeConfig::Uniform { low: 0.0, high: 1.0 },
            _ => RangeConfig::FromPanel {
                padding: DEFAULT_PADDING,
            },
        }
    }

    /// SHA-256 of the effective configuration, excluding the output directory.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}
