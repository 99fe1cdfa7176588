use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::aggregate::{normalize_weights, CeConfig};
use crate::ingest::InputFormat;
use crate::polarity::{MethodChoice, PolarityConfig};
use crate::ranking::{EntityExtractor, L1Mode, OfflineExtractor, Orientation, TagmeClient};
use crate::{Error, Result};

/// Weight preset for the five factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    /// 60% on L1 and L2, the rest spread evenly.
    #[default]
    Contrarian,
    /// 60% on L3, 10% on each other factor.
    Acceptance,
    /// `weights` from the configuration, normalized.
    Custom,
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scenario::Contrarian => "contrarian",
            Scenario::Acceptance => "acceptance",
            Scenario::Custom => "custom",
        })
    }
}

/// Factor weights for a scenario; `custom` is required for
/// [`Scenario::Custom`] and ignored otherwise.
pub fn scenario_weights(scenario: Scenario, custom: Option<&[f64; 5]>) -> Result<[f64; 5]> {
    match scenario {
        Scenario::Contrarian => {
            let rest = 0.4 / 3.0;
            Ok([0.3, 0.3, rest, rest, rest])
        }
        Scenario::Acceptance => Ok([0.1, 0.1, 0.6, 0.1, 0.1]),
        Scenario::Custom => {
            let raw = custom.ok_or_else(|| Error::Config("custom scenario needs `weights`".into()))?;
            let w = normalize_weights(raw).map_err(|e| Error::Config(e.to_string()))?;
            Ok([w[0], w[1], w[2], w[3], w[4]])
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractorKind {
    #[default]
    Offline,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractorConfig {
    pub kind: ExtractorKind,
    pub endpoint: Option<String>,
    pub token: String,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
}

impl Default for ExtractorConfig {
    fn default() -> Self {
        Self {
            kind: ExtractorKind::Offline,
            endpoint: None,
            token: String::new(),
            timeout_ms: 5000,
            max_in_flight: 4,
        }
    }
}

impl ExtractorConfig {
    pub fn build(&self) -> Result<Box<dyn EntityExtractor>> {
        match self.kind {
            ExtractorKind::Offline => Ok(Box::new(OfflineExtractor)),
            ExtractorKind::Remote => {
                let endpoint = self
                    .endpoint
                    .clone()
                    .ok_or_else(|| Error::Config("remote extractor needs `endpoint`".into()))?;
                Ok(Box::new(TagmeClient::new(
                    endpoint,
                    self.token.clone(),
                    Duration::from_millis(self.timeout_ms),
                    self.max_in_flight,
                )))
            }
        }
    }
}

/// Everything a run depends on. Serialized as JSON with these field names;
/// missing fields take the defaults below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub format: InputFormat,
    pub out_dir: PathBuf,
    pub min_pair_count: u64,
    pub min_shares: u64,
    pub min_balance: f64,
    /// Hubs per side.
    pub k: usize,
    #[serde(rename = "B")]
    pub buckets: usize,
    pub alpha: f64,
    /// Entries kept per factor list before aggregation.
    pub m: usize,
    /// Recommendations per target.
    pub n: usize,
    pub scenario: Scenario,
    pub weights: Option<[f64; 5]>,
    pub seed: u64,
    /// Worker threads; 0 lets the runtime choose.
    pub workers: usize,
    pub hitting: MethodChoice,
    pub walks: usize,
    pub max_len: Option<usize>,
    pub exact_limit: usize,
    pub l1_mode: L1Mode,
    pub l2_orientation: Orientation,
    pub ce: CeConfig,
    pub extractor: ExtractorConfig,
    /// File with one target user id per line; all graph users when absent.
    pub targets: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            input: None,
            format: InputFormat::Jsonl,
            out_dir: PathBuf::from("out"),
            min_pair_count: 5,
            min_shares: 5,
            min_balance: 0.25,
            k: 10,
            buckets: 10,
            alpha: 1.0,
            m: 50,
            n: 10,
            scenario: Scenario::Contrarian,
            weights: None,
            seed: 0,
            workers: 0,
            hitting: MethodChoice::Auto,
            walks: 2000,
            max_len: None,
            exact_limit: 20_000,
            l1_mode: L1Mode::Exact,
            l2_orientation: Orientation::Opposite,
            ce: CeConfig::default(),
            extractor: ExtractorConfig::default(),
            targets: None,
        }
    }
}

impl RunConfig {
    pub fn from_json(json: &str) -> Result<Self> {
        let config: RunConfig =
            serde_json::from_str(json).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&json)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if self.min_pair_count == 0 || self.min_shares == 0 {
            return fail("thresholds must be at least 1".into());
        }
        if !(0.0..=0.5).contains(&self.min_balance) {
            return fail(format!("min_balance {} outside [0, 0.5]", self.min_balance));
        }
        if self.k == 0 || self.m == 0 || self.n == 0 || self.walks == 0 {
            return fail("k, m, n and walks must be at least 1".into());
        }
        if self.buckets < 2 || self.buckets % 2 != 0 {
            return fail(format!("B must be even and at least 2, got {}", self.buckets));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return fail(format!("alpha must be finite and >= 0, got {}", self.alpha));
        }
        if self.max_len == Some(0) {
            return fail("max_len must be at least 1".into());
        }
        self.ce.validate()?;
        self.weights()?;
        Ok(())
    }

    pub fn weights(&self) -> Result<[f64; 5]> {
        scenario_weights(self.scenario, self.weights.as_ref())
    }

    pub fn polarity(&self) -> PolarityConfig {
        PolarityConfig {
            k: self.k,
            method: self.hitting,
            walks: self.walks,
            max_len: self.max_len,
            exact_limit: self.exact_limit,
            seed: self.seed,
        }
    }
}
