//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use eprnet_core::spectrum::{ChannelGeometry, SourceParams, REFERENCE_PEAK_RATE};
use eprnet_core::Strategy;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config JSON: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default = "default_name")]
    pub name: String,
    pub topology: TopologySource,
    #[serde(default)]
    pub sources: Sources,
    /// WSS insertion losses to sweep, dB.
    #[serde(default = "default_l_wss")]
    pub l_wss: Vec<f64>,
    #[serde(default)]
    pub memory_loss_db: f64,
    pub strategies: Vec<Strategy>,
    #[serde(default = "default_scale")]
    pub first_fit_scale: f64,
    /// Random topologies per grid cell; replication `r` uses seed `base_seed + r`.
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_seed")]
    pub base_seed: u64,
    /// The exact solver only runs when `m * kappa` is at most this.
    #[serde(default = "default_exact_max_size")]
    pub exact_max_size: usize,
    #[serde(default = "default_exact_budget")]
    pub exact_budget_s: f64,
    /// Runs of the exact solver with shuffled pair order; median and Jain
    /// index are averaged over them.
    #[serde(default = "default_exact_runs")]
    pub exact_runs: usize,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TopologySource {
    Ilec,
    File {
        path: PathBuf,
    },
    WsGrid {
        #[serde(default = "default_ws_n")]
        n: Vec<usize>,
        #[serde(default = "default_ws_k_over_n")]
        k_over_n: Vec<f64>,
        #[serde(default = "default_ws_beta")]
        beta: Vec<f64>,
        #[serde(default = "default_edge_length")]
        edge_length_km: f64,
        #[serde(default = "default_max_attempts")]
        max_attempts: u64,
    },
}

/// `"all"` or a list of node labels.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Sources {
    #[default]
    All,
    List(Vec<String>),
}

impl Serialize for Sources {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Sources::All => s.serialize_str("all"),
            Sources::List(v) => v.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Sources {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Word(String),
            List(Vec<String>),
        }
        match Raw::deserialize(d)? {
            Raw::Word(w) if w == "all" => Ok(Sources::All),
            Raw::Word(w) => Err(serde::de::Error::custom(format!("sources must be \"all\" or a list, got {w:?}"))),
            Raw::List(v) => Ok(Sources::List(v)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    #[serde(default = "SourceParams::table_defaults")]
    pub source: SourceParams,
    #[serde(default = "ChannelGeometry::reference")]
    pub geometry: ChannelGeometry,
    /// Rate of the strongest reference channel; sets the repetition rate.
    #[serde(default = "default_peak")]
    pub peak_rate: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { source: SourceParams::table_defaults(), geometry: ChannelGeometry::reference(), peak_rate: REFERENCE_PEAK_RATE }
    }
}

fn default_name() -> String {
    "experiment".into()
}
fn default_l_wss() -> Vec<f64> {
    vec![4.0, 8.0]
}
fn default_scale() -> f64 {
    1.0
}
fn default_replications() -> usize {
    40
}
fn default_seed() -> u64 {
    1
}
fn default_exact_max_size() -> usize {
    256
}
fn default_exact_budget() -> f64 {
    30.0
}
fn default_exact_runs() -> usize {
    1
}
fn default_peak() -> f64 {
    REFERENCE_PEAK_RATE
}
fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}
fn default_ws_n() -> Vec<usize> {
    vec![10, 20, 30, 40]
}
fn default_ws_k_over_n() -> Vec<f64> {
    vec![0.2, 0.4, 0.6, 0.8]
}
fn default_ws_beta() -> Vec<f64> {
    vec![0.2, 0.5, 0.8]
}
fn default_edge_length() -> f64 {
    5.0
}
fn default_max_attempts() -> u64 {
    1_000_000
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file. A relative topology path is taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        let mut config = Self::from_json(&text)?;
        if let TopologySource::File { path: topo } = &mut config.topology {
            if topo.is_relative() {
                if let Some(dir) = path.parent() {
                    *topo = dir.join(&*topo);
                }
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError::Invalid(msg));
        if self.strategies.is_empty() {
            return bad("strategy list is empty".into());
        }
        if self.l_wss.is_empty() {
            return bad("l_wss list is empty".into());
        }
        if let Some(l) = self.l_wss.iter().find(|l| !(l.is_finite() && **l >= 0.0)) {
            return bad(format!("l_wss {l} must be a non-negative number"));
        }
        if !(self.memory_loss_db.is_finite() && self.memory_loss_db >= 0.0) {
            return bad(format!("memory_loss_db {} must be non-negative", self.memory_loss_db));
        }
        if self.replications == 0 {
            return bad("replications must be at least 1".into());
        }
        if !(self.first_fit_scale.is_finite() && self.first_fit_scale > 0.0) {
            return bad(format!("first_fit_scale {} must be positive", self.first_fit_scale));
        }
        if !(self.exact_budget_s.is_finite() && self.exact_budget_s > 0.0) {
            return bad(format!("exact_budget_s {} must be positive", self.exact_budget_s));
        }
        if self.exact_runs == 0 {
            return bad("exact_runs must be at least 1".into());
        }
        if !(self.spectrum.peak_rate.is_finite() && self.spectrum.peak_rate > 0.0) {
            return bad("spectrum.peak_rate must be positive".into());
        }
        if let Sources::List(v) = &self.sources {
            if v.is_empty() {
                return bad("source list is empty".into());
            }
        }
        if let TopologySource::WsGrid { n, k_over_n, beta, edge_length_km, max_attempts } = &self.topology {
            if n.is_empty() || k_over_n.is_empty() || beta.is_empty() {
                return bad("ws_grid lists must be nonempty".into());
            }
            if let Some(x) = n.iter().find(|&&x| x < 3) {
                return bad(format!("ws_grid n={x} is below 3"));
            }
            if let Some(x) = k_over_n.iter().find(|x| !(**x > 0.0 && **x < 1.0)) {
                return bad(format!("ws_grid k_over_n={x} outside (0, 1)"));
            }
            if let Some(x) = beta.iter().find(|x| !(0.0..=1.0).contains(*x)) {
                return bad(format!("ws_grid beta={x} outside [0, 1]"));
            }
            if !(edge_length_km.is_finite() && *edge_length_km > 0.0) {
                return bad("ws_grid edge_length_km must be positive".into());
            }
            if *max_attempts == 0 {
                return bad("ws_grid max_attempts must be positive".into());
            }
        }
        Ok(())
    }

    /// First 64 bits of the SHA-256 of the canonical JSON form, in hex.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}
