//! Run configuration: one file (JSON or TOML, or a previous run manifest)
//! with per-module sections. Command-line flags are applied on top.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{AdaptConfig, BuildConfig};
use crate::eval::{default_grid, DEFAULT_BATCH_SIZE};
use crate::scorer::TrainConfig;
use crate::segmenter::SegmenterConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    pub threshold: f64,
    pub grid: Vec<f64>,
    pub batch_size: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            threshold: 0.5,
            grid: default_grid(),
            batch_size: DEFAULT_BATCH_SIZE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerClientConfig {
    /// Seconds to wait for any single line from an external scorer.
    pub timeout_secs: f64,
}

impl Default for ScorerClientConfig {
    fn default() -> Self {
        ScorerClientConfig { timeout_secs: 60.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// The single seed for every random choice; copied into each section.
    pub seed: u64,
    pub jobs: usize,
    pub build: BuildConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub segment: SegmenterConfig,
    pub adapt: AdaptConfig,
    pub scorer: ScorerClientConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            jobs: 1,
            build: BuildConfig::default(),
            train: TrainConfig::default(),
            eval: EvalConfig::default(),
            segment: SegmenterConfig::default(),
            adapt: AdaptConfig::default(),
            scorer: ScorerClientConfig::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid config {path}: {message}")]
    Parse { path: String, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl RunConfig {
    pub fn parse_str(data: &str, is_toml: bool, path: &str) -> Result<Self, ConfigError> {
        let parse_err = |message: String| ConfigError::Parse { path: path.to_string(), message };
        if is_toml {
            return toml::from_str(data).map_err(|e| parse_err(e.to_string()));
        }
        let mut value: serde_json::Value = serde_json::from_str(data).map_err(|e| parse_err(e.to_string()))?;
        if let Some(snapshot) = value.get_mut("config_snapshot") {
            value = snapshot.take();
        }
        serde_json::from_value(value).map_err(|e| parse_err(e.to_string()))
    }

    /// Reads `.toml` as TOML and anything else as JSON. A run manifest is
    /// accepted and its `config_snapshot` used.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let display = path.display().to_string();
        let data = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: display.clone(), source })?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        Self::parse_str(&data, is_toml, &display)
    }

    /// Propagates the top-level seed and checks every section.
    pub fn resolve(mut self) -> Result<Self, ConfigError> {
        self.build.seed = self.seed;
        self.train.seed = self.seed;
        if self.jobs == 0 {
            return Err(ConfigError::Invalid("jobs must be at least 1".into()));
        }
        self.build.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.train.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.segment.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !(self.eval.threshold > 0.0 && self.eval.threshold < 1.0) {
            return Err(ConfigError::Invalid(format!("eval.threshold {} outside (0, 1)", self.eval.threshold)));
        }
        if self.eval.batch_size == 0 {
            return Err(ConfigError::Invalid("eval.batch_size must be at least 1".into()));
        }
        if self.adapt.min_context == 0 || self.adapt.min_context > self.adapt.max_context {
            return Err(ConfigError::Invalid("need 1 <= adapt.min_context <= adapt.max_context".into()));
        }
        if !(self.scorer.timeout_secs.is_finite() && self.scorer.timeout_secs > 0.0) {
            return Err(ConfigError::Invalid("scorer.timeout_secs must be positive".into()));
        }
        Ok(self)
    }
}
