use std::path::{Path as FsPath, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ingest::{SessionSpec, TickSchema};
use crate::error::{Error, Result};
use crate::predictors::PredictorKind;
use crate::sim::ProcessModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Synthetic,
    Ingest,
}

/// Coordinates in which windows are cut.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Space {
    /// Levels `X_t`.
    #[default]
    Price,
    /// Increments `X_{t+1} - X_t`; the flat price forecast becomes the zero
    /// forecast here.
    Returns,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub process: ProcessModel,
    /// Number of simulated points.
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    pub data_path: PathBuf,
    #[serde(default = "default_ts_column")]
    pub timestamp_column: String,
    #[serde(default = "default_price_column")]
    pub price_column: String,
    #[serde(default = "default_instrument")]
    pub instrument: String,
    #[serde(default = "default_session_start")]
    pub session_start: String,
    #[serde(default = "default_session_end")]
    pub session_end: String,
    #[serde(default = "default_interval")]
    pub interval_secs: u32,
    #[serde(default = "default_coverage")]
    pub coverage_threshold: f64,
}

fn default_ts_column() -> String {
    "timestamp".into()
}
fn default_price_column() -> String {
    "price".into()
}
fn default_instrument() -> String {
    "unknown".into()
}
fn default_session_start() -> String {
    "13:00".into()
}
fn default_session_end() -> String {
    "18:00".into()
}
fn default_interval() -> u32 {
    30
}
fn default_coverage() -> f64 {
    0.95
}
fn default_split() -> [f64; 3] {
    [0.7, 0.1, 0.2]
}
fn default_predictors() -> Vec<String> {
    vec!["flat".into(), "linear".into(), "nn".into()]
}

impl IngestConfig {
    pub fn schema(&self) -> TickSchema {
        TickSchema {
            timestamp: self.timestamp_column.clone(),
            price: self.price_column.clone(),
        }
    }

    pub fn session(&self) -> Result<SessionSpec> {
        SessionSpec::parse(&self.session_start, &self.session_end, self.interval_secs, self.coverage_threshold)
    }
}

/// Everything a `run` needs. Parsed from TOML; CLI flags override fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ingest: Option<IngestConfig>,
    pub lookback: usize,
    pub horizon: usize,
    /// Defaults to `horizon` for synthetic paths and to one window per
    /// session for ingested data.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stride: Option<usize>,
    #[serde(default)]
    pub space: Space,
    #[serde(default = "default_split")]
    pub split: [f64; 3],
    #[serde(default = "default_predictors")]
    pub predictors: Vec<String>,
    /// Labels `(A, B)` of the head-to-head comparison. Defaults to the first
    /// two predictors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub compare: Option<[String; 2]>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    /// Parsed predictor kinds, in configured order.
    pub fn predictor_kinds(&self) -> Result<Vec<PredictorKind>> {
        self.predictors.iter().map(|p| PredictorKind::parse(p)).collect()
    }

    pub fn comparison(&self) -> Result<[String; 2]> {
        let labels: Vec<String> = self.predictor_kinds()?.iter().map(PredictorKind::label).collect();
        let pair = match &self.compare {
            Some(pair) => pair.clone(),
            None if labels.len() >= 2 => [labels[0].clone(), labels[1].clone()],
            None => {
                return Err(Error::InvalidConfig("need at least two predictors to compare".into()));
            }
        };
        for l in &pair {
            if !labels.contains(l) {
                return Err(Error::InvalidConfig(format!("compared predictor {l:?} is not configured")));
            }
        }
        if pair[0] == pair[1] {
            return Err(Error::InvalidConfig("compared predictors must differ".into()));
        }
        Ok(pair)
    }

    /// Checks every field that can be checked without touching data.
    pub fn validate(&self) -> Result<()> {
        if self.lookback == 0 || self.horizon == 0 {
            return Err(Error::InvalidConfig(format!(
                "lookback and horizon must be >= 1 (got L={}, H={})",
                self.lookback, self.horizon
            )));
        }
        if self.stride == Some(0) {
            return Err(Error::InvalidConfig("stride must be >= 1".into()));
        }
        if self.split.iter().any(|f| !(f.is_finite() && *f > 0.0)) || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "split fractions must be positive and sum to 1, got {:?}",
                self.split
            )));
        }
        let kinds = self.predictor_kinds()?;
        let mut labels: Vec<String> = kinds.iter().map(PredictorKind::label).collect();
        labels.sort();
        labels.dedup();
        if labels.len() != kinds.len() {
            return Err(Error::InvalidConfig("predictor list contains duplicates".into()));
        }
        self.comparison()?;
        match self.mode {
            Mode::Synthetic => {
                let syn = self
                    .synthetic
                    .as_ref()
                    .ok_or_else(|| Error::InvalidConfig("synthetic mode needs a [synthetic] table".into()))?;
                syn.process.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
                if syn.length < 2 {
                    return Err(Error::InvalidConfig("synthetic length must be >= 2".into()));
                }
            }
            Mode::Ingest => {
                let ing = self
                    .ingest
                    .as_ref()
                    .ok_or_else(|| Error::InvalidConfig("ingest mode needs an [ingest] table".into()))?;
                ing.session()?;
                if kinds.contains(&PredictorKind::Oracle) {
                    return Err(Error::InvalidConfig("the oracle predictor needs synthetic data".into()));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, ignoring `output_dir`.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = None;
        let json = serde_json::to_vec(&canonical).expect("config serialises");
        hex::encode(Sha256::digest(&json))
    }
}
