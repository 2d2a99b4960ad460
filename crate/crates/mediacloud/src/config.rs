//! Service configuration: a TOML file with environment overrides.
//!
//! ```toml
//! listen = "127.0.0.1:8080"
//! data_dir = "data"
//! fetch_mode = "fixture"      # or "live"
//! corpus = "fixtures/web"     # fixture mode only
//! politeness_ms = 1000
//! workers = 4
//! api_keys = []               # empty disables key checks
//! ```
//!
//! `LISTEN_ADDR`, `DATA_DIR` and `FETCH_MODE` override the file.

use crate::fetch::{FixtureFetcher, Fetcher, LiveConfig, LiveFetcher};
use crate::textproc::TextProcessor;
use crate::topics::TableShares;
use mediacloud_core::text::DetectorConfig;
use serde::Deserialize;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("parsing {path}: {source}")]
    Parse { path: PathBuf, source: Box<toml::de::Error> },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum FetchMode {
    Live,
    Fixture,
}

impl FromStr for FetchMode {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "live" => Ok(FetchMode::Live),
            "fixture" => Ok(FetchMode::Fixture),
            other => Err(ConfigError::Invalid(format!("fetch mode {other:?}, expected live or fixture"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub listen: String,
    pub data_dir: PathBuf,
    pub fetch_mode: FetchMode,
    pub corpus: Option<PathBuf>,
    pub politeness_ms: u64,
    pub workers: usize,
    pub api_keys: Vec<String>,
    /// `url<TAB>count` share table used after spidering.
    pub shares: Option<PathBuf>,
    pub language_min_chars: usize,
    pub language_min_similarity: f64,
}

impl Default for Config {
    fn default() -> Self {
        let lang = DetectorConfig::default();
        Config {
            listen: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("data"),
            fetch_mode: FetchMode::Fixture,
            corpus: None,
            politeness_ms: 1000,
            workers: 4,
            api_keys: Vec::new(),
            shares: None,
            language_min_chars: lang.min_chars,
            language_min_similarity: lang.min_similarity,
        }
    }
}

pub const STORE_FILE: &str = "store.jsonl";

impl Config {
    /// Reads `path` if given, then applies environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let mut config = match path {
            None => Config::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read { path: p.into(), source })?;
                toml::from_str(&text).map_err(|e| ConfigError::Parse { path: p.into(), source: Box::new(e) })?
            }
        };
        config.apply_env(|k| std::env::var(k).ok())?;
        Ok(config)
    }

    pub fn apply_env(&mut self, var: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = var("LISTEN_ADDR") {
            self.listen = v;
        }
        if let Some(v) = var("DATA_DIR") {
            self.data_dir = v.into();
        }
        if let Some(v) = var("FETCH_MODE") {
            self.fetch_mode = v.parse()?;
        }
        Ok(())
    }

    pub fn listen_addr(&self) -> Result<SocketAddr, ConfigError> {
        self.listen.parse().map_err(|_| ConfigError::Invalid(format!("listen address {:?}", self.listen)))
    }

    /// Creates the data directory if needed and checks the other settings.
    pub fn prepare(&self) -> Result<(), ConfigError> {
        std::fs::create_dir_all(&self.data_dir)
            .map_err(|source| ConfigError::Read { path: self.data_dir.clone(), source })?;
        self.listen_addr()?;
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be at least 1".into()));
        }
        if self.fetch_mode == FetchMode::Fixture && self.corpus.is_none() {
            return Err(ConfigError::Invalid("fixture mode needs a corpus directory".into()));
        }
        Ok(())
    }

    pub fn store_path(&self) -> PathBuf {
        self.data_dir.join(STORE_FILE)
    }

    pub fn fetcher(&self) -> Result<Arc<dyn Fetcher>, ConfigError> {
        match self.fetch_mode {
            FetchMode::Fixture => {
                let dir = self.corpus.as_ref().ok_or_else(|| ConfigError::Invalid("fixture mode needs a corpus directory".into()))?;
                let f = FixtureFetcher::open(dir).map_err(|e| ConfigError::Invalid(format!("corpus {}: {e}", dir.display())))?;
                Ok(Arc::new(f))
            }
            FetchMode::Live => {
                let live = LiveConfig { politeness: Duration::from_millis(self.politeness_ms), ..LiveConfig::default() };
                let f = LiveFetcher::new(live).map_err(|e| ConfigError::Invalid(format!("http client: {e}")))?;
                Ok(Arc::new(f))
            }
        }
    }

    pub fn text_processor(&self) -> TextProcessor {
        TextProcessor::new(DetectorConfig {
            min_chars: self.language_min_chars,
            min_similarity: self.language_min_similarity,
            ..DetectorConfig::default()
        })
    }

    pub fn share_table(&self) -> Result<Option<TableShares>, ConfigError> {
        let Some(path) = &self.shares else { return Ok(None) };
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.clone(), source })?;
        TableShares::parse(&text).map(Some).map_err(ConfigError::Invalid)
    }
}
