//! Pipeline configuration: a `key = value` text file whose keys can all be
//! overridden (flags win over file values).
//!
//! ```text
//! # run.conf
//! input    = data/corpus.tsv
//! kept     = out/kept.jsonl
//! rejected = out/rejected.jsonl
//! stats    = out/stats.json
//! manifest = out/manifest.json
//! tau      = 0.7
//! provider = mock
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::CorpusFormat;
use crate::model::SimilarityThreshold;
use crate::similarity::{EmbeddingProvider, MockProvider, RemoteProvider, MOCK_DIM};

pub const KEYS: &[&str] = &[
    "input",
    "format",
    "kept",
    "rejected",
    "unscored",
    "stats",
    "manifest",
    "tau",
    "provider",
    "provider_url",
    "provider_batch",
    "provider_dim",
    "cache",
    "jobs",
    "queue",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProviderConfig {
    Mock {
        dim: usize,
    },
    Remote {
        url: String,
        batch: usize,
        dim: usize,
    },
}

impl ProviderConfig {
    pub fn build(&self) -> Result<Box<dyn EmbeddingProvider>> {
        Ok(match self {
            ProviderConfig::Mock { dim } => Box::new(MockProvider::new(*dim, 1024)),
            ProviderConfig::Remote { url, batch, dim } => {
                Box::new(RemoteProvider::new(url.clone(), *dim, *batch)?)
            }
        })
    }

    /// Reads `provider`, `provider_url`, `provider_batch` and `provider_dim`;
    /// `env_url` is used when no URL is given.
    pub fn from_map(map: &BTreeMap<String, String>, env_url: Option<&str>) -> Result<Self> {
        let kind = map.get("provider").map(String::as_str).unwrap_or("mock");
        let num = |key: &str, default: Option<usize>| -> Result<usize> {
            match map.get(key) {
                Some(v) => v.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| {
                    Error::Config(format!("{key} must be a positive integer, got {v:?}"))
                }),
                None => default.ok_or_else(|| Error::Config(format!("{key} is required"))),
            }
        };
        match kind {
            "mock" => Ok(ProviderConfig::Mock {
                dim: num("provider_dim", Some(MOCK_DIM))?,
            }),
            "remote" => {
                let url = map
                    .get("provider_url")
                    .cloned()
                    .or_else(|| env_url.map(str::to_string))
                    .ok_or_else(|| {
                        Error::Config(
                            "remote provider needs provider_url or BITEXT_PROVIDER_URL".into(),
                        )
                    })?;
                Ok(ProviderConfig::Remote {
                    url,
                    batch: num("provider_batch", Some(RemoteProvider::DEFAULT_BATCH))?,
                    dim: num("provider_dim", None)?,
                })
            }
            other => Err(Error::Config(format!(
                "unknown provider {other:?} (expected mock or remote)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub input_path: PathBuf,
    pub input_format: CorpusFormat,
    pub kept_path: PathBuf,
    pub rejected_path: PathBuf,
    pub unscored_path: Option<PathBuf>,
    pub stats_path: PathBuf,
    pub manifest_path: PathBuf,
    pub tau: SimilarityThreshold,
    pub provider: ProviderConfig,
    pub cache_path: Option<PathBuf>,
    pub jobs: usize,
    pub queue_capacity: usize,
}

/// Parses `key = value` lines. Blank lines and `#` comments are ignored.
pub fn parse_config_text(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(Error::Config(format!("line {}: unknown key {k:?}", i + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!(
                "line {}: duplicate key {k:?}",
                i + 1
            )));
        }
    }
    Ok(map)
}

pub fn read_config_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_text(&text)
}

impl PipelineConfig {
    pub const DEFAULT_QUEUE: usize = 10_000;

    pub fn from_map(map: &BTreeMap<String, String>, env_url: Option<&str>) -> Result<Self> {
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown key {k:?}")));
        }
        let path = |key: &str| -> Result<PathBuf> {
            map.get(key)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from)
                .ok_or_else(|| Error::Config(format!("{key} is required")))
        };
        let opt_path = |key: &str| map.get(key).filter(|v| !v.is_empty()).map(PathBuf::from);
        let input_path = path("input")?;
        let input_format = match map.get("format") {
            Some(f) => f.parse()?,
            None => CorpusFormat::from_path(&input_path).ok_or_else(|| {
                Error::Config(format!(
                    "cannot infer format of {}; set format = tsv|jsonl",
                    input_path.display()
                ))
            })?,
        };
        let tau = match map.get("tau") {
            Some(t) => t.parse()?,
            None => SimilarityThreshold::default(),
        };
        let count = |key: &str, default: usize| -> Result<usize> {
            map.get(key).map_or(Ok(default), |v| {
                v.parse::<usize>().ok().filter(|&n| n > 0).ok_or_else(|| {
                    Error::Config(format!("{key} must be a positive integer, got {v:?}"))
                })
            })
        };
        let cfg = PipelineConfig {
            input_path,
            input_format,
            kept_path: path("kept")?,
            rejected_path: path("rejected")?,
            unscored_path: opt_path("unscored"),
            stats_path: path("stats")?,
            manifest_path: path("manifest")?,
            tau,
            provider: ProviderConfig::from_map(map, env_url)?,
            cache_path: opt_path("cache"),
            jobs: count("jobs", 1)?,
            queue_capacity: count("queue", Self::DEFAULT_QUEUE)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut paths: Vec<&Path> = vec![
            &self.input_path,
            &self.kept_path,
            &self.rejected_path,
            &self.stats_path,
            &self.manifest_path,
        ];
        paths.extend(self.unscored_path.as_deref());
        paths.extend(self.cache_path.as_deref());
        let mut seen = BTreeSet::new();
        for p in paths {
            if !seen.insert(p) {
                return Err(Error::Config(format!(
                    "path {} is used for more than one role",
                    p.display()
                )));
            }
        }
        if self.jobs == 0 || self.queue_capacity == 0 {
            return Err(Error::Config("jobs and queue must be positive".into()));
        }
        Ok(())
    }
}
