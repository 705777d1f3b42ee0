//! Run configuration (TOML). Relative paths resolve against the directory
//! of the configuration file.
//!
//! ```toml
//! strategy = "s1"              # default for every kind
//! k = 10
//! batch_size = 64
//! jobs = 1
//! cache_dir = "cache"
//!
//! [strategies]                 # optional per-kind overrides
//! occupation = "s3"
//!
//! [paths]
//! occupations = "data/occupations_en.csv"
//! skills = "data/skills_en.csv"
//! qualifications = "data/eqf.csv"
//!
//! [provider]
//! type = "service"             # or "hash" (dim = N) / "replay" (path = ...)
//! address = "127.0.0.1:7878"   # or command = ["python", "-m", "bridge", "--stdio"]
//!
//! [labeler]
//! type = "gold"                # or "service"
//! path = "data/annotations.jsonl"
//! ```

use std::collections::BTreeMap;
use std::io;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use taxolink_core::embedding::DEFAULT_BATCH_SIZE;
use taxolink_core::sentence::DEFAULT_K;
use taxolink_core::{EmbeddingProvider, EmbeddingStrategy, EntityKind, LabelerError, ProviderError, SequenceLabeler};

use crate::error::{Error, IngestError, Result};
use crate::replay::{GoldLabeler, ReplayProvider};
use crate::service::{Endpoint, ServiceLabeler, ServiceProvider};

pub type DynProvider = Box<dyn EmbeddingProvider + Send>;
pub type DynLabeler = Box<dyn SequenceLabeler + Send>;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub occupations: Option<PathBuf>,
    pub skills: Option<PathBuf>,
    pub qualifications: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ProviderConfig {
    Hash {
        dim: usize,
    },
    Replay {
        path: PathBuf,
    },
    Service {
        address: Option<String>,
        command: Option<Vec<String>>,
    },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LabelerConfig {
    Gold {
        path: PathBuf,
    },
    Service {
        address: Option<String>,
        command: Option<Vec<String>>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    strategy: Option<String>,
    #[serde(default)]
    strategies: BTreeMap<String, String>,
    #[serde(default)]
    k: Option<usize>,
    #[serde(default)]
    batch_size: Option<usize>,
    #[serde(default)]
    jobs: Option<usize>,
    #[serde(default)]
    cache_dir: Option<PathBuf>,
    #[serde(default)]
    paths: Paths,
    #[serde(default)]
    provider: Option<ProviderConfig>,
    #[serde(default)]
    labeler: Option<LabelerConfig>,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub strategy: EmbeddingStrategy,
    pub strategies: BTreeMap<EntityKind, EmbeddingStrategy>,
    pub k: usize,
    pub batch_size: usize,
    pub jobs: usize,
    pub cache_dir: PathBuf,
    pub paths: Paths,
    pub provider: Option<ProviderConfig>,
    pub labeler: Option<LabelerConfig>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            strategy: EmbeddingStrategy::PreferredLabel,
            strategies: BTreeMap::new(),
            k: DEFAULT_K,
            batch_size: DEFAULT_BATCH_SIZE,
            jobs: 1,
            cache_dir: PathBuf::from("cache"),
            paths: Paths::default(),
            provider: None,
            labeler: None,
        }
    }
}

fn rebase(base: &Path, p: PathBuf) -> PathBuf {
    if p.is_absolute() {
        p
    } else {
        base.join(p)
    }
}

fn endpoint(address: Option<String>, command: Option<Vec<String>>) -> Result<Endpoint> {
    match (address, command) {
        (Some(a), None) => Ok(Endpoint::Tcp(a)),
        (None, Some(c)) if !c.is_empty() => Ok(Endpoint::Command(c)),
        (None, None) if std::env::var(crate::service::ADDRESS_ENV).is_ok() => Ok(Endpoint::Tcp(String::new())),
        _ => Err(Error::Config(
            "a service needs exactly one of `address` or `command`".to_string(),
        )),
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let parse_strategy = |s: &str| s.parse::<EmbeddingStrategy>().map_err(|e| Error::Config(e.to_string()));
        let mut strategies = BTreeMap::new();
        for (kind, s) in &raw.strategies {
            let kind: EntityKind = kind
                .parse()
                .map_err(|e: taxolink_core::taxonomy::UnknownEntityKind| Error::Config(e.to_string()))?;
            strategies.insert(kind, parse_strategy(s)?);
        }
        let defaults = Config::default();
        let config = Config {
            strategy: raw
                .strategy
                .as_deref()
                .map(parse_strategy)
                .transpose()?
                .unwrap_or(defaults.strategy),
            strategies,
            k: raw.k.unwrap_or(defaults.k),
            batch_size: raw.batch_size.unwrap_or(defaults.batch_size),
            jobs: raw.jobs.unwrap_or(defaults.jobs),
            cache_dir: rebase(base, raw.cache_dir.unwrap_or(defaults.cache_dir)),
            paths: Paths {
                occupations: raw.paths.occupations.map(|p| rebase(base, p)),
                skills: raw.paths.skills.map(|p| rebase(base, p)),
                qualifications: raw.paths.qualifications.map(|p| rebase(base, p)),
            },
            provider: raw.provider.map(|p| match p {
                ProviderConfig::Replay { path } => ProviderConfig::Replay {
                    path: rebase(base, path),
                },
                other => other,
            }),
            labeler: raw.labeler.map(|l| match l {
                LabelerConfig::Gold { path } => LabelerConfig::Gold {
                    path: rebase(base, path),
                },
                other => other,
            }),
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".to_string()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".to_string()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".to_string()));
        }
        if let Some(ProviderConfig::Hash { dim: 0 }) = self.provider {
            return Err(Error::Config("hash provider dimension must be positive".to_string()));
        }
        for p in [&self.paths.occupations, &self.paths.skills, &self.paths.qualifications]
            .into_iter()
            .flatten()
        {
            if !p.exists() {
                return Err(IngestError::Io {
                    path: p.clone(),
                    source: io::Error::new(io::ErrorKind::NotFound, "file does not exist"),
                }
                .into());
            }
        }
        if let Some(ProviderConfig::Replay { path }) = &self.provider {
            if !path.exists() {
                return Err(Error::Provider {
                    context: "embedding provider".to_string(),
                    source: ProviderError::Unavailable(format!("replay file {} does not exist", path.display())),
                });
            }
        }
        if let Some(LabelerConfig::Gold { path }) = &self.labeler {
            if !path.exists() {
                return Err(Error::Labeler {
                    context: "sequence labeler".to_string(),
                    source: LabelerError::Unavailable(format!("annotation file {} does not exist", path.display())),
                });
            }
        }
        Ok(())
    }

    pub fn strategy_for(&self, kind: EntityKind) -> EmbeddingStrategy {
        self.strategies.get(&kind).copied().unwrap_or(self.strategy)
    }

    pub fn reference_path(&self, kind: EntityKind) -> Option<&Path> {
        match kind {
            EntityKind::Occupation => self.paths.occupations.as_deref(),
            EntityKind::Skill => self.paths.skills.as_deref(),
            EntityKind::Qualification => self.paths.qualifications.as_deref(),
        }
    }

    /// Kinds with a configured reference file, in canonical order.
    pub fn configured_kinds(&self) -> Vec<EntityKind> {
        EntityKind::ALL
            .into_iter()
            .filter(|k| self.reference_path(*k).is_some())
            .collect()
    }

    pub fn open_provider(&self) -> Result<DynProvider> {
        let provider_err = |source| Error::Provider {
            context: "embedding provider".to_string(),
            source,
        };
        match self.provider.clone() {
            None => Err(Error::Config("no [provider] configured".to_string())),
            Some(ProviderConfig::Hash { dim }) => Ok(Box::new(taxolink_core::HashEmbedder::new(dim))),
            Some(ProviderConfig::Replay { path }) => Ok(Box::new(ReplayProvider::load(&path)?)),
            Some(ProviderConfig::Service { address, command }) => {
                let ep = endpoint(address, command)?.resolve();
                Ok(Box::new(ServiceProvider::connect(&ep).map_err(provider_err)?))
            }
        }
    }

    pub fn open_labeler(&self) -> Result<DynLabeler> {
        let labeler_err = |source| Error::Labeler {
            context: "sequence labeler".to_string(),
            source,
        };
        match self.labeler.clone() {
            None => Err(Error::Config("no [labeler] configured".to_string())),
            Some(LabelerConfig::Gold { path }) => Ok(Box::new(GoldLabeler::load(&path)?)),
            Some(LabelerConfig::Service { address, command }) => {
                let ep = endpoint(address, command)?.resolve();
                Ok(Box::new(ServiceLabeler::connect(&ep).map_err(labeler_err)?))
            }
        }
    }
}
