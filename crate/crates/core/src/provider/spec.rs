use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{ChatProvider, EmbeddingProvider, HttpConfig, HttpProvider, MockProvider, ProviderError, ReplayProvider};

/// A backend serving both contracts.
pub trait Backend: ChatProvider + EmbeddingProvider {}

impl<P: ChatProvider + EmbeddingProvider + ?Sized> Backend for P {}

/// Which backend to build: `http`, `mock[:<script.json>]` or
/// `replay:<transcript.jsonl>` on the command line; a `kind`-tagged table in
/// config files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProviderSpec {
    Http(HttpConfig),
    Mock {
        #[serde(default)]
        script: Option<PathBuf>,
    },
    Replay {
        transcript: PathBuf,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum ProviderSpecError {
    #[error("unknown provider {0:?} (expected http, mock[:script] or replay:transcript)")]
    Unknown(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error(transparent)]
    Provider(#[from] ProviderError),
}

impl FromStr for ProviderSpec {
    type Err = ProviderSpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "http" => Ok(Self::Http(HttpConfig::default())),
            None if s == "mock" => Ok(Self::Mock { script: None }),
            Some(("mock", path)) if !path.is_empty() => Ok(Self::Mock {
                script: Some(path.into()),
            }),
            Some(("replay", path)) if !path.is_empty() => Ok(Self::Replay {
                transcript: path.into(),
            }),
            _ => Err(ProviderSpecError::Unknown(s.to_string())),
        }
    }
}

fn read(path: &Path) -> Result<String, ProviderSpecError> {
    std::fs::read_to_string(path).map_err(|source| ProviderSpecError::Io {
        path: path.display().to_string(),
        source,
    })
}

impl ProviderSpec {
    /// Relative paths are resolved against `base`.
    pub fn resolve(mut self, base: &Path) -> Self {
        match &mut self {
            Self::Mock { script: Some(p) } | Self::Replay { transcript: p } if p.is_relative() => {
                *p = base.join(&*p);
            }
            _ => {}
        }
        self
    }

    /// Builds the backend; an HTTP backend picks its key up from the
    /// environment.
    pub fn build(&self) -> Result<Arc<dyn Backend>, ProviderSpecError> {
        Ok(match self {
            Self::Http(config) => Arc::new(HttpProvider::new(config.clone().with_env_key())?),
            Self::Mock { script: None } => Arc::new(MockProvider::default()),
            Self::Mock { script: Some(path) } => {
                let text = read(path)?;
                Arc::new(MockProvider::from_json(&text).map_err(|e| ProviderSpecError::Invalid {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?)
            }
            Self::Replay { transcript } => {
                let text = read(transcript)?;
                Arc::new(ReplayProvider::from_jsonl(&text).map_err(|e| ProviderSpecError::Invalid {
                    path: transcript.display().to_string(),
                    message: e.to_string(),
                })?)
            }
        })
    }
}
