use std::path::{Path, PathBuf};

use qualnet_core::pipeline::PipelineConfig;
use qualnet_core::provider::ProviderSpec;
use serde::{Deserialize, Serialize};

pub const BIND_ENV: &str = "QUALNET_BIND";
pub const API_KEY_ENV: &str = qualnet_core::provider::API_KEY_ENV;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        source: toml::de::Error,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSettings {
    pub parallelism: usize,
    pub temperature: f64,
    pub nearest_k: usize,
}

impl Default for PipelineSettings {
    fn default() -> Self {
        let d = PipelineConfig::default();
        Self {
            parallelism: d.parallelism,
            temperature: d.temperature,
            nearest_k: d.nearest_k,
        }
    }
}

impl PipelineSettings {
    pub fn to_config(&self) -> PipelineConfig {
        PipelineConfig {
            parallelism: self.parallelism.max(1),
            temperature: self.temperature,
            nearest_k: self.nearest_k,
            ..PipelineConfig::default()
        }
    }
}

/// Service settings, read from TOML:
///
/// ```toml
/// bind = "127.0.0.1:8080"
/// data_dir = "projects"
/// max_jobs = 2
/// # auth_token = "shared-secret"
///
/// [provider]
/// kind = "mock"
/// script = "mock_script.json"
///
/// [pipeline]
/// parallelism = 4
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub bind: String,
    pub data_dir: PathBuf,
    /// When set, every request must carry `Authorization: Bearer <token>`.
    pub auth_token: Option<String>,
    /// Pipeline jobs allowed to run at once; others wait as `pending`.
    pub max_jobs: usize,
    pub provider: ProviderSpec,
    pub pipeline: PipelineSettings,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            bind: "127.0.0.1:8080".into(),
            data_dir: PathBuf::from("projects"),
            auth_token: None,
            max_jobs: 2,
            provider: ProviderSpec::Mock { script: None },
            pipeline: PipelineSettings::default(),
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, toml::de::Error> {
        toml::from_str(text)
    }

    /// Reads `path`, resolves relative paths against its directory and
    /// applies environment overrides.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let config = Self::from_toml(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Ok(config.resolve(base).with_env(|k| std::env::var(k).ok()))
    }

    pub fn resolve(mut self, base: &Path) -> Self {
        if self.data_dir.is_relative() {
            self.data_dir = base.join(&self.data_dir);
        }
        self.provider = self.provider.resolve(base);
        self
    }

    /// `QUALNET_BIND` replaces `bind`; `QUALNET_API_KEY` becomes the HTTP
    /// provider's key.
    pub fn with_env(mut self, var: impl Fn(&str) -> Option<String>) -> Self {
        if let Some(bind) = var(BIND_ENV).filter(|b| !b.is_empty()) {
            self.bind = bind;
        }
        if let (ProviderSpec::Http(http), Some(key)) = (&mut self.provider, var(API_KEY_ENV)) {
            if !key.is_empty() {
                http.api_key = Some(key);
            }
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_with_env_overrides() {
        let text = r#"
bind = "0.0.0.0:9000"
data_dir = "data"

[provider]
kind = "http"
model = "gpt-4.1-mini"

[pipeline]
parallelism = 8
"#;
        let config = ServiceConfig::from_toml(text)
            .unwrap()
            .resolve(Path::new("/srv"))
            .with_env(|k| match k {
                BIND_ENV => Some("127.0.0.1:1".into()),
                API_KEY_ENV => Some("sk-test".into()),
                _ => None,
            });
        assert_eq!(config.bind, "127.0.0.1:1");
        assert_eq!(config.data_dir, PathBuf::from("/srv/data"));
        assert_eq!(config.pipeline.parallelism, 8);
        let ProviderSpec::Http(http) = &config.provider else { panic!() };
        assert_eq!(http.model, "gpt-4.1-mini");
        assert_eq!(http.api_key.as_deref(), Some("sk-test"));
    }

    #[test]
    fn defaults_and_unknown_keys() {
        let config = ServiceConfig::from_toml("").unwrap();
        assert_eq!(config, ServiceConfig::default());
        assert!(ServiceConfig::from_toml("bnd = 1").is_err());
    }
}
