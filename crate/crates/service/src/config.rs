//! File and environment configuration. Precedence, highest first: command
//! line flags, environment variables, the TOML file, built-in defaults.

use std::path::{Path, PathBuf};

use ontoclean_core::labeler::{LlmConfig, FIXTURE_SCHEME};
use serde::Deserialize;

pub const CONFIG_ENV: &str = "ONTOCLEAN_CONFIG";
pub const ENDPOINT_ENV: &str = "ONTOCLEAN_LLM_ENDPOINT";
pub const MODEL_ENV: &str = "ONTOCLEAN_LLM_MODEL";
pub const MAX_IN_FLIGHT_ENV: &str = "ONTOCLEAN_MAX_IN_FLIGHT";
pub const PORT_ENV: &str = "ONTOCLEAN_PORT";
pub const DATA_DIR_ENV: &str = "ONTOCLEAN_DATA_DIR";

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {message}")]
    Read { path: String, message: String },
    #[error("invalid config file {path}: {message}")]
    Parse { path: String, message: String },
    #[error("environment variable {name} has invalid value {value:?}")]
    Env { name: &'static str, value: String },
    #[error("no LLM endpoint configured (use --endpoint, {ENDPOINT_ENV} or [llm] endpoint_url)")]
    MissingEndpoint,
    #[error("no model configured (use --model, {MODEL_ENV} or [llm] model)")]
    MissingModel,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LlmSettings {
    pub endpoint_url: Option<String>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub max_tokens: Option<u32>,
    pub timeout_secs: Option<u64>,
    pub max_retries: Option<u32>,
    pub backoff_ms: Option<u64>,
    pub max_in_flight: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServerSettings {
    pub port: Option<u16>,
    pub data_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub llm: LlmSettings,
    #[serde(default)]
    pub server: ServerSettings,
}

impl Config {
    pub fn from_toml(text: &str, path: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            message: e.to_string(),
        })
    }

    /// Reads `path` (or `$ONTOCLEAN_CONFIG`) if given, then applies
    /// environment overrides.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        let mut cfg = match path.map(Path::to_path_buf).or(env_path) {
            Some(p) => {
                let text = std::fs::read_to_string(&p).map_err(|e| ConfigError::Read {
                    path: p.display().to_string(),
                    message: e.to_string(),
                })?;
                Self::from_toml(&text, &p)?
            }
            None => Self::default(),
        };
        cfg.apply_env(|name| std::env::var(name).ok())?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self, get: impl Fn(&str) -> Option<String>) -> Result<(), ConfigError> {
        if let Some(v) = get(ENDPOINT_ENV) {
            self.llm.endpoint_url = Some(v);
        }
        if let Some(v) = get(MODEL_ENV) {
            self.llm.model = Some(v);
        }
        if let Some(v) = get(MAX_IN_FLIGHT_ENV) {
            let n = v.parse().ok().filter(|&n: &usize| n > 0);
            self.llm.max_in_flight = Some(n.ok_or(ConfigError::Env {
                name: MAX_IN_FLIGHT_ENV,
                value: v,
            })?);
        }
        if let Some(v) = get(PORT_ENV) {
            self.server.port = Some(v.parse().map_err(|_| ConfigError::Env {
                name: PORT_ENV,
                value: v,
            })?);
        }
        if let Some(v) = get(DATA_DIR_ENV) {
            self.server.data_dir = Some(PathBuf::from(v));
        }
        Ok(())
    }

    /// Builds an LLM configuration, letting flags override settings. A
    /// fixture endpoint needs no model name.
    pub fn llm_config(&self, endpoint: Option<&str>, model: Option<&str>) -> Result<LlmConfig, ConfigError> {
        let s = &self.llm;
        let endpoint = endpoint
            .map(str::to_owned)
            .or_else(|| s.endpoint_url.clone())
            .ok_or(ConfigError::MissingEndpoint)?;
        let model = match model.map(str::to_owned).or_else(|| s.model.clone()) {
            Some(m) => m,
            None if endpoint.starts_with(FIXTURE_SCHEME) => "fixture".to_owned(),
            None => return Err(ConfigError::MissingModel),
        };
        let mut cfg = LlmConfig::new(endpoint, model);
        if let Some(v) = s.temperature {
            cfg.temperature = v;
        }
        if let Some(v) = s.max_tokens {
            cfg.max_tokens = v;
        }
        if let Some(v) = s.timeout_secs {
            cfg.timeout_secs = v;
        }
        if let Some(v) = s.max_retries {
            cfg.max_retries = v;
        }
        if let Some(v) = s.backoff_ms {
            cfg.backoff_ms = v;
        }
        Ok(cfg)
    }
}
