use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Deserialize;

use super::{CliError, GlobalArgs};
use crate::backend::{BackendClient, ClientOptions};

/// Backend URLs by pipeline role.
#[derive(Debug, Clone, Default, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackendUrls {
    pub lm: Option<String>,
    pub qa: Option<String>,
    pub vqa: Option<String>,
    pub sim: Option<String>,
}

/// Contents of the `--config` JSON file. Every field is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub backends: BackendUrls,
    pub max_in_flight: Option<usize>,
    pub cache_dir: Option<PathBuf>,
    pub offline: Option<bool>,
    pub timeout_secs: Option<u64>,
    pub max_retries: Option<u32>,
    pub threshold: Option<f64>,
}

impl ConfigFile {
    /// Reads the file; a relative `cache_dir` is resolved against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        let mut cfg: ConfigFile =
            serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))?;
        if let (Some(dir), Some(parent)) = (&cfg.cache_dir, path.parent()) {
            if dir.is_relative() {
                cfg.cache_dir = Some(parent.join(dir));
            }
        }
        Ok(cfg)
    }
}

/// Flags and environment (already merged by the argument parser) layered
/// over the config file.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub backends: BackendUrls,
    pub cache_dir: Option<PathBuf>,
    pub offline: bool,
    pub max_in_flight: usize,
    pub timeout: Duration,
    pub max_retries: u32,
    pub threshold: Option<f64>,
    pub bearer_token: Option<String>,
}

impl RunConfig {
    pub fn resolve(global: &GlobalArgs) -> Result<Self, CliError> {
        let file = match &global.config {
            Some(p) => ConfigFile::load(p)?,
            None => ConfigFile::default(),
        };
        let defaults = ClientOptions::default();
        let max_in_flight = global
            .max_in_flight
            .or(file.max_in_flight)
            .unwrap_or(defaults.max_in_flight);
        if max_in_flight == 0 {
            return Err(CliError::Usage("max_in_flight must be at least 1".into()));
        }
        Ok(RunConfig {
            backends: file.backends,
            cache_dir: global.cache_dir.clone().or(file.cache_dir),
            offline: global.offline || file.offline.unwrap_or(false),
            max_in_flight,
            timeout: file.timeout_secs.map(Duration::from_secs).unwrap_or(defaults.timeout),
            max_retries: file.max_retries.unwrap_or(defaults.max_retries),
            threshold: file.threshold,
            bearer_token: global.api_token.clone(),
        })
    }

    /// The URL for `role`: the flag (or its environment variable) when set,
    /// else the config file entry.
    pub fn backend(&self, role: &str, flag: Option<&str>) -> Result<String, CliError> {
        let from_file = match role {
            "lm" => &self.backends.lm,
            "qa" => &self.backends.qa,
            "vqa" => &self.backends.vqa,
            "sim" => &self.backends.sim,
            _ => unreachable!("unknown backend role {role}"),
        };
        flag.map(str::to_string).or_else(|| from_file.clone()).ok_or_else(|| {
            CliError::Usage(format!(
                "no `{role}` backend: pass --{role} or set it in the config file"
            ))
        })
    }

    pub fn optional_backend(&self, role: &str, flag: Option<&str>) -> Option<String> {
        self.backend(role, flag).ok()
    }

    pub fn client(&self) -> Result<BackendClient, CliError> {
        let options = ClientOptions {
            max_in_flight: self.max_in_flight,
            timeout: self.timeout,
            max_retries: self.max_retries,
            cache_dir: self.cache_dir.clone(),
            bearer_token: self.bearer_token.clone(),
            offline: self.offline,
            ..ClientOptions::default()
        };
        BackendClient::new(options).map_err(|e| CliError::Usage(e.to_string()))
    }
}
