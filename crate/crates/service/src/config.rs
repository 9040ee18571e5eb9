use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use fstlab_core::{Principal, ProtocolConfig, Role};
use fstlab_ita::ItaConfig;
use fstlab_stats::CrowdCurveConfig;
use serde::{Deserialize, Serialize};

pub const ENV_DATA_DIR: &str = "FSTLAB_DATA_DIR";
pub const ENV_LISTEN: &str = "FSTLAB_LISTEN";
pub const ENV_CONFIG: &str = "FSTLAB_CONFIG";

pub const EVENTS_FILE: &str = "events.jsonl";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot parse config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenGrant {
    pub principal_id: String,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub listen: String,
    /// Base directory for relative image paths in manifests.
    pub image_root: Option<PathBuf>,
    /// Probability that a task request is served from the gold pool.
    pub gold_probe_rate: f64,
    pub seed: u64,
    pub fsync: bool,
    pub protocol: ProtocolConfig,
    pub ita: ItaConfig,
    pub crowd_curve: CrowdCurveConfig,
    /// Extra method columns (wide labels CSV) merged into the reports.
    pub labels_csv: Option<PathBuf>,
    /// Method names treated as expert raters in reliability reports. Empty
    /// means every expert column found in the dataset.
    pub experts: Vec<String>,
    /// Bearer token → principal.
    pub tokens: BTreeMap<String, TokenGrant>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            data_dir: PathBuf::from("data"),
            listen: "127.0.0.1:8080".into(),
            image_root: None,
            gold_probe_rate: 0.1,
            seed: 0,
            fsync: true,
            protocol: ProtocolConfig::default(),
            ita: ItaConfig::default(),
            crowd_curve: CrowdCurveConfig::default(),
            labels_csv: None,
            experts: Vec::new(),
            tokens: BTreeMap::new(),
        }
    }
}

impl ServiceConfig {
    /// TOML unless the extension is `.json`.
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_owned(),
            source,
        })?;
        let parse_err = |message: String| ConfigError::Parse {
            path: path.to_owned(),
            message,
        };
        let cfg: ServiceConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        } else {
            toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Config file (explicit path, else `FSTLAB_CONFIG`, else defaults) with
    /// `FSTLAB_DATA_DIR` and `FSTLAB_LISTEN` applied on top.
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let env_path = std::env::var_os(ENV_CONFIG).map(PathBuf::from);
        let mut cfg = match path.map(Path::to_owned).or(env_path) {
            Some(p) => Self::from_file(&p)?,
            None => ServiceConfig::default(),
        };
        if let Some(dir) = std::env::var_os(ENV_DATA_DIR) {
            cfg.data_dir = dir.into();
        }
        if let Ok(listen) = std::env::var(ENV_LISTEN) {
            cfg.listen = listen;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !(0.0..=1.0).contains(&self.gold_probe_rate) {
            return Err(ConfigError::Invalid(format!(
                "gold_probe_rate {} outside [0, 1]",
                self.gold_probe_rate
            )));
        }
        self.protocol
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if !self.ita.thresholds.is_ordered() {
            return Err(ConfigError::Invalid("ITA thresholds must be strictly decreasing".into()));
        }
        Ok(())
    }

    pub fn events_path(&self) -> PathBuf {
        self.data_dir.join(EVENTS_FILE)
    }

    pub fn principal(&self, token: &str) -> Option<Principal> {
        self.tokens
            .get(token)
            .map(|g| Principal::new(g.principal_id.clone(), g.role))
    }
}
