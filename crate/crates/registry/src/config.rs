use std::path::Path;

use serde::{Deserialize, Serialize};
use vobe_core::mapss::{SortKey, DEFAULT_VARIANT_CAP};
use vobe_core::social::VerificationRules;

/// Settings read from a TOML file.
///
/// ```toml
/// variant_cap = 100000
/// default_sort_keys = [{ key = "totalCost", order = "asc" }]
///
/// [verification]
/// tau = 0.5
/// delta = 0.2
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub verification: VerificationRules,
    pub variant_cap: u64,
    /// Used by specifications that give no sort keys of their own.
    pub default_sort_keys: Vec<SortKey>,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            verification: VerificationRules::default(),
            variant_cap: DEFAULT_VARIANT_CAP,
            default_sort_keys: SortKey::defaults(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("invalid configuration: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let config: Config = toml::from_str(text)?;
        config.check()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    fn check(&self) -> Result<(), ConfigError> {
        let VerificationRules { tau, delta } = self.verification;
        if !(tau.is_finite() && tau >= 0.0) || !(delta.is_finite() && delta >= 0.0) {
            return Err(ConfigError::Invalid("tau and delta must be non-negative".into()));
        }
        if self.variant_cap == 0 {
            return Err(ConfigError::Invalid("variant_cap must be positive".into()));
        }
        Ok(())
    }
}
