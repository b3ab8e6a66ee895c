//! One declarative configuration for the whole pipeline.
//!
//! Values resolve in precedence order: built-in defaults, then the TOML
//! config file, then CLI flags, with `MERIT_SCORER_URL` overriding the
//! scorer endpoint from the environment. The content hash of the resolved
//! configuration lands in every output manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::ValidityConfig;
use crate::features::BaseScoreConfig;
use crate::lm::ScorerConfig;
use crate::metrics::MetricOptions;
use crate::sar::SarConfig;
use crate::select::ComposeWeights;
use crate::split::SplitSpec;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: toml::de::Error,
    },
}

/// Full pipeline configuration; every section falls back to its default.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub seed: u64,
    pub validity: ValidityConfig,
    pub base_score: BaseScoreConfig,
    pub scorer: ScorerConfig,
    pub compose: ComposeWeights,
    pub split: SplitSpec,
    pub sar: SarConfig,
    pub metrics: MetricOptions,
    /// Path to a prompt template file; the built-in template applies when
    /// unset.
    pub prompt_template: Option<String>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let raw = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        toml::from_str(&raw).map_err(|e| ConfigError::Parse {
            path: path.display().to_string(),
            source: e,
        })
    }

    /// Content hash of the resolved configuration (first 16 hex digits of
    /// sha256 over its canonical JSON form).
    pub fn content_hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let digest = Sha256::digest(canonical.as_bytes());
        digest[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}
