//! Run manifests recording what produced a set of output files.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Hex SHA-256 of a serialized configuration.
pub fn config_hash(config: &[u8]) -> String {
    Sha256::digest(config).iter().map(|b| format!("{b:02x}")).collect()
}

/// Everything except `created_at` is a function of the inputs; the
/// timestamp is kept on its own line so outputs can be compared with it
/// filtered out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub seed: Option<u64>,
    pub config_hash: String,
    pub code_version: String,
    pub outputs: Vec<String>,
    pub created_at: String,
}

impl RunManifest {
    pub fn new(command: &str, seed: Option<u64>, config: &[u8], outputs: Vec<String>) -> Self {
        Self {
            command: command.to_string(),
            seed,
            config_hash: config_hash(config),
            code_version: crate::CODE_VERSION.to_string(),
            outputs,
            created_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        }
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifests always serialize");
        std::fs::write(path, text + "\n")
    }

    pub fn load(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }
}
