//! Per-run manifest recording what produced a set of outputs.

use std::collections::BTreeMap;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub subcommand: String,
    pub seed: u64,
    pub config_snapshot: RunConfig,
    /// Input path (as given) to `sha256:<hex>`.
    pub input_digests: BTreeMap<String, String>,
    /// Output file names relative to the output directory.
    pub outputs: Vec<String>,
    /// Subcommand-specific summary such as dataset counts.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub summary: serde_json::Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

pub fn digest_file(path: &Path) -> io::Result<String> {
    Ok(sha256_hex(&std::fs::read(path)?))
}

impl RunManifest {
    pub fn new(subcommand: &str, config: &RunConfig) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            seed: config.seed,
            config_snapshot: config.clone(),
            input_digests: BTreeMap::new(),
            outputs: Vec::new(),
            summary: serde_json::Value::Null,
        }
    }

    pub fn add_input(&mut self, path: &Path) -> io::Result<()> {
        let digest = digest_file(path)?;
        self.input_digests.insert(path.display().to_string(), digest);
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, dir: &Path) -> io::Result<()> {
        std::fs::write(dir.join(MANIFEST_FILE), self.to_json())
    }
}
