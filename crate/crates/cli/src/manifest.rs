//! Run manifests: enough to repeat a run and check its outputs byte for byte.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Subcommand and its non-config arguments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Invocation {
    Simulate {
        export_errors: bool,
    },
    Diagnose {
        errors: String,
        shared_cov: Option<String>,
        shared_mse: Option<String>,
    },
    Uwb {
        ranges: String,
        anchors: String,
        truth: String,
    },
    UwbFixture {
        kind: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub invocation: Invocation,
    pub seed: u64,
    pub config: RunConfig,
    /// Input path to SHA-256 of its contents.
    pub inputs: BTreeMap<String, String>,
    /// Output file name (relative to the output directory) to SHA-256.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(invocation: Invocation, config: &RunConfig) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            invocation,
            seed: config.seed,
            config: config.clone(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> CliResult<()> {
        let bytes = std::fs::read(path).map_err(|e| CliError::io(path.display(), e))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    /// Write `bytes` to `dir/name` and record its digest.
    pub fn write_output(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = dir.join(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent.display(), e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::io(path.display(), e))?;
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn save(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join(MANIFEST_FILE);
        std::fs::write(&path, self.to_json()).map_err(|e| CliError::io(path.display(), e))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Fails when an input file changed since the manifest was written.
    pub fn verify_inputs(&self) -> CliResult<()> {
        for (path, digest) in &self.inputs {
            let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
            if &sha256_hex(&bytes) != digest {
                return Err(CliError::Data(format!("{path}: contents differ from the manifest digest")));
            }
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}
