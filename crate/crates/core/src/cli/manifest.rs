use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use super::config::RunConfig;
use crate::error::Result;
use crate::fsutil::{sha256_file, sha256_hex, write_atomic};

/// What a command read and wrote, with content hashes. Contains no
/// timestamps, so identical runs produce identical manifests.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<RunConfig>,
    pub inputs: BTreeMap<String, String>,
    pub artifacts: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, config: Option<&RunConfig>) -> Self {
        Manifest {
            tool: "hsdlab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.cloned(),
            inputs: BTreeMap::new(),
            artifacts: BTreeMap::new(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        let hash = sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), hash);
        Ok(())
    }

    pub fn artifact(&mut self, name: impl Into<String>, bytes: &[u8]) {
        self.artifacts.insert(name.into(), sha256_hex(bytes));
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes())
    }
}
