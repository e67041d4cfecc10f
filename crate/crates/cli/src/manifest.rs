//! Run manifests: a config echo plus content hashes of every file a command
//! read or wrote, so any output can be traced back to its exact inputs.

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

/// SHA-256 of a file's bytes, lowercase hex.
pub fn sha256_hex(path: &Path) -> Result<String> {
    let bytes =
        fs::read(path).with_context(|| format!("cannot hash {}", path.display()))?;
    Ok(format!("{:x}", Sha256::digest(&bytes)))
}

/// What one command run did. Contains no timestamps or machine state, so
/// re-running the same command on the same inputs reproduces it bit for bit.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    /// Resolved configuration, defaults included.
    pub config: serde_json::Value,
    /// Input path → SHA-256 of its content.
    pub inputs: BTreeMap<String, String>,
    /// Output path → SHA-256 of its content.
    pub outputs: BTreeMap<String, String>,
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            config,
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    pub fn add_input(&mut self, path: &Path) -> Result<()> {
        self.inputs.insert(path.display().to_string(), sha256_hex(path)?);
        Ok(())
    }

    pub fn add_output(&mut self, path: &Path) -> Result<()> {
        self.outputs.insert(path.display().to_string(), sha256_hex(path)?);
        Ok(())
    }

    /// Write `<command>.manifest.json` into `dir` and return its path.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.manifest.json", self.command));
        let mut json = serde_json::to_string_pretty(self)?;
        json.push('\n');
        fs::write(&path, json)
            .with_context(|| format!("cannot write {}", path.display()))?;
        Ok(path)
    }
}
