//! Output directory handling and the run manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Serialize)]
struct Entry {
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: Option<u64>,
    arguments: &'a serde_json::Value,
    inputs: Vec<Entry>,
    outputs: Vec<Entry>,
}

/// Files written under one `--out` directory, with their hashes.
pub struct Artifacts {
    root: PathBuf,
    written: BTreeMap<String, String>,
    inputs: BTreeMap<String, String>,
}

impl Artifacts {
    pub fn create(root: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Artifacts {
            root: root.to_path_buf(),
            written: BTreeMap::new(),
            inputs: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Writes `contents` to `name` (a `/`-separated path relative to the root).
    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.root.join(name);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.insert(name.to_string(), sha256_hex(contents.as_bytes()));
        Ok(())
    }

    /// Records an input file by the path it was given as.
    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
        self.inputs.insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    /// Writes `manifest.json`. Nothing time- or machine-dependent goes in, so
    /// identical runs produce identical manifests.
    pub fn finish(self, command: &str, seed: Option<u64>, arguments: &impl Serialize) -> Result<(), CliError> {
        let arguments = serde_json::to_value(arguments).map_err(|e| CliError::Usage(e.to_string()))?;
        let entries = |m: &BTreeMap<String, String>| {
            m.iter()
                .map(|(p, h)| Entry {
                    path: p.clone(),
                    sha256: h.clone(),
                })
                .collect()
        };
        let manifest = Manifest {
            tool: "pomg",
            version: env!("CARGO_PKG_VERSION"),
            command,
            seed,
            arguments: &arguments,
            inputs: entries(&self.inputs),
            outputs: entries(&self.written),
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.root.join("manifest.json");
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }
}
