//! Output files and the run manifest.
//!
//! Every run writes its tables and a `manifest.json` holding the resolved
//! config and a content hash per output. Hashes are SHA-256 over the git
//! blob encoding `"blob {len}\0" ++ content`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{io_error, Result};

pub const MANIFEST_NAME: &str = "manifest.json";

/// A named output file held in memory until the run finishes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Artifact { name: name.into(), bytes }
    }
}

/// Shortest round-trip form, in exponent notation for very small or large
/// magnitudes.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn csv_bytes<I>(header: &[String], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()).into())
}

pub fn git_blob_sha256(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub path: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub qdiff_version: String,
    /// Resolved config as TOML; `qdiff replay` runs it again.
    pub config: String,
    pub outputs: Vec<OutputEntry>,
}

impl Manifest {
    pub fn new(run: &RunConfig, artifacts: &[Artifact]) -> Result<Self> {
        Ok(Manifest {
            command: run.experiment.kind().name().to_string(),
            seed: run.seed,
            qdiff_version: env!("CARGO_PKG_VERSION").to_string(),
            config: run.to_config_file().to_toml()?,
            outputs: artifacts
                .iter()
                .map(|a| OutputEntry { path: a.name.clone(), bytes: a.bytes.len(), sha256: git_blob_sha256(&a.bytes) })
                .collect(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Writes the artifacts and the manifest into `dir`, creating it if needed.
pub fn write_run(dir: &Path, run: &RunConfig, artifacts: &[Artifact]) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    for a in artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.bytes).map_err(io_error(path))?;
    }
    let manifest = Manifest::new(run, artifacts)?;
    let path = dir.join(MANIFEST_NAME);
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text).map_err(io_error(path))?;
    Ok(manifest)
}
