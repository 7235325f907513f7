//! Experiment runner for measurement-based quantum diffusion.
//!
//! Every experiment reads one section of a TOML config, runs under an
//! explicit seed and writes CSV tables (plus JSON-lines records for datasets)
//! together with a `manifest.json`. Reruns with the same config and seed
//! produce byte-identical files.

pub mod config;
pub mod error;
pub mod experiments;
pub mod output;

use std::path::Path;

pub use config::{ConfigFile, Experiment, ExperimentKind, RunConfig};
pub use error::{Result, RunError};
pub use output::{Artifact, Manifest};

/// Runs `run` and writes its outputs and manifest into `out_dir`.
pub fn execute(run: &RunConfig, out_dir: &Path) -> Result<Manifest> {
    let artifacts = experiments::run(run)?;
    output::write_run(out_dir, run, &artifacts)
}

/// Loads `config`, selects the section for `kind` and runs it.
pub fn execute_file(kind: ExperimentKind, config: &Path, seed: Option<u64>, out_dir: &Path) -> Result<Manifest> {
    let run = ConfigFile::load(config)?.resolve(kind, seed)?;
    execute(&run, out_dir)
}

/// Reruns the experiment recorded in a manifest.
pub fn replay(manifest: &Path, out_dir: &Path) -> Result<Manifest> {
    let m = Manifest::load(manifest)?;
    let kind = ExperimentKind::from_name(&m.command)
        .ok_or_else(|| RunError::Invalid(format!("unknown command {:?} in manifest", m.command)))?;
    let file = ConfigFile::parse(&m.config)
        .map_err(|e| RunError::Config { path: manifest.to_path_buf(), message: e.to_string() })?;
    execute(&file.resolve(kind, Some(m.seed))?, out_dir)
}
