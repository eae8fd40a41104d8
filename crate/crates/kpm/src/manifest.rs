//! Run manifests: a JSON record next to every output describing what was
//! run, with which configuration and seeds, and what it cost.

use std::path::{Path, PathBuf};
use std::time::Instant;

use kpm_core::moments::EstimationConfig;
use serde::Serialize;

use crate::error::CliResult;
use crate::formats;
use crate::pipeline::Accounting;

/// Serializable view of [`EstimationConfig`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigRecord {
    pub eps: f64,
    pub delta: f64,
    #[serde(rename = "N")]
    pub degree: usize,
    pub tolerance: f64,
    pub eps_mv: f64,
    pub constant_c: f64,
}

impl From<&EstimationConfig> for ConfigRecord {
    fn from(c: &EstimationConfig) -> Self {
        Self {
            eps: c.eps,
            delta: c.delta,
            degree: c.degree,
            tolerance: c.tolerance,
            eps_mv: c.eps_mv,
            constant_c: c.constant_c,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Full argument vector, for reruns.
    pub args: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigRecord>,
    pub seeds: Vec<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub accounting: Accounting,
    /// Free-form per-command details (method, ℓ, reports, ...).
    pub details: serde_json::Value,
    pub elapsed_seconds: f64,
    pub worker_threads: usize,
    pub version: &'static str,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_owned(),
            args: std::env::args().collect(),
            config: None,
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            accounting: Accounting::default(),
            details: serde_json::Value::Null,
            elapsed_seconds: 0.0,
            worker_threads: rayon::current_num_threads(),
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    /// Stamp the elapsed time and write to `<output>.manifest.json`.
    pub fn finish(mut self, output: &Path, started: Instant) -> CliResult<PathBuf> {
        self.elapsed_seconds = started.elapsed().as_secs_f64();
        let path = manifest_path(output);
        formats::write_json_file(&path, &self)?;
        Ok(path)
    }
}

/// `<output>.manifest.json`, or `<dir>/manifest.json` for directories.
pub fn manifest_path(output: &Path) -> PathBuf {
    if output.is_dir() {
        return output.join("manifest.json");
    }
    let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_else(|| "run".into());
    name.push(".manifest.json");
    output.with_file_name(name)
}
