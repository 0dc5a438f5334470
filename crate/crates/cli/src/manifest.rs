use std::fs;
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Sidecar describing how an output was produced.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub command: String,
    pub args: Value,
    pub seed: u64,
    pub derived_seeds: Vec<(String, u64)>,
    pub details: Value,
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, args: &impl Serialize, seed: u64) -> Result<Self> {
        Ok(Self {
            tool: format!("cewit {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            args: serde_json::to_value(args)?,
            seed,
            derived_seeds: Vec::new(),
            details: Value::Null,
            outputs: Vec::new(),
            wall_clock_seconds: 0.0,
        })
    }

    pub fn derive(&mut self, label: &str) -> u64 {
        let s = cewit::rng::derive_seed(self.seed, label);
        self.derived_seeds.push((label.to_string(), s));
        s
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    pub fn finish(mut self, started: Instant, path: &Path) -> Result<()> {
        self.wall_clock_seconds = started.elapsed().as_secs_f64();
        let text = serde_json::to_string_pretty(&self)?;
        fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}
