//! Experiment controller behind the `ferropuf` command line.

mod config;
mod experiments;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use config::{
    ArraySection, AttackSection, AttackTargets, DeviceSection, ExperimentConfig, ExperimentSection,
    SweepSection, ENV_OUT, ENV_SEED,
};
pub use experiments::{
    attack_protocol, cmd_attack, cmd_gen_crps, cmd_metrics, cmd_register, cmd_sweep,
    gen_crps_protocol, metrics_protocol, reconfiguration_protocol, registration_protocol,
    sweep_protocol, AttackOutcome, MetricsOutcome, SweepAxis, SweepPoint,
};

use crate::error::Result;
use crate::io::write_atomic;

/// Written next to the outputs of every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: u64,
    /// Resolved configuration as TOML; loading the manifest as a config
    /// reproduces the run.
    pub config: String,
    /// Output files relative to the output directory.
    pub outputs: Vec<String>,
    pub wall_clock_seconds: f64,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Tracks the files a command writes.
pub(crate) struct Run<'a> {
    cfg: &'a ExperimentConfig,
    out: PathBuf,
    command: String,
    outputs: Vec<String>,
    started: Instant,
}

impl<'a> Run<'a> {
    pub(crate) fn new(cfg: &'a ExperimentConfig, out: &Path, command: impl Into<String>) -> Self {
        Self {
            cfg,
            out: out.to_path_buf(),
            command: command.into(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub(crate) fn path(&mut self, name: &str) -> PathBuf {
        if !self.outputs.iter().any(|o| o == name) {
            self.outputs.push(name.to_string());
        }
        self.out.join(name)
    }

    pub(crate) fn finish(self) -> Result<RunManifest> {
        let manifest = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command,
            seed: self.cfg.seed,
            config: self.cfg.to_toml(),
            outputs: self.outputs,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
        };
        let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        write_atomic(&self.out.join(MANIFEST_FILE), json.as_bytes())?;
        Ok(manifest)
    }
}
