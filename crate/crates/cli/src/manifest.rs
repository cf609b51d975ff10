use std::time::{SystemTime, UNIX_EPOCH};

use mapflux_core::SimulationConfig;
use serde::{Deserialize, Serialize};

use crate::run::RunSpec;

/// Written next to every run's outputs; enough to reproduce them exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// Seconds since the Unix epoch when the run finished.
    pub timestamp: u64,
    pub master_seed: Option<u64>,
    pub workers: usize,
    pub config: Option<SimulationConfig>,
    pub run: RunSpec,
    pub outputs: Vec<String>,
    pub wall_rejections: u64,
}

impl RunManifest {
    pub fn new(run: RunSpec, workers: usize, outputs: Vec<String>, wall_rejections: u64) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            master_seed: run.master_seed(),
            workers,
            config: run.config().cloned(),
            run,
            outputs,
            wall_rejections,
        }
    }
}
