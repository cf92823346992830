// SPDX-License-Identifier: Apache-2.0

//! JSON-lines persistence of evaluations.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::{EvalRecord, ParameterConfig};
use crate::error::{Error, Result};
use crate::pareto::ObjectiveVector;

/// One line of `run.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveLine {
    pub id: u64,
    pub seed: u64,
    /// Campaign mode, or `system` for a standalone loop.
    pub mode: String,
    /// Phase within the mode, such as `phase1` or `knee/r1`.
    pub stage: String,
    pub iteration: usize,
    pub config: ParameterConfig,
    pub objectives: ObjectiveVector,
    pub feasible: bool,
    /// Seconds since the Unix epoch at write time.
    pub timestamp: u64,
    /// Where the cell data of this evaluation lives, as `file#id`.
    pub cell_data: String,
}

impl ArchiveLine {
    pub fn new(r: &EvalRecord, seed: u64, mode: &str, stage: &str, cell_file: &str) -> Self {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Self {
            id: r.id,
            seed,
            mode: mode.to_string(),
            stage: stage.to_string(),
            iteration: r.iteration,
            config: r.config,
            objectives: r.objectives,
            feasible: r.feasible,
            timestamp,
            cell_data: format!("{cell_file}#{}", r.id),
        }
    }

    pub fn record(&self) -> EvalRecord {
        EvalRecord {
            id: self.id,
            iteration: self.iteration,
            config: self.config,
            objectives: self.objectives,
            feasible: self.feasible,
        }
    }
}

pub fn write_archive(lines: &[ArchiveLine]) -> Result<String> {
    let mut out = String::new();
    for l in lines {
        out.push_str(&serde_json::to_string(l)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_archive(text: &str) -> Result<Vec<ArchiveLine>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1))))
        .collect()
}
