// SPDX-License-Identifier: Apache-2.0

//! Campaign configuration, read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::backend::BackendModel;
use crate::error::{Error, Result};
use crate::interloop::{FlipRule, MiningBounds, DEFAULT_LAMBDA};
use crate::sysloop::SystemLoopConfig;
use crate::techloop::TechLoopConfig;

/// Which parts of the dual loop a campaign enables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// System parameters only.
    Baseline,
    /// Recharacterization without fused cells.
    NoFusion,
    /// Single-row fused cells without recharacterization.
    NoRechar,
    Full,
    /// Full, with every cell type weighted equally.
    Naive,
}

impl Mode {
    pub const ALL: [Mode; 5] = [Mode::Baseline, Mode::NoFusion, Mode::NoRechar, Mode::Full, Mode::Naive];

    pub fn name(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::NoFusion => "no_fusion",
            Mode::NoRechar => "no_rechar",
            Mode::Full => "full",
            Mode::Naive => "naive",
        }
    }

    pub fn fuses(self) -> bool {
        matches!(self, Mode::NoRechar | Mode::Full | Mode::Naive)
    }

    pub fn recharacterizes(self) -> bool {
        matches!(self, Mode::NoFusion | Mode::Full | Mode::Naive)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Mode::ALL.into_iter().find(|m| m.name() == s).ok_or_else(|| Error::Config(format!("unknown mode '{s}'")))
    }
}

/// Frontier point a direction is taken at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnchorKind {
    /// Balanced point of the delay/power frontier.
    Knee,
    MinDelay,
}

impl AnchorKind {
    pub fn name(self) -> &'static str {
        match self {
            AnchorKind::Knee => "knee",
            AnchorKind::MinDelay => "min_delay",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub lambda: f64,
    /// Neighbours used for the frontier normal.
    pub k: usize,
    /// Patterns promoted to fused cells.
    pub n_ext: usize,
    pub bounds: MiningBounds,
    pub anchors: Vec<AnchorKind>,
    pub flip: FlipRule,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            k: 2,
            n_ext: 2,
            bounds: MiningBounds::default(),
            anchors: vec![AnchorKind::Knee, AnchorKind::MinDelay],
            flip: FlipRule::TowardOrigin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub modes: Vec<Mode>,
    pub seeds: Vec<u64>,
    /// System, analysis, technology rounds after the first system loop.
    pub rounds: usize,
    /// BO iterations after each library update, on top of re-evaluating
    /// the Pareto set.
    pub phase2_iterations: usize,
    /// Artifact directory; nothing is written when absent.
    pub out_dir: Option<PathBuf>,
    pub system: SystemLoopConfig,
    pub tech: TechLoopConfig,
    pub analysis: AnalysisConfig,
    pub backend: BackendModel,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        Self {
            modes: Mode::ALL.to_vec(),
            seeds: (0..5).collect(),
            rounds: 1,
            phase2_iterations: 20,
            out_dir: None,
            system: SystemLoopConfig::default(),
            tech: TechLoopConfig::default(),
            analysis: AnalysisConfig::default(),
            backend: BackendModel::default(),
        }
    }
}

impl CampaignConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; a relative `out_dir` is taken relative to it.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let (Some(dir), Some(parent)) = (cfg.out_dir.as_ref(), path.parent()) {
            if dir.is_relative() {
                cfg.out_dir = Some(parent.join(dir));
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.modes.is_empty() {
            return bad("modes is empty");
        }
        if self.seeds.is_empty() {
            return bad("seeds is empty");
        }
        if self.rounds == 0 {
            return bad("rounds must be at least 1");
        }
        if self.system.n_init < 2 {
            return bad("system.n_init must be at least 2");
        }
        if self.system.pool_size == 0 || self.system.n_mc == 0 || self.system.n_trees == 0 {
            return bad("system.pool_size, system.n_mc and system.n_trees must be positive");
        }
        if !(self.system.ref_margin.is_finite() && self.system.ref_margin > 0.0) {
            return bad("system.ref_margin must be positive");
        }
        if !(self.analysis.lambda.is_finite() && self.analysis.lambda > 0.0) {
            return bad("analysis.lambda must be positive");
        }
        if self.analysis.k == 0 {
            return bad("analysis.k must be at least 1");
        }
        if self.analysis.n_ext == 0 && self.modes.iter().any(|m| m.fuses()) {
            return bad("analysis.n_ext must be at least 1 when a fusing mode is selected");
        }
        if self.analysis.anchors.is_empty() {
            return bad("analysis.anchors is empty");
        }
        let b = &self.analysis.bounds;
        if b.i_max == 0 || b.o_max == 0 || b.d_max == 0 {
            return bad("analysis.bounds entries must be positive");
        }
        if self.tech.de.s_pop < 4 || self.tech.de.s_top == 0 {
            return bad("tech.de.s_pop must be at least 4 and tech.de.s_top positive");
        }
        if self.tech.mlp.hidden.is_empty() || self.tech.mlp.epochs == 0 {
            return bad("tech.mlp needs hidden layers and epochs");
        }
        self.backend.validate().map_err(|e| Error::Config(format!("backend: {e}")))
    }
}
