// SPDX-License-Identifier: Apache-2.0

//! Technology loop: surrogate-assisted search over device parameters and
//! fused-cell row counts.
//!
//! Candidates are gene vectors on `[0, 1]`: five continuous device genes,
//! one three-level gene for `lext` and one three-level row gene per fused
//! cell. `lct` is derived from the pitch so every decoded point meets the
//! CPP constraint.

pub mod de;
pub mod lhs;
pub mod mlp;

use log::info;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::interloop::{CellContribution, DirectionWeights};
use crate::netlist::CellLibrary;
use crate::tech::{cell_simulate, ppa_calculation, RowsAssignment, TechParams, HFIN, LEXT, LG, PHIG_N, PHIG_P, TFIN};

pub use de::{distance, enhanced_de, penalized, select_diverse, snap, DeConfig, DeOutcome, Individual};
pub use lhs::lhs_unit;
pub use mlp::{r_squared, train_mlp, Mlp, MlpConfig, TrainReport};

/// Index of the `lext` gene.
pub const LEXT_GENE: usize = 5;
/// Genes before the per-fused-cell row genes.
pub const DEVICE_GENES: usize = 6;

/// Decoded candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechCandidate {
    pub params: TechParams,
    pub rows: RowsAssignment,
}

impl TechCandidate {
    /// Default device parameters with every listed fused cell on one row.
    pub fn default_for(fused: &[String]) -> Self {
        Self { params: TechParams::default(), rows: fused.iter().map(|n| (n.clone(), 1)).collect() }
    }
}

/// Gene layout for a fixed list of fused cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneSpace {
    pub fused: Vec<String>,
}

impl GeneSpace {
    pub fn for_library(lib: &CellLibrary) -> Self {
        Self { fused: lib.fused.iter().map(|f| f.name.clone()).collect() }
    }

    pub fn dims(&self) -> usize {
        DEVICE_GENES + self.fused.len()
    }

    /// `(dimension, levels)` of the discrete genes.
    pub fn discrete(&self) -> Vec<(usize, usize)> {
        std::iter::once((LEXT_GENE, LEXT.len())).chain((DEVICE_GENES..self.dims()).map(|d| (d, 3))).collect()
    }

    pub fn decode(&self, genes: &[f64], cpp_nm: f64) -> Result<TechCandidate> {
        if genes.len() != self.dims() {
            return Err(invalid(format!("expected {} genes, got {}", self.dims(), genes.len())));
        }
        let lin = |g: f64, (lo, hi): (f64, f64)| lo + g.clamp(0.0, 1.0) * (hi - lo);
        let level = |g: f64| (g.clamp(0.0, 1.0) * 2.0).round() as usize;
        let lg_nm = lin(genes[4], LG);
        let lext_nm = LEXT[level(genes[LEXT_GENE])];
        let params = TechParams {
            phig_n: lin(genes[0], PHIG_N),
            phig_p: lin(genes[1], PHIG_P),
            hfin_nm: lin(genes[2], HFIN),
            tfin_nm: lin(genes[3], TFIN),
            lg_nm,
            lext_nm,
            lct_nm: TechParams::derived_lct(lg_nm, lext_nm, cpp_nm),
        };
        let rows =
            self.fused.iter().zip(&genes[DEVICE_GENES..]).map(|(n, &g)| (n.clone(), 1 + level(g) as u8)).collect();
        Ok(TechCandidate { params, rows })
    }

    pub fn encode(&self, c: &TechCandidate) -> Result<Vec<f64>> {
        let unlin = |v: f64, (lo, hi): (f64, f64)| (v - lo) / (hi - lo);
        let t = &c.params;
        let lext = LEXT
            .iter()
            .position(|&l| l == t.lext_nm)
            .ok_or_else(|| invalid(format!("lext_nm={} not in {{4,5,6}}", t.lext_nm)))?;
        let mut g = vec![
            unlin(t.phig_n, PHIG_N),
            unlin(t.phig_p, PHIG_P),
            unlin(t.hfin_nm, HFIN),
            unlin(t.tfin_nm, TFIN),
            unlin(t.lg_nm, LG),
            lext as f64 / 2.0,
        ];
        for n in &self.fused {
            let r = c.rows.get(n).copied().unwrap_or(1);
            if !(1..=3).contains(&r) {
                return Err(invalid(format!("num_rows {r} for '{n}' not in {{1,2,3}}")));
            }
            g.push((r - 1) as f64 / 2.0);
        }
        Ok(g)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TechLoopConfig {
    /// Initial Latin hypercube samples.
    pub n_init: usize,
    pub i_max: usize,
    pub de: DeConfig,
    pub mlp: MlpConfig,
}

impl Default for TechLoopConfig {
    fn default() -> Self {
        Self { n_init: 60, i_max: 2, de: DeConfig::default(), mlp: MlpConfig::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub candidate: TechCandidate,
    pub y: f64,
    /// Whether the point came from the history rather than this run.
    pub from_history: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechLoopResult {
    pub best: TechCandidate,
    pub best_y: f64,
    /// Recharacterized library at `best`.
    pub library: CellLibrary,
    pub dataset: Vec<Scored>,
    /// Objective evaluations made by this run, history excluded.
    pub evaluations: usize,
    /// Best objective after the initial design and after each iteration.
    pub best_trace: Vec<f64>,
    pub reports: Vec<TrainReport>,
}

/// Objective of one candidate: the weighted, normalized PPA of the
/// library it characterizes.
pub fn score(c: &TechCandidate, dir: &DirectionWeights, contrib: &CellContribution, base: &CellLibrary) -> Result<f64> {
    let lib = cell_simulate(&c.params, &c.rows, base)?;
    ppa_calculation(&lib, contrib, dir, base)
}

/// Runs the loop from `history`, which is re-scored under `dir` and does
/// not count toward the evaluation budget of `n_init + i_max * s_top`.
pub fn run_tech_loop(
    dir: &DirectionWeights,
    contrib: &CellContribution,
    base: &CellLibrary,
    history: &[TechCandidate],
    cfg: &TechLoopConfig,
    seed: u64,
) -> Result<TechLoopResult> {
    let space = GeneSpace::for_library(base);
    let cpp = base.factors.cpp_nm;
    let discrete = space.discrete();
    let mut data: Vec<(Vec<f64>, Scored)> = Vec::new();
    for c in history {
        let y = score(c, dir, contrib, base)?;
        data.push((space.encode(c)?, Scored { candidate: c.clone(), y, from_history: true }));
    }

    let mut evaluations = 0;
    let mut add = |genes: Vec<f64>, data: &mut Vec<(Vec<f64>, Scored)>| -> Result<()> {
        let c = space.decode(&genes, cpp)?;
        let y = score(&c, dir, contrib, base)?;
        evaluations += 1;
        data.push((space.encode(&c)?, Scored { candidate: c, y, from_history: false }));
        Ok(())
    };
    for genes in lhs_unit(cfg.n_init, space.dims(), &discrete, seed) {
        add(genes, &mut data)?;
    }
    let best_of = |data: &[(Vec<f64>, Scored)]| data.iter().map(|d| d.1.y).fold(f64::INFINITY, f64::min);
    let mut best_trace = vec![best_of(&data)];
    let mut reports = Vec::new();

    for it in 0..cfg.i_max {
        let xs: Vec<Vec<f64>> = data.iter().map(|d| d.0.clone()).collect();
        let ys: Vec<f64> = data.iter().map(|d| d.1.y).collect();
        let round_seed = seed.wrapping_add(1 + it as u64);
        let (net, report) = train_mlp(&xs, &ys, &cfg.mlp, round_seed)?;
        info!(
            "tech loop round {it}: surrogate train R2 {:.4}, validation R2 {:.4}",
            report.train_r2, report.validation_r2
        );
        reports.push(report);
        let mut init = xs.clone();
        init.sort_by(|a, b| net.predict(a).total_cmp(&net.predict(b)));
        let out = enhanced_de(|g| net.predict(g), &init, space.dims(), &discrete, &cfg.de, round_seed)?;
        for ind in out.candidates {
            add(ind.genes, &mut data)?;
        }
        best_trace.push(best_of(&data));
    }

    let (_, best) = data
        .iter()
        .min_by(|a, b| a.1.y.total_cmp(&b.1.y))
        .ok_or_else(|| invalid("tech loop has no samples; raise n_init or pass history"))?;
    let library = cell_simulate(&best.candidate.params, &best.candidate.rows, base)?;
    Ok(TechLoopResult {
        best: best.candidate.clone(),
        best_y: best.y,
        library,
        evaluations,
        best_trace,
        reports,
        dataset: data.into_iter().map(|d| d.1).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_meets_pitch() {
        let space = GeneSpace { fused: vec!["FUSED0".into()] };
        for genes in lhs_unit(50, space.dims(), &space.discrete(), 4) {
            let c = space.decode(&genes, 54.0).unwrap();
            c.params.validate().unwrap();
            assert!(crate::tech::check_cpp(&c.params, 54.0));
            assert!((1..=3).contains(&c.rows["FUSED0"]));
        }
    }

    #[test]
    fn default_round_trips() {
        let space = GeneSpace { fused: vec!["FUSED0".into(), "FUSED1".into()] };
        let c = TechCandidate::default_for(&space.fused);
        let g = space.encode(&c).unwrap();
        let want = [0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.0, 0.0];
        assert!(g.iter().zip(want).all(|(a, b)| (a - b).abs() < 1e-9), "{g:?}");
        let back = space.decode(&g, 54.0).unwrap();
        assert_eq!(back.rows, c.rows);
        assert!((back.params.phig_p - c.params.phig_p).abs() < 1e-12);
    }
}
