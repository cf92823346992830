// SPDX-License-Identifier: Apache-2.0

//! Bayesian optimization over system-level parameters.

pub mod archive;
pub mod space;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::backend::Evaluation;
use crate::error::{invalid, Result};
use crate::netlist::TimingPath;
use crate::pareto::{ehvi, Normalizer, ObjectiveVector, ParetoArchive};
use crate::surrogate::{encode_config, PrfModel, TreeParams, DEFAULT_TREES};

pub use archive::{read_archive, write_archive, ArchiveLine};
pub use space::{
    random_sample, ArchParams, CongEffort, Effort, OptEffort, ParameterConfig, PlaceParams, SynthParams, TimingEffort,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemLoopConfig {
    pub n_init: usize,
    pub t_max: usize,
    pub pool_size: usize,
    pub n_trees: usize,
    pub tree: TreeParams,
    /// Monte Carlo draws per EHVI estimate.
    pub n_mc: usize,
    /// Reference point of the acquisition, in archive-normalized units.
    pub ref_margin: f64,
}

impl Default for SystemLoopConfig {
    fn default() -> Self {
        Self {
            n_init: 10,
            t_max: 50,
            pool_size: 1024,
            n_trees: DEFAULT_TREES,
            tree: TreeParams::default(),
            n_mc: 64,
            ref_margin: 1.1,
        }
    }
}

/// One backend evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: u64,
    /// 0 for the initial design, then the BO iteration.
    pub iteration: usize,
    pub config: ParameterConfig,
    pub objectives: ObjectiveVector,
    pub feasible: bool,
}

/// Netlist-level data kept for every archive entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellData {
    pub id: u64,
    pub netlist_key: String,
    pub critical_ns: f64,
    pub paths: Vec<TimingPath>,
    pub type_power: std::collections::BTreeMap<String, f64>,
    pub type_area: std::collections::BTreeMap<String, f64>,
}

/// Per-evaluation cell data. Per-instance delays are not stored; they are
/// recomputed from the netlist key through the backend when needed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CellDatabase {
    pub records: Vec<CellData>,
}

impl CellDatabase {
    pub fn get(&self, id: u64) -> Option<&CellData> {
        self.records.iter().find(|r| r.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemLoopResult {
    pub records: Vec<EvalRecord>,
    pub cells: CellDatabase,
    /// Configurations the backend rejected, with the reason.
    pub failures: Vec<(ParameterConfig, String)>,
}

impl SystemLoopResult {
    pub fn objectives(&self) -> Vec<ObjectiveVector> {
        self.records.iter().map(|r| r.objectives).collect()
    }

    /// Frontier indices into `records`.
    pub fn frontier(&self) -> Result<Vec<usize>> {
        crate::pareto::pareto_front(&self.objectives())
    }

    /// Pareto set of configurations.
    pub fn pareto_set(&self) -> Result<Vec<ParameterConfig>> {
        Ok(self.frontier()?.into_iter().map(|i| self.records[i].config).collect())
    }

    /// Hypervolume after each evaluation under a fixed normalizer.
    pub fn hv_trace(&self, norm: &Normalizer, y_ref: ObjectiveVector) -> Result<Vec<f64>> {
        let mut a = ParetoArchive::new(y_ref);
        let mut out = Vec::with_capacity(self.records.len());
        for r in &self.records {
            a.push(r.id, norm.apply(&r.objectives))?;
            out.push(a.hypervolume()?);
        }
        Ok(out)
    }
}

/// Runs the loop from `n_init` random configurations.
pub fn run_system_loop(
    eval: &dyn Fn(&ParameterConfig) -> Result<Evaluation>,
    cfg: &SystemLoopConfig,
    seed: u64,
) -> Result<SystemLoopResult> {
    let init = random_sample(cfg.n_init, seed);
    run_system_loop_from(eval, &init, cfg, seed)
}

/// Runs the loop from the given initial configurations.
pub fn run_system_loop_from(
    eval: &dyn Fn(&ParameterConfig) -> Result<Evaluation>,
    init: &[ParameterConfig],
    cfg: &SystemLoopConfig,
    seed: u64,
) -> Result<SystemLoopResult> {
    if cfg.pool_size == 0 || cfg.n_mc == 0 {
        return Err(invalid("pool_size and n_mc must be positive"));
    }
    let mut out = SystemLoopResult { records: Vec::new(), cells: CellDatabase::default(), failures: Vec::new() };
    for p in init {
        record(eval, p, 0, &mut out);
    }
    extend_system_loop(eval, &mut out, cfg.t_max, cfg, seed)?;
    Ok(out)
}

/// Runs `t` more iterations on top of `out`, numbering them after the last
/// recorded one.
pub fn extend_system_loop(
    eval: &dyn Fn(&ParameterConfig) -> Result<Evaluation>,
    out: &mut SystemLoopResult,
    t: usize,
    cfg: &SystemLoopConfig,
    seed: u64,
) -> Result<()> {
    if cfg.pool_size == 0 || cfg.n_mc == 0 {
        return Err(invalid("pool_size and n_mc must be positive"));
    }
    let start = out.records.iter().map(|r| r.iteration).max().unwrap_or(0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5bd1_e995);
    for i in 1..=t {
        let it = start + i;
        let next = if out.records.len() < 2 {
            space::sample_one(&mut rng)
        } else {
            propose(out, cfg, &mut rng, seed.wrapping_add(i as u64))?
        };
        record(eval, &next, it, out);
    }
    Ok(())
}

fn record(
    eval: &dyn Fn(&ParameterConfig) -> Result<Evaluation>,
    p: &ParameterConfig,
    iteration: usize,
    out: &mut SystemLoopResult,
) {
    match eval(p) {
        Ok(e) if e.objectives.is_finite() => {
            let id = out.records.len() as u64;
            out.records.push(EvalRecord { id, iteration, config: *p, objectives: e.objectives, feasible: e.feasible });
            out.cells.records.push(CellData {
                id,
                netlist_key: e.netlist_key,
                critical_ns: e.critical_ns,
                paths: e.paths,
                type_power: e.type_power,
                type_area: e.type_area,
            });
        }
        Ok(_) => {
            warn!("backend returned non-finite objectives; skipping configuration");
            out.failures.push((*p, "non-finite objectives".into()));
        }
        Err(e) => {
            warn!("backend failed on a configuration: {e}");
            out.failures.push((*p, e.to_string()));
        }
    }
}

/// EHVI argmax over a fresh random pool.
fn propose(out: &SystemLoopResult, cfg: &SystemLoopConfig, rng: &mut ChaCha8Rng, seed: u64) -> Result<ParameterConfig> {
    let ys = out.objectives();
    let norm = Normalizer::fit(&ys)?;
    let yn: Vec<ObjectiveVector> = ys.iter().map(|y| norm.apply(y)).collect();
    let x: Vec<Vec<f64>> = out.records.iter().map(|r| encode_config(&r.config)).collect::<Result<_>>()?;
    let model = PrfModel::fit_with(&x, &yn, cfg.n_trees, &cfg.tree, seed)?;
    let archive = ParetoArchive::from_points(&yn, ObjectiveVector::splat(cfg.ref_margin))?;

    let mut best: Option<(f64, ParameterConfig)> = None;
    for k in 0..cfg.pool_size {
        let p = space::sample_one(rng);
        let post = model.predict(&encode_config(&p)?)?;
        let a = ehvi(&post, &archive, cfg.n_mc, seed.wrapping_mul(0x9E37_79B9).wrapping_add(k as u64))?;
        if best.as_ref().is_none_or(|b| a > b.0) {
            best = Some((a, p));
        }
    }
    let (a, p) = best.expect("pool is non-empty");
    info!("system loop: pool argmax EHVI {a:.3e}");
    Ok(p)
}
