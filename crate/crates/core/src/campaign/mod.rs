// SPDX-License-Identifier: Apache-2.0

//! End-to-end dual-loop campaigns.
//!
//! Per seed, one system loop on the base library is shared by every mode.
//! Each mode then picks anchors on its delay/power frontier, derives a
//! direction per anchor, builds the library the mode allows (fused cells,
//! recharacterized cells, both or neither) and continues the system loop
//! on that library from the Pareto set. The baseline instead continues on
//! the base library with the same number of evaluations.

pub mod config;
pub mod report;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use log::{info, warn};
use serde::{Deserialize, Serialize};

use crate::backend::{Backend, Evaluation};
use crate::error::{Error, Result};
use crate::interloop::{
    knee_index, min_delay_index, mine_subcircuits, ppa_direction_with, select_fusion_candidates, CellContribution,
    DirectionWeights, SubcircuitPattern,
};
use crate::netlist::{generate_mac_array, partition_combinational, CellLibrary};
use crate::pareto::{Normalizer, ObjectiveVector};
use crate::sysloop::{
    extend_system_loop, run_system_loop, run_system_loop_from, write_archive, ArchiveLine, CellData, ParameterConfig,
    SystemLoopConfig, SystemLoopResult,
};
use crate::techloop::{run_tech_loop, TechCandidate};

pub use config::{AnalysisConfig, AnchorKind, CampaignConfig, Mode};
pub use report::{
    front_2d, frontier_rows, group_by_mode, hypervolumes, iso_comparisons, iso_reduction, median, read_frontier_csv,
    seed_normalizers, write_frontier_csv, ArchiveReport, FrontierRow, HvEntry, IsoComparison, IsoDelta, LabeledArchive,
    ISO_TOLERANCE,
};

/// Mined pattern promoted to a fused cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSummary {
    pub name: String,
    pub key: String,
    pub count: usize,
    pub disjoint: usize,
    pub num_cells: usize,
    pub num_inputs: usize,
    pub num_outputs: usize,
    pub depth: usize,
    pub cell_types: BTreeMap<String, usize>,
}

impl PatternSummary {
    fn new(name: &str, p: &SubcircuitPattern) -> Self {
        Self {
            name: name.to_string(),
            key: p.key.clone(),
            count: p.count,
            disjoint: p.disjoint,
            num_cells: p.num_cells,
            num_inputs: p.num_inputs,
            num_outputs: p.num_outputs,
            depth: p.depth,
            cell_types: p.example.type_counts(),
        }
    }
}

/// One anchor of one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnchorRun {
    pub kind: AnchorKind,
    pub round: usize,
    pub config: ParameterConfig,
    pub direction: DirectionWeights,
    /// Chosen technology point; absent when the mode does not recharacterize.
    pub tech: Option<TechCandidate>,
    pub tech_objective: Option<f64>,
    pub tech_evaluations: usize,
    /// Anchor objectives before and after the library update.
    pub before: ObjectiveVector,
    pub after: ObjectiveVector,
    /// Between the direction and the normalized improvement of the anchor.
    pub cosine: Option<f64>,
    pub library: CellLibrary,
    pub patterns: Vec<PatternSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeRun {
    pub mode: Mode,
    pub seed: u64,
    pub hypervolume: f64,
    pub evaluations: usize,
    pub anchors: Vec<AnchorRun>,
    /// Fused libraries built from mined patterns.
    pub fusion_calls: usize,
    pub tech_loop_calls: usize,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRun {
    pub seed: u64,
    pub phase1_evaluations: usize,
    pub failure: Option<String>,
    pub modes: Vec<ModeRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub config: CampaignConfig,
    pub seeds: Vec<SeedRun>,
    pub median_hypervolume: BTreeMap<String, f64>,
    pub iso: Vec<IsoComparison>,
    /// Sorted cosine similarities per recharacterizing mode.
    pub cosine_series: BTreeMap<String, Vec<f64>>,
    pub failed: bool,
}

impl CampaignReport {
    pub fn mode_runs(&self, mode: Mode) -> impl Iterator<Item = &ModeRun> {
        self.seeds.iter().flat_map(move |s| s.modes.iter().filter(move |m| m.mode == mode))
    }

    pub fn hypervolume(&self, mode: Mode, seed: u64) -> Option<f64> {
        self.mode_runs(mode).find(|m| m.seed == seed).map(|m| m.hypervolume)
    }
}

/// Report plus everything persisted alongside it.
#[derive(Debug, Clone, PartialEq)]
pub struct CampaignOutcome {
    pub report: CampaignReport,
    pub lines: Vec<ArchiveLine>,
    pub cells: Vec<CellData>,
}

pub const RUN_FILE: &str = "run.jsonl";
pub const CELLS_FILE: &str = "cells.jsonl";
pub const FRONTIER_FILE: &str = "frontier.csv";
pub const DIRECTIONS_FILE: &str = "directions.json";
pub const PATTERNS_FILE: &str = "patterns.json";
pub const REPORT_FILE: &str = "report.json";

/// Runs every configured mode on every seed and writes the artifacts when
/// `out_dir` is set.
pub fn run_campaign(cfg: &CampaignConfig) -> Result<CampaignOutcome> {
    cfg.validate()?;
    let mut runner = Runner {
        cfg,
        backend: Backend::new(cfg.backend.clone()),
        base: CellLibrary::default(),
        mined: HashMap::new(),
        lines: Vec::new(),
        cells: Vec::new(),
    };
    let mut seeds = Vec::new();
    for &seed in &cfg.seeds {
        seeds.push(runner.run_seed(seed));
    }

    let archives = group_by_mode(&runner.lines);
    let hv: HashMap<(String, u64), f64> =
        hypervolumes(&archives)?.into_iter().map(|e| ((e.label, e.seed), e.hypervolume)).collect();
    let mut per_mode: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    let mut cosine_series: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for m in seeds.iter_mut().flat_map(|s| s.modes.iter_mut()) {
        m.hypervolume = hv.get(&(m.mode.name().to_string(), m.seed)).copied().unwrap_or(0.0);
        per_mode.entry(m.mode.name().to_string()).or_default().push(m.hypervolume);
        if m.mode.recharacterizes() {
            let series = cosine_series.entry(m.mode.name().to_string()).or_default();
            series.extend(m.anchors.iter().filter_map(|a| a.cosine));
        }
    }
    for s in cosine_series.values_mut() {
        s.sort_by(f64::total_cmp);
    }
    let reference = if cfg.modes.contains(&Mode::Baseline) { Mode::Baseline } else { cfg.modes[0] };
    let iso =
        if archives.len() >= 2 { iso_comparisons(&archives, reference.name(), ISO_TOLERANCE)? } else { Vec::new() };
    let failed = seeds.iter().any(|s| s.failure.is_some() || s.modes.iter().any(|m| m.failure.is_some()));
    let report = CampaignReport {
        config: cfg.clone(),
        seeds,
        median_hypervolume: per_mode.into_iter().map(|(k, v)| (k, median(&v))).collect(),
        iso,
        cosine_series,
        failed,
    };
    let outcome = CampaignOutcome { report, lines: runner.lines, cells: runner.cells };
    if let Some(dir) = &cfg.out_dir {
        write_artifacts(&outcome, dir)?;
    }
    Ok(outcome)
}

struct Runner<'a> {
    cfg: &'a CampaignConfig,
    backend: Backend,
    base: CellLibrary,
    /// Fused library and its patterns per architecture.
    mined: HashMap<String, (CellLibrary, Vec<PatternSummary>)>,
    lines: Vec<ArchiveLine>,
    cells: Vec<CellData>,
}

/// Evaluations under one library, continued across rounds.
struct Branch {
    kind: AnchorKind,
    result: SystemLoopResult,
    library: CellLibrary,
    fused: CellLibrary,
    patterns: Vec<PatternSummary>,
    history: Vec<TechCandidate>,
}

impl Runner<'_> {
    fn evaluator<'b>(&'b self, lib: &'b CellLibrary) -> impl Fn(&ParameterConfig) -> Result<Evaluation> + 'b {
        move |p| self.backend.evaluate(p, lib)
    }

    /// Gives `r.records[from..]` global ids and stores their cell data.
    fn absorb(&mut self, r: &SystemLoopResult, from: usize) -> Vec<u64> {
        let mut ids = Vec::new();
        for (rec, cell) in r.records[from..].iter().zip(&r.cells.records[from..]) {
            let id = self.cells.len() as u64;
            debug_assert_eq!(rec.id, cell.id);
            self.cells.push(CellData { id, ..cell.clone() });
            ids.push(id);
        }
        ids
    }

    fn emit(&mut self, r: &SystemLoopResult, ids: &[u64], from: usize, seed: u64, mode: Mode, stage: &str) {
        for (rec, &id) in r.records[from..].iter().zip(ids) {
            let mut line = ArchiveLine::new(rec, seed, mode.name(), stage, CELLS_FILE);
            line.id = id;
            line.cell_data = format!("{CELLS_FILE}#{id}");
            self.lines.push(line);
        }
    }

    fn run_seed(&mut self, seed: u64) -> SeedRun {
        info!("seed {seed}: system loop on the base library");
        let base = self.base.clone();
        let p1 = match run_system_loop(&self.evaluator(&base), &self.cfg.system, seed) {
            Ok(r) if r.records.len() >= 2 => r,
            Ok(r) => {
                let failure = format!("system loop: only {} successful evaluations", r.records.len());
                warn!("seed {seed}: {failure}");
                return SeedRun {
                    seed,
                    phase1_evaluations: r.records.len(),
                    failure: Some(failure),
                    modes: Vec::new(),
                };
            }
            Err(e) => {
                warn!("seed {seed}: system loop failed: {e}");
                return SeedRun {
                    seed,
                    phase1_evaluations: 0,
                    failure: Some(format!("system loop: {e}")),
                    modes: vec![],
                };
            }
        };
        let ids = self.absorb(&p1, 0);
        let modes = self.cfg.modes.clone();
        let modes = modes.into_iter().map(|m| self.run_mode(m, seed, &p1, &ids)).collect();
        SeedRun { seed, phase1_evaluations: p1.records.len(), failure: None, modes }
    }

    fn run_mode(&mut self, mode: Mode, seed: u64, p1: &SystemLoopResult, p1_ids: &[u64]) -> ModeRun {
        info!("seed {seed}: mode {mode}");
        self.emit(p1, p1_ids, 0, seed, mode, "phase1");
        let mut run = ModeRun {
            mode,
            seed,
            hypervolume: 0.0,
            evaluations: p1.records.len(),
            anchors: Vec::new(),
            fusion_calls: 0,
            tech_loop_calls: 0,
            failure: None,
        };
        let outcome = if mode == Mode::Baseline {
            self.continue_baseline(seed, p1, &mut run)
        } else {
            self.dual(seed, p1, &mut run)
        };
        if let Err(e) = outcome {
            warn!("seed {seed}, mode {mode}: {e}");
            run.failure = Some(e.to_string());
        }
        run
    }

    fn phase2_seed(seed: u64, round: usize, slot: usize) -> u64 {
        seed.wrapping_mul(0x0001_0000_0001).wrapping_add(1000 * round as u64 + slot as u64 + 1)
    }

    /// Same evaluation count as the dual-loop modes, on the base library.
    fn continue_baseline(&mut self, seed: u64, p1: &SystemLoopResult, run: &mut ModeRun) -> Result<()> {
        let per_anchor = p1.frontier()?.len() + self.cfg.phase2_iterations;
        let budget = self.cfg.rounds * self.cfg.analysis.anchors.len() * per_anchor;
        let mut r = p1.clone();
        let base = self.base.clone();
        extend_system_loop(&self.evaluator(&base), &mut r, budget, &self.cfg.system, Self::phase2_seed(seed, 0, 0))?;
        let ids = self.absorb(&r, p1.records.len());
        self.emit(&r, &ids, p1.records.len(), seed, Mode::Baseline, "continuation");
        run.evaluations += ids.len();
        Ok(())
    }

    fn fused_for(&mut self, p: &ParameterConfig) -> Result<(CellLibrary, Vec<PatternSummary>)> {
        let key = format!("{}-{}", p.arch.ct_type, p.arch.cpa_type);
        if let Some(hit) = self.mined.get(&key) {
            return Ok(hit.clone());
        }
        let a = &self.cfg.analysis;
        let pe = generate_mac_array(p.arch.ct_type, p.arch.cpa_type, 1, 1, self.cfg.backend.width)?;
        let island = partition_combinational(&pe)
            .into_iter()
            .max_by_key(|g| g.cell_count())
            .ok_or_else(|| Error::InvalidState("processing element has no combinational island".into()))?;
        let patterns = mine_subcircuits(&island, a.bounds.d_max, a.bounds.o_max, a.bounds.i_max)?;
        let chosen = select_fusion_candidates(&patterns, a.n_ext);
        if chosen.is_empty() {
            return Err(Error::InsufficientData(format!("no fusible pattern in the {key} processing element")));
        }
        let lib = crate::interloop::fused_library(&self.base, &chosen)?;
        let summaries = chosen.iter().zip(&lib.fused).map(|(p, f)| PatternSummary::new(&f.name, p)).collect::<Vec<_>>();
        info!("{key}: fusing {}", summaries.iter().map(|s| s.key.as_str()).collect::<Vec<_>>().join(", "));
        self.mined.insert(key, (lib.clone(), summaries.clone()));
        Ok((lib, summaries))
    }

    fn dual(&mut self, seed: u64, p1: &SystemLoopResult, run: &mut ModeRun) -> Result<()> {
        let mode = run.mode;
        let cfg = self.cfg;
        let mut branches: Vec<Branch> = Vec::new();
        for round in 1..=cfg.rounds {
            let count = if round == 1 { cfg.analysis.anchors.len() } else { branches.len() };
            let mut taken: Vec<ParameterConfig> = Vec::new();
            for slot in 0..count {
                let kind = if round == 1 { cfg.analysis.anchors[slot] } else { branches[slot].kind };
                let (source, lib_before) = if round == 1 {
                    (p1.clone(), self.base.clone())
                } else {
                    (branches[slot].result.clone(), branches[slot].library.clone())
                };

                let norm = Normalizer::fit(&source.objectives())?;
                let (idx, pts) = front_2d_indexed(&source, &norm);
                let pos = match kind {
                    AnchorKind::Knee => knee_index(&pts),
                    AnchorKind::MinDelay => min_delay_index(&pts),
                }
                .ok_or_else(|| Error::DegenerateGeometry("empty delay/power frontier".into()))?;
                let anchor = source.records[idx[pos]].config;
                if round == 1 && taken.contains(&anchor) {
                    info!("seed {seed}, {mode}: {} anchor coincides with an earlier one", kind.name());
                    continue;
                }
                taken.push(anchor);
                let direction = ppa_direction_with(&pts, pos, cfg.analysis.k, cfg.analysis.flip)
                    .map_err(|e| Error::DegenerateGeometry(format!("{} direction: {e}", kind.name())))?;

                let (fused, patterns) = if round > 1 {
                    (branches[slot].fused.clone(), branches[slot].patterns.clone())
                } else if mode.fuses() {
                    run.fusion_calls += 1;
                    self.fused_for(&anchor)?
                } else {
                    (self.base.clone(), Vec::new())
                };
                // Library the anchor is analysed under: fused cells at default
                // technology first, the current branch library later.
                let lib_pre = if round == 1 { fused.clone() } else { lib_before.clone() };
                let mut history = if round == 1 {
                    vec![TechCandidate::default_for(&names(&fused))]
                } else {
                    branches[slot].history.clone()
                };

                let mut tech = None;
                let mut tech_objective = None;
                let mut tech_evaluations = 0;
                let library = if mode.recharacterizes() {
                    let (g, sta) = self.backend.analyze(&anchor, &lib_pre)?;
                    let contrib = if mode == Mode::Naive {
                        CellContribution::uniform(&g)?
                    } else {
                        CellContribution::compute(&g, &lib_pre, &sta, cfg.analysis.lambda)?
                    };
                    let t = run_tech_loop(
                        &direction,
                        &contrib,
                        &fused,
                        &history,
                        &cfg.tech,
                        Self::phase2_seed(seed, round, slot),
                    )?;
                    run.tech_loop_calls += 1;
                    history.push(t.best.clone());
                    tech = Some(t.best);
                    tech_objective = Some(t.best_y);
                    tech_evaluations = t.evaluations;
                    t.library
                } else {
                    fused.clone()
                };

                let before = self.backend.evaluate(&anchor, &lib_pre)?.objectives;
                let after = self.backend.evaluate(&anchor, &library)?.objectives;
                let cosine = mode.recharacterizes().then(|| {
                    let d = norm.apply_delta(&ObjectiveVector::new(
                        after.delay - before.delay,
                        after.power - before.power,
                        after.area - before.area,
                    ));
                    direction.cosine((-d.delay, -d.power))
                });
                run.evaluations += 2;

                let init = source.pareto_set()?;
                let sys = SystemLoopConfig { t_max: cfg.phase2_iterations, ..cfg.system.clone() };
                let result =
                    run_system_loop_from(&self.evaluator(&library), &init, &sys, Self::phase2_seed(seed, round, slot))?;
                let ids = self.absorb(&result, 0);
                self.emit(&result, &ids, 0, seed, mode, &format!("{}/r{round}", kind.name()));
                run.evaluations += ids.len();
                if result.records.is_empty() {
                    return Err(Error::InsufficientData(format!(
                        "{} round {round}: every evaluation failed",
                        kind.name()
                    )));
                }

                run.anchors.push(AnchorRun {
                    kind,
                    round,
                    config: anchor,
                    direction,
                    tech,
                    tech_objective,
                    tech_evaluations,
                    before,
                    after,
                    cosine,
                    library: library.clone(),
                    patterns: patterns.clone(),
                });
                let b = Branch { kind, result, library, fused, patterns, history };
                if round == 1 {
                    branches.push(b);
                } else {
                    branches[slot] = b;
                }
            }
        }
        Ok(())
    }
}

fn names(lib: &CellLibrary) -> Vec<String> {
    lib.fused.iter().map(|f| f.name.clone()).collect()
}

/// Record indices of the normalized delay/power frontier and its points,
/// by increasing delay.
fn front_2d_indexed(r: &SystemLoopResult, norm: &Normalizer) -> (Vec<usize>, Vec<(f64, f64)>) {
    let mut order: Vec<usize> = (0..r.records.len()).collect();
    let key = |i: usize| {
        let y = norm.apply(&r.records[i].objectives);
        (y.delay, y.power)
    };
    order.sort_by(|&a, &b| key(a).0.total_cmp(&key(b).0).then(key(a).1.total_cmp(&key(b).1)));
    let mut idx: Vec<usize> = Vec::new();
    let mut pts: Vec<(f64, f64)> = Vec::new();
    for i in order {
        let p = key(i);
        if pts.last().is_none_or(|q| p.1 < q.1) {
            idx.push(i);
            pts.push(p);
        }
    }
    (idx, pts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionEntry {
    pub seed: u64,
    pub mode: Mode,
    pub anchor: AnchorKind,
    pub round: usize,
    pub config: ParameterConfig,
    pub direction: DirectionWeights,
    pub cosine: Option<f64>,
    pub tech: Option<TechCandidate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternEntry {
    pub seed: u64,
    pub mode: Mode,
    pub anchor: AnchorKind,
    pub patterns: Vec<PatternSummary>,
}

impl CampaignReport {
    pub fn directions(&self) -> Vec<DirectionEntry> {
        self.seeds
            .iter()
            .flat_map(|s| &s.modes)
            .flat_map(|m| {
                m.anchors.iter().map(move |a| DirectionEntry {
                    seed: m.seed,
                    mode: m.mode,
                    anchor: a.kind,
                    round: a.round,
                    config: a.config,
                    direction: a.direction,
                    cosine: a.cosine,
                    tech: a.tech.clone(),
                })
            })
            .collect()
    }

    pub fn patterns(&self) -> Vec<PatternEntry> {
        self.seeds
            .iter()
            .flat_map(|s| &s.modes)
            .flat_map(|m| {
                m.anchors.iter().filter(|a| a.round == 1 && !a.patterns.is_empty()).map(move |a| PatternEntry {
                    seed: m.seed,
                    mode: m.mode,
                    anchor: a.kind,
                    patterns: a.patterns.clone(),
                })
            })
            .collect()
    }
}

pub fn write_artifacts(outcome: &CampaignOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(RUN_FILE), write_archive(&outcome.lines)?)?;
    let mut cells = String::new();
    for c in &outcome.cells {
        cells.push_str(&serde_json::to_string(c)?);
        cells.push('\n');
    }
    std::fs::write(dir.join(CELLS_FILE), cells)?;
    let rows = frontier_rows(&group_by_mode(&outcome.lines))?;
    std::fs::write(dir.join(FRONTIER_FILE), write_frontier_csv(&rows)?)?;
    std::fs::write(dir.join(DIRECTIONS_FILE), serde_json::to_string_pretty(&outcome.report.directions())?)?;
    std::fs::write(dir.join(PATTERNS_FILE), serde_json::to_string_pretty(&outcome.report.patterns())?)?;
    std::fs::write(dir.join(REPORT_FILE), serde_json::to_string_pretty(&outcome.report)?)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<CampaignReport> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

pub fn read_cells(text: &str) -> Result<Vec<CellData>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| Error::Parse(format!("line {}: {e}", i + 1))))
        .collect()
}
