// SPDX-License-Identifier: Apache-2.0

//! Deterministic stand-in for synthesis and place-and-route.
//!
//! A configuration is turned into PPA by generating the MAC array for its
//! architecture, substituting fused cells from the library, running static
//! timing and applying multiplier tables for the synthesis and placement
//! knobs. Every table entry lies in (0.8, 1.25].

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::interloop::apply_fusion;
use crate::netlist::{generate_mac_array, static_timing, CellLibrary, NetGraph, StaResult, TimingPath};
use crate::pareto::ObjectiveVector;
use crate::sysloop::space::{ParameterConfig, CLOCK_PERIOD_NS};

/// Multiplier tables and array shape of the backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BackendModel {
    pub rows: usize,
    pub cols: usize,
    pub width: usize,
    /// Folds interconnect into the cell arc delays.
    pub wire_factor: f64,
    /// Indexed by effort level, low to high.
    pub generic_delay: [f64; 3],
    pub generic_power: [f64; 3],
    pub generic_area: [f64; 3],
    pub map_delay: [f64; 3],
    pub map_power: [f64; 3],
    pub map_area: [f64; 3],
    /// none, low, medium, high.
    pub opt_delay: [f64; 4],
    pub opt_power: [f64; 4],
    pub opt_area: [f64; 4],
    /// Gate upsizing under clock pressure `(delay / period)^2`, clamped to 1.
    pub sizing_delay: f64,
    pub sizing_power: f64,
    pub sizing_area: f64,
    /// Dynamic power scales as `(clock_ref_ns / period)^clock_power_exp`.
    pub clock_ref_ns: f64,
    pub clock_power_exp: f64,
    /// Congestion delay at full utilization, before the effort scaling.
    pub congestion_delay: f64,
    /// auto, low, medium, high.
    pub cong_relief: [f64; 4],
    pub cong_area: [f64; 4],
    /// Extra wire power at the lowest utilization.
    pub spread_power: f64,
    /// medium, high.
    pub timing_delay: [f64; 2],
    pub timing_power: [f64; 2],
    /// enabled, disabled.
    pub clk_power_delay: [f64; 2],
    pub clk_power_power: [f64; 2],
    /// Delay grows by `1 + slope * (delay / period - 1)` when timing fails.
    pub penalty_slope: f64,
    pub top_k: usize,
}

impl Default for BackendModel {
    fn default() -> Self {
        Self {
            rows: 8,
            cols: 8,
            width: 8,
            wire_factor: 1.5,
            generic_delay: [1.06, 1.0, 0.96],
            generic_power: [0.98, 1.0, 1.02],
            generic_area: [0.99, 1.0, 1.02],
            map_delay: [1.05, 1.0, 0.97],
            map_power: [1.02, 1.0, 0.99],
            map_area: [1.03, 1.0, 0.98],
            opt_delay: [1.0, 0.98, 0.96, 0.94],
            opt_power: [1.0, 1.01, 1.02, 1.04],
            opt_area: [1.0, 1.01, 1.03, 1.05],
            sizing_delay: 0.15,
            sizing_power: 0.2,
            sizing_area: 0.15,
            clock_ref_ns: 0.6,
            clock_power_exp: 0.25,
            congestion_delay: 0.24,
            cong_relief: [0.8, 1.0, 0.7, 0.5],
            cong_area: [1.0, 1.0, 1.01, 1.02],
            spread_power: 0.1,
            timing_delay: [1.0, 0.96],
            timing_power: [1.0, 1.02],
            clk_power_delay: [1.01, 1.0],
            clk_power_power: [0.94, 1.0],
            penalty_slope: 2.0,
            top_k: 10,
        }
    }
}

/// Backend output for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub objectives: ObjectiveVector,
    /// Critical delay of the netlist before any knob multiplier, ns.
    pub critical_ns: f64,
    pub feasible: bool,
    pub netlist_key: String,
    /// Summed instance power and area per cell type, before multipliers.
    pub type_power: BTreeMap<String, f64>,
    pub type_area: BTreeMap<String, f64>,
    pub paths: Vec<TimingPath>,
}

/// Evaluator with a cache of generated netlists.
#[derive(Debug, Default)]
pub struct Backend {
    pub model: BackendModel,
    cache: Mutex<HashMap<String, Arc<NetGraph>>>,
}

impl Backend {
    pub fn new(model: BackendModel) -> Self {
        Self { model, cache: Mutex::new(HashMap::new()) }
    }

    /// Cache key of the netlist that `p` produces under `lib`.
    pub fn netlist_key(&self, p: &ParameterConfig, lib: &CellLibrary) -> String {
        let fused: String =
            lib.fused.iter().map(|f| format!("{}={}", f.name, short_hash(&f.key))).collect::<Vec<_>>().join(",");
        format!(
            "{}-{}-{}x{}x{}[{}]",
            p.arch.ct_type, p.arch.cpa_type, self.model.rows, self.model.cols, self.model.width, fused
        )
    }

    /// Generated, fused netlist for `p`.
    pub fn netlist(&self, p: &ParameterConfig, lib: &CellLibrary) -> Result<Arc<NetGraph>> {
        let key = self.netlist_key(p, lib);
        if let Some(g) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(Arc::clone(g));
        }
        let m = &self.model;
        let mut g = generate_mac_array(p.arch.ct_type, p.arch.cpa_type, m.rows, m.cols, m.width)?;
        if !lib.fused.is_empty() {
            g = apply_fusion(&g, lib)?;
        }
        let g = Arc::new(g);
        self.cache.lock().expect("cache lock").insert(key, Arc::clone(&g));
        Ok(g)
    }

    /// Netlist and full timing result of `p`.
    pub fn analyze(&self, p: &ParameterConfig, lib: &CellLibrary) -> Result<(Arc<NetGraph>, StaResult)> {
        let g = self.netlist(p, lib)?;
        let sta = static_timing(&g, lib, self.model.top_k)?;
        Ok((g, sta))
    }

    pub fn evaluate(&self, p: &ParameterConfig, lib: &CellLibrary) -> Result<Evaluation> {
        p.validate()?;
        let (g, sta) = self.analyze(p, lib)?;
        let mut type_power: BTreeMap<String, f64> = BTreeMap::new();
        let mut type_area: BTreeMap<String, f64> = BTreeMap::new();
        for c in g.cells() {
            let r = lib.get(&c.cell_type)?;
            *type_power.entry(c.cell_type.clone()).or_insert(0.0) += r.power;
            *type_area.entry(c.cell_type.clone()).or_insert(0.0) += r.area;
        }
        let power: f64 = type_power.values().sum();
        let area: f64 = type_area.values().sum();
        let (objectives, feasible) = self.model.apply(p, sta.critical, power, area);
        Ok(Evaluation {
            objectives,
            critical_ns: sta.critical,
            feasible,
            netlist_key: self.netlist_key(p, lib),
            type_power,
            type_area,
            paths: sta.paths,
        })
    }
}

fn short_hash(s: &str) -> String {
    // FNV-1a; only needs to separate the handful of keys in one library.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

impl BackendModel {
    pub fn validate(&self) -> Result<()> {
        let tables: [&[f64]; 16] = [
            &self.generic_delay,
            &self.generic_power,
            &self.generic_area,
            &self.map_delay,
            &self.map_power,
            &self.map_area,
            &self.opt_delay,
            &self.opt_power,
            &self.opt_area,
            &self.cong_area,
            &self.timing_delay,
            &self.timing_power,
            &self.clk_power_delay,
            &self.clk_power_power,
            &[1.0 - self.sizing_delay, 1.0 + self.sizing_power, 1.0 + self.sizing_area],
            &[
                1.0 + self.congestion_delay * self.cong_relief.iter().fold(0.0, |a: f64, &b| a.max(b)),
                1.0 + self.spread_power,
                (self.clock_ref_ns / CLOCK_PERIOD_NS.0).powf(self.clock_power_exp),
                (self.clock_ref_ns / CLOCK_PERIOD_NS.1).powf(self.clock_power_exp),
            ],
        ];
        for t in tables {
            if t.iter().any(|&v| !(v > 0.8 && v <= 1.25)) {
                return Err(invalid(format!("backend multiplier table {t:?} leaves (0.8, 1.25]")));
            }
        }
        if self.rows == 0 || self.cols == 0 || self.width < 2 || !(self.wire_factor > 0.0) {
            return Err(invalid("backend array shape or wire factor out of range"));
        }
        Ok(())
    }

    /// Maps the netlist totals to objectives; returns whether timing closed.
    pub fn apply(&self, p: &ParameterConfig, critical: f64, power: f64, area: f64) -> (ObjectiveVector, bool) {
        let ls = &p.ls;
        let pd = &p.pd;
        let g = ls.syn_generic_effort.index();
        let m = ls.syn_map_effort.index();
        let o = ls.syn_opt_effort.index();
        let t = pd.place_glb_timing_effort.index();
        let c = pd.place_glb_cong_effort.index();
        let k = usize::from(!pd.place_glb_clk_power_driven);
        let period = ls.clock_period_ns;

        let synth_delay = critical * self.wire_factor * self.generic_delay[g] * self.map_delay[m] * self.opt_delay[o];
        let pressure = (synth_delay / period).min(1.0).powi(2);
        let sized_delay = synth_delay * (1.0 - self.sizing_delay * pressure);

        let u = (pd.place_utilization - 0.5) / 0.4;
        let congestion = 1.0 + self.congestion_delay * self.cong_relief[c] * u * u;
        let mut delay = sized_delay * congestion * self.timing_delay[t] * self.clk_power_delay[k];
        let feasible = delay <= period;
        if !feasible {
            delay *= 1.0 + self.penalty_slope * (delay / period - 1.0);
        }

        let activity = self.generic_power[g]
            * self.map_power[m]
            * self.opt_power[o]
            * (self.clock_ref_ns / period).powf(self.clock_power_exp)
            * (1.0 + self.spread_power * (1.0 - u))
            * self.timing_power[t]
            * self.clk_power_power[k];
        let power = power * activity * (1.0 + self.sizing_power * pressure);

        let area = area
            * self.generic_area[g]
            * self.map_area[m]
            * self.opt_area[o]
            * self.cong_area[c]
            * (1.0 + self.sizing_area * pressure)
            / pd.place_utilization;
        (ObjectiveVector::new(delay, power, area), feasible)
    }
}

/// One-off evaluation with the default backend model.
pub fn evaluate_system(p: &ParameterConfig, lib: &CellLibrary) -> Result<ObjectiveVector> {
    Ok(Backend::default().evaluate(p, lib)?.objectives)
}
