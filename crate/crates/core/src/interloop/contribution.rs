// SPDX-License-Identifier: Apache-2.0

//! Per-cell-type shares of total power and of timing criticality.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::netlist::{CellLibrary, NetGraph, StaResult};

/// Default sensitivity of the timing weights, per ns.
pub const DEFAULT_LAMBDA: f64 = 10.0;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TypeWeight {
    pub delay: f64,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellContribution {
    pub weights: BTreeMap<String, TypeWeight>,
    pub lambda: f64,
}

impl CellContribution {
    pub fn compute(g: &NetGraph, lib: &CellLibrary, sta: &StaResult, lambda: f64) -> Result<Self> {
        let power = power_contribution(g, lib)?;
        let delay = timing_contribution(g, sta, lambda)?;
        let mut weights: BTreeMap<String, TypeWeight> = BTreeMap::new();
        for (t, w) in power {
            weights.entry(t).or_default().power = w;
        }
        for (t, w) in delay {
            weights.entry(t).or_default().delay = w;
        }
        Ok(Self { weights, lambda })
    }

    /// Every cell type present in `g` weighted equally in both metrics.
    pub fn uniform(g: &NetGraph) -> Result<Self> {
        let types: Vec<String> = g.type_counts().into_keys().collect();
        if types.is_empty() {
            return Err(invalid("netlist has no cells"));
        }
        let w = 1.0 / types.len() as f64;
        let weights = types.into_iter().map(|t| (t, TypeWeight { delay: w, power: w })).collect();
        Ok(Self { weights, lambda: 0.0 })
    }

    pub fn delay_sum(&self) -> f64 {
        self.weights.values().map(|w| w.delay).sum()
    }

    pub fn power_sum(&self) -> f64 {
        self.weights.values().map(|w| w.power).sum()
    }
}

/// Share of total instance power per cell type.
pub fn power_contribution(g: &NetGraph, lib: &CellLibrary) -> Result<BTreeMap<String, f64>> {
    if g.cell_count() == 0 {
        return Err(invalid("netlist has no cells"));
    }
    let mut by_type: BTreeMap<String, f64> = BTreeMap::new();
    let mut total = 0.0;
    for c in g.cells() {
        let p = lib.get(&c.cell_type)?.power;
        *by_type.entry(c.cell_type.clone()).or_insert(0.0) += p;
        total += p;
    }
    for v in by_type.values_mut() {
        *v /= total;
    }
    Ok(by_type)
}

/// Timing share per cell type: each combinational instance is weighted by
/// `exp(lambda * d)` where `d` is the worst path delay through it (ns).
/// Registers carry no timing weight.
pub fn timing_contribution(g: &NetGraph, sta: &StaResult, lambda: f64) -> Result<BTreeMap<String, f64>> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(invalid(format!("lambda must be non-negative, got {lambda}")));
    }
    if sta.through.len() != g.cell_count() {
        return Err(invalid("timing result does not match the netlist"));
    }
    let mut delays = Vec::new();
    for (c, cell) in g.cell_ids().zip(g.cells()) {
        if cell.is_sequential() {
            continue;
        }
        let d = sta.through_delay(c).ok_or_else(|| invalid(format!("no path delay for instance '{}'", cell.name)))?;
        delays.push((cell.cell_type.as_str(), d));
    }
    if delays.is_empty() {
        return Err(invalid("netlist has no combinational cells"));
    }
    // Shifting by the maximum keeps exp() finite; the ratio is unchanged.
    let dmax = delays.iter().map(|&(_, d)| d).fold(f64::NEG_INFINITY, f64::max);
    let mut by_type: BTreeMap<String, f64> = BTreeMap::new();
    let mut total = 0.0;
    for &(t, d) in &delays {
        let w = (lambda * (d - dmax)).exp();
        *by_type.entry(t.to_string()).or_insert(0.0) += w;
        total += w;
    }
    for v in by_type.values_mut() {
        *v /= total;
    }
    Ok(by_type)
}
