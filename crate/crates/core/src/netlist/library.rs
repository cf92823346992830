// SPDX-License-Identifier: Apache-2.0

//! Standard-cell library: per-type PPA records and fused-cell definitions.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::cell::CellFunction;
use super::graph::{NetGraph, NetId};
use crate::error::{Error, Result};
use crate::tech::TechFactors;

pub const LIBRARY_FORMAT: &str = "orthrus-library";
pub const LIBRARY_VERSION: u32 = 1;

/// PPA of one cell type.
///
/// `delay` is the arc delay (ns) used for every input-to-output arc unless
/// `arcs` gives a per-arc matrix, indexed `[input][output]`, where `None`
/// marks an input that does not reach that output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub delay: f64,
    pub power: f64,
    pub area: f64,
    #[serde(default = "one_row")]
    pub num_rows: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub arcs: Option<Vec<Vec<Option<f64>>>>,
}

fn one_row() -> u8 {
    1
}

impl CellRecord {
    pub fn basic(delay: f64, power: f64, area: f64) -> Self {
        Self { delay, power, area, num_rows: 1, arcs: None }
    }

    /// Delay of the arc from input `i` to output `o`.
    pub fn arc(&self, i: usize, o: usize) -> Option<f64> {
        match &self.arcs {
            Some(m) => m.get(i).and_then(|row| row.get(o)).copied().flatten(),
            None => Some(self.delay),
        }
    }

    fn scale_delay(&mut self, k: f64) {
        self.delay *= k;
        if let Some(m) = &mut self.arcs {
            for d in m.iter_mut().flatten().flatten() {
                *d *= k;
            }
        }
    }
}

/// A multi-cell pattern packaged as a new cell type.
///
/// The fragment's nets listed in `inputs` and `outputs` bind to the fused
/// cell's `I<n>` and `O<n>` pins in order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusedCellDef {
    pub name: String,
    pub key: String,
    pub fragment: NetGraph,
    pub inputs: Vec<NetId>,
    pub outputs: Vec<NetId>,
}

/// Discounts applied when a fragment is packaged as one cell.
pub const FUSED_DELAY_FACTOR: f64 = 0.9;
pub const FUSED_POWER_FACTOR: f64 = 0.95;
pub const FUSED_AREA_FACTOR: f64 = 0.9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellLibrary {
    pub cells: BTreeMap<String, CellRecord>,
    #[serde(default)]
    pub fused: Vec<FusedCellDef>,
    #[serde(default)]
    pub factors: TechFactors,
}

/// Register type inserted by the array generator.
pub const DFF: &str = "DFFx1";

/// (type, delay ns, power mW, area um^2)
const DEFAULT_CELLS: &[(&str, f64, f64, f64)] = &[
    ("AND2x2", 0.016, 0.00070, 0.08748),
    ("AND2x4", 0.014, 0.00110, 0.11664),
    ("AND3x1", 0.019, 0.00065, 0.08748),
    ("NAND2x1", 0.010, 0.00040, 0.05832),
    ("NAND2x2", 0.009, 0.00070, 0.08748),
    ("NAND3x1", 0.013, 0.00050, 0.07290),
    ("OR2x2", 0.017, 0.00072, 0.08748),
    ("OR2x4", 0.015, 0.00115, 0.11664),
    ("OR3x1", 0.021, 0.00068, 0.08748),
    ("NOR2x1", 0.012, 0.00042, 0.05832),
    ("XNOR2x2", 0.020, 0.00110, 0.13122),
    ("XOR2x2", 0.020, 0.00110, 0.13122),
    ("INVx1", 0.008, 0.00030, 0.04374),
    ("INVx2", 0.007, 0.00045, 0.05832),
    ("INVx4", 0.006, 0.00080, 0.08748),
    ("INVx8", 0.005, 0.00150, 0.14580),
    ("BUFx2", 0.012, 0.00060, 0.07290),
    ("BUFx4", 0.011, 0.00095, 0.10206),
    ("BUFx8", 0.010, 0.00170, 0.16038),
    ("MAJx1", 0.018, 0.00085, 0.11664),
    ("MAJx2", 0.016, 0.00120, 0.13122),
    ("AOI21x1", 0.013, 0.00050, 0.07290),
    ("AO21x1", 0.017, 0.00075, 0.08748),
    ("AO22x1", 0.019, 0.00085, 0.10206),
    ("OA21x1", 0.017, 0.00075, 0.08748),
    ("OA22x1", 0.019, 0.00085, 0.10206),
    (DFF, 0.030, 0.00200, 0.29160),
];

impl Default for CellLibrary {
    fn default() -> Self {
        let cells =
            DEFAULT_CELLS.iter().map(|&(name, d, p, a)| (name.to_string(), CellRecord::basic(d, p, a))).collect();
        Self { cells, fused: Vec::new(), factors: TechFactors::default() }
    }
}

impl CellLibrary {
    pub fn get(&self, cell_type: &str) -> Result<&CellRecord> {
        self.cells
            .get(cell_type)
            .ok_or_else(|| Error::LibraryMismatch(format!("cell type '{cell_type}' is not in the library")))
    }

    pub fn fused_def(&self, cell_type: &str) -> Option<&FusedCellDef> {
        self.fused.iter().find(|f| f.name == cell_type)
    }

    pub fn is_fused(&self, cell_type: &str) -> bool {
        self.fused_def(cell_type).is_some()
    }

    /// Checks that every cell type of `g` has a record.
    pub fn check_covers(&self, g: &NetGraph) -> Result<()> {
        for c in g.cells() {
            self.get(&c.cell_type)?;
        }
        Ok(())
    }

    /// Copy of the library with every arc delay multiplied by `k`.
    pub fn with_scaled_delays(&self, k: f64) -> Self {
        let mut out = self.clone();
        for r in out.cells.values_mut() {
            r.scale_delay(k);
        }
        out
    }

    /// Registers a fused cell and derives its single-row base PPA from the
    /// constituent cells of its fragment.
    pub fn add_fused(&mut self, def: FusedCellDef) -> Result<()> {
        let mut power = 0.0;
        let mut area = 0.0;
        for c in def.fragment.cells() {
            let r = self.get(&c.cell_type)?;
            power += r.power;
            area += r.area;
        }
        let arcs = fragment_arcs(&def, self)?;
        let delay = arcs.iter().flatten().flatten().copied().fold(0.0, f64::max);
        let record = CellRecord {
            delay,
            power: power * FUSED_POWER_FACTOR,
            area: area * FUSED_AREA_FACTOR,
            num_rows: 1,
            arcs: Some(arcs),
        };
        self.cells.insert(def.name.clone(), record);
        self.fused.retain(|f| f.name != def.name);
        self.fused.push(def);
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in &self.cells {
            let finite_pos = |v: f64| v.is_finite() && v > 0.0;
            if !(finite_pos(r.power) && finite_pos(r.area) && r.delay.is_finite() && r.delay >= 0.0) {
                return Err(Error::InvalidInput(format!("cell '{name}' has non-positive PPA")));
            }
            let fused = self.is_fused(name);
            let rows_ok = if fused { (1..=3).contains(&r.num_rows) } else { r.num_rows == 1 };
            if !rows_ok {
                return Err(Error::InvalidInput(format!("cell '{name}' has invalid num_rows {}", r.num_rows)));
            }
            if !fused && CellFunction::from_type(name).is_none() {
                return Err(Error::InvalidInput(format!("unknown basic cell type '{name}'")));
            }
        }
        for f in &self.fused {
            if !self.cells.contains_key(&f.name) {
                return Err(Error::InvalidInput(format!("fused cell '{}' has no PPA record", f.name)));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = LibraryDoc { format: LIBRARY_FORMAT.into(), version: LIBRARY_VERSION, library: self.clone() };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: LibraryDoc = serde_json::from_str(text)?;
        if doc.format != LIBRARY_FORMAT || doc.version != LIBRARY_VERSION {
            return Err(Error::Parse(format!("unsupported library document {} v{}", doc.format, doc.version)));
        }
        doc.library.validate()?;
        Ok(doc.library)
    }
}

#[derive(Serialize, Deserialize)]
struct LibraryDoc {
    format: String,
    version: u32,
    #[serde(flatten)]
    library: CellLibrary,
}

/// Longest-path delay from each fragment input to each output, discounted.
fn fragment_arcs(def: &FusedCellDef, lib: &CellLibrary) -> Result<Vec<Vec<Option<f64>>>> {
    let g = &def.fragment;
    let order = g.combinational_order()?;
    let mut out = Vec::with_capacity(def.inputs.len());
    for &src in &def.inputs {
        let mut at: Vec<Option<f64>> = vec![None; g.net_count()];
        at[src.index()] = Some(0.0);
        for &cid in &order {
            let cell = g.cell(cid);
            let rec = lib.get(&cell.cell_type)?;
            for (oi, o) in cell.outputs.iter().enumerate() {
                let mut best = at[o.net.index()];
                for (ii, p) in cell.inputs.iter().enumerate() {
                    if let (Some(t), Some(d)) = (at[p.net.index()], rec.arc(ii, oi)) {
                        best = Some(best.map_or(t + d, |b: f64| b.max(t + d)));
                    }
                }
                at[o.net.index()] = best;
            }
        }
        out.push(def.outputs.iter().map(|o| at[o.index()].map(|t| t * FUSED_DELAY_FACTOR)).collect());
    }
    Ok(out)
}
