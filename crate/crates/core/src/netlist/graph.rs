// SPDX-License-Identifier: Apache-2.0

//! Net-centric netlist graph.
//!
//! Nets are the vertices; every cell instance is a typed hyper-edge from its
//! input nets to its output nets. A [`NetGraph`] is immutable once built and
//! always satisfies the structural invariants checked by
//! [`NetGraphBuilder::build`].

use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::cell::{self, PinDirection};
use crate::error::{malformed, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NetId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellId(pub u32);

impl NetId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl CellId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NetKind {
    Input,
    Output,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Net {
    pub name: String,
    pub kind: NetKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pin {
    pub name: String,
    pub net: NetId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cell {
    pub name: String,
    pub cell_type: String,
    pub inputs: Vec<Pin>,
    pub outputs: Vec<Pin>,
}

impl Cell {
    pub fn is_sequential(&self) -> bool {
        cell::is_sequential(&self.cell_type)
    }
}

/// A reader of a net: the consuming cell and the index into its inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PinRef {
    pub cell: CellId,
    pub pin: usize,
}

#[derive(Debug, Clone)]
pub struct NetGraph {
    nets: Vec<Net>,
    cells: Vec<Cell>,
    driver: Vec<Option<PinRef>>,
    readers: Vec<Vec<PinRef>>,
}

impl PartialEq for NetGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nets == other.nets && self.cells == other.cells
    }
}

impl NetGraph {
    pub fn nets(&self) -> &[Net] {
        &self.nets
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn net(&self, id: NetId) -> &Net {
        &self.nets[id.index()]
    }

    pub fn cell(&self, id: CellId) -> &Cell {
        &self.cells[id.index()]
    }

    pub fn net_count(&self) -> usize {
        self.nets.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn net_ids(&self) -> impl Iterator<Item = NetId> + '_ {
        (0..self.nets.len() as u32).map(NetId)
    }

    pub fn cell_ids(&self) -> impl Iterator<Item = CellId> + '_ {
        (0..self.cells.len() as u32).map(CellId)
    }

    /// The cell output pin driving `net`, if any.
    pub fn driver(&self, net: NetId) -> Option<PinRef> {
        self.driver[net.index()]
    }

    pub fn driver_cell(&self, net: NetId) -> Option<CellId> {
        self.driver[net.index()].map(|p| p.cell)
    }

    /// Cell input pins reading `net`.
    pub fn readers(&self, net: NetId) -> &[PinRef] {
        &self.readers[net.index()]
    }

    pub fn inputs(&self) -> Vec<NetId> {
        self.nets_of_kind(NetKind::Input)
    }

    pub fn outputs(&self) -> Vec<NetId> {
        self.nets_of_kind(NetKind::Output)
    }

    fn nets_of_kind(&self, kind: NetKind) -> Vec<NetId> {
        self.net_ids().filter(|&n| self.net(n).kind == kind).collect()
    }

    pub fn find_net(&self, name: &str) -> Option<NetId> {
        self.nets.iter().position(|n| n.name == name).map(|i| NetId(i as u32))
    }

    /// Nets whose names are `<prefix>0`, `<prefix>1`, ... in bit order.
    pub fn bus(&self, prefix: &str) -> Vec<NetId> {
        let lookup: HashMap<&str, NetId> =
            self.nets.iter().enumerate().map(|(i, n)| (n.name.as_str(), NetId(i as u32))).collect();
        (0..).map_while(|bit| lookup.get(format!("{prefix}{bit}").as_str()).copied()).collect()
    }

    pub fn has_registers(&self) -> bool {
        self.cells.iter().any(Cell::is_sequential)
    }

    /// Per-type instance counts, sorted by type name.
    pub fn type_counts(&self) -> std::collections::BTreeMap<String, usize> {
        let mut counts = std::collections::BTreeMap::new();
        for c in &self.cells {
            *counts.entry(c.cell_type.clone()).or_insert(0) += 1;
        }
        counts
    }

    /// Combinational cells in topological order (drivers before readers).
    /// Register outputs and primary inputs act as sources.
    pub fn combinational_order(&self) -> Result<Vec<CellId>> {
        let mut pending = vec![0usize; self.cells.len()];
        let mut ready = VecDeque::new();
        for id in self.cell_ids() {
            let c = self.cell(id);
            if c.is_sequential() {
                continue;
            }
            let deps = c.inputs.iter().filter(|p| self.is_combinationally_driven(p.net)).count();
            pending[id.index()] = deps;
            if deps == 0 {
                ready.push_back(id);
            }
        }
        let comb_total = self.cells.iter().filter(|c| !c.is_sequential()).count();
        let mut order = Vec::with_capacity(comb_total);
        while let Some(id) = ready.pop_front() {
            order.push(id);
            for out in &self.cell(id).outputs {
                for r in self.readers(out.net) {
                    if self.cell(r.cell).is_sequential() {
                        continue;
                    }
                    let slot = &mut pending[r.cell.index()];
                    *slot -= 1;
                    if *slot == 0 {
                        ready.push_back(r.cell);
                    }
                }
            }
        }
        if order.len() != comb_total {
            let stuck = self
                .cell_ids()
                .find(|&c| !self.cell(c).is_sequential() && pending[c.index()] > 0)
                .map(|c| self.cell(c).name.clone())
                .unwrap_or_default();
            return Err(malformed(format!("combinational cycle through cell '{stuck}'")));
        }
        Ok(order)
    }

    fn is_combinationally_driven(&self, net: NetId) -> bool {
        self.driver_cell(net).is_some_and(|c| !self.cell(c).is_sequential())
    }

    /// Removes cells that cannot influence any output net or register that
    /// is itself live. Input and output nets are kept.
    pub fn prune_dead(&self) -> NetGraph {
        let mut live_net = vec![false; self.nets.len()];
        let mut live_cell = vec![false; self.cells.len()];
        let mut work: Vec<NetId> = self.outputs();
        for &n in &work {
            live_net[n.index()] = true;
        }
        while let Some(n) = work.pop() {
            if let Some(c) = self.driver_cell(n) {
                if !live_cell[c.index()] {
                    live_cell[c.index()] = true;
                    for p in &self.cell(c).inputs {
                        if !live_net[p.net.index()] {
                            live_net[p.net.index()] = true;
                            work.push(p.net);
                        }
                    }
                }
            }
        }
        let keep_cell: Vec<CellId> = self.cell_ids().filter(|c| live_cell[c.index()]).collect();
        let mut referenced = vec![false; self.nets.len()];
        for &c in &keep_cell {
            let cell = self.cell(c);
            for p in cell.inputs.iter().chain(&cell.outputs) {
                referenced[p.net.index()] = true;
            }
        }
        let keep_net = |i: usize| self.nets[i].kind != NetKind::Internal || referenced[i];
        self.subgraph(&keep_cell, keep_net)
    }

    /// Copies the listed cells and the nets accepted by `keep_net`, renumbering
    /// ids densely while preserving relative order.
    fn subgraph(&self, keep_cells: &[CellId], keep_net: impl Fn(usize) -> bool) -> NetGraph {
        let mut remap = vec![u32::MAX; self.nets.len()];
        let mut b = NetGraphBuilder::new();
        for (i, n) in self.nets.iter().enumerate() {
            if keep_net(i) {
                remap[i] = b.add_net(n.name.clone(), n.kind).0;
            }
        }
        for &c in keep_cells {
            let cell = self.cell(c);
            let map = |pins: &[Pin]| {
                pins.iter().map(|p| Pin { name: p.name.clone(), net: NetId(remap[p.net.index()]) }).collect::<Vec<_>>()
            };
            b.push_cell(Cell {
                name: cell.name.clone(),
                cell_type: cell.cell_type.clone(),
                inputs: map(&cell.inputs),
                outputs: map(&cell.outputs),
            });
        }
        b.build().expect("subgraph of a valid netlist is valid")
    }
}

/// Incremental constructor for [`NetGraph`].
#[derive(Debug, Default)]
pub struct NetGraphBuilder {
    nets: Vec<Net>,
    cells: Vec<Cell>,
}

impl NetGraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_net(&mut self, name: impl Into<String>, kind: NetKind) -> NetId {
        self.nets.push(Net { name: name.into(), kind });
        NetId(self.nets.len() as u32 - 1)
    }

    pub fn set_kind(&mut self, net: NetId, kind: NetKind) {
        self.nets[net.index()].kind = kind;
    }

    pub fn net_count(&self) -> usize {
        self.nets.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// Adds a cell; pin directions are resolved from the cell type and pins
    /// are stored in canonical order.
    pub fn add_cell(
        &mut self,
        name: impl Into<String>,
        cell_type: impl Into<String>,
        pins: &[(&str, NetId)],
    ) -> Result<CellId> {
        let name = name.into();
        let cell_type = cell_type.into();
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        for &(pin, net) in pins {
            let p = Pin { name: pin.to_string(), net };
            match cell::pin_direction(&cell_type, pin) {
                Some(PinDirection::Input) => inputs.push(p),
                Some(PinDirection::Output) => outputs.push(p),
                None => {
                    return Err(malformed(format!("cell '{name}': pin '{pin}' does not exist on type '{cell_type}'")))
                }
            }
        }
        inputs.sort_by_key(|p| cell::pin_order(&cell_type, &p.name));
        outputs.sort_by_key(|p| cell::pin_order(&cell_type, &p.name));
        Ok(self.push_cell(Cell { name, cell_type, inputs, outputs }))
    }

    pub fn push_cell(&mut self, cell: Cell) -> CellId {
        self.cells.push(cell);
        CellId(self.cells.len() as u32 - 1)
    }

    /// Validates connectivity and freezes the graph.
    pub fn build(self) -> Result<NetGraph> {
        let n = self.nets.len();
        let mut driver: Vec<Option<PinRef>> = vec![None; n];
        let mut readers: Vec<Vec<PinRef>> = vec![Vec::new(); n];
        for (ci, cell) in self.cells.iter().enumerate() {
            let id = CellId(ci as u32);
            if let Some(func) = cell::CellFunction::from_type(&cell.cell_type) {
                let expected = func.input_pins();
                if cell.inputs.len() != expected.len()
                    || expected.iter().any(|e| !cell.inputs.iter().any(|p| p.name == *e))
                    || cell.outputs.len() != 1
                {
                    return Err(malformed(format!(
                        "cell '{}' of type '{}' has an incomplete pin map",
                        cell.name, cell.cell_type
                    )));
                }
            } else if cell.outputs.is_empty() {
                return Err(malformed(format!("cell '{}' has no output pin", cell.name)));
            }
            for (pi, p) in cell.inputs.iter().enumerate() {
                if p.net.index() >= n {
                    return Err(malformed(format!(
                        "cell '{}': pin '{}' references missing net {}",
                        cell.name, p.name, p.net
                    )));
                }
                readers[p.net.index()].push(PinRef { cell: id, pin: pi });
            }
            for (pi, p) in cell.outputs.iter().enumerate() {
                let Some(slot) = driver.get_mut(p.net.index()) else {
                    return Err(malformed(format!(
                        "cell '{}': pin '{}' references missing net {}",
                        cell.name, p.name, p.net
                    )));
                };
                if let Some(prev) = slot {
                    return Err(malformed(format!(
                        "net '{}' has two drivers: '{}' and '{}'",
                        self.nets[p.net.index()].name,
                        self.cells[prev.cell.index()].name,
                        cell.name
                    )));
                }
                *slot = Some(PinRef { cell: id, pin: pi });
            }
        }
        for (i, net) in self.nets.iter().enumerate() {
            match (net.kind, driver[i]) {
                (NetKind::Input, Some(d)) => {
                    return Err(malformed(format!(
                        "input net '{}' is driven by cell '{}'",
                        net.name,
                        self.cells[d.cell.index()].name
                    )))
                }
                (NetKind::Internal | NetKind::Output, None) => {
                    return Err(malformed(format!("net '{}' has no driver", net.name)))
                }
                _ => {}
            }
        }
        Ok(NetGraph { nets: self.nets, cells: self.cells, driver, readers })
    }
}
