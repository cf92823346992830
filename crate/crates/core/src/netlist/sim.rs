// SPDX-License-Identifier: Apache-2.0

//! Cycle-based functional simulation.
//!
//! Values are 64-lane bit vectors: lane `l` of every net word is an
//! independent simulation, so one pass evaluates 64 stimuli at once.
//! Each cycle applies the inputs, settles the combinational logic, clocks
//! every register and settles again. Registers power up at zero.

use std::collections::{BTreeMap, HashMap};

use super::cell::CellFunction;
use super::graph::{NetGraph, NetId};
use super::library::CellLibrary;
use crate::error::{malformed, Error, Result};

#[derive(Debug, Clone)]
struct Op {
    func: CellFunction,
    ins: Vec<usize>,
    out: usize,
}

fn eval_word(func: CellFunction, v: &[u64]) -> u64 {
    use CellFunction::*;
    match func {
        And2 | And3 => v.iter().fold(!0, |acc, x| acc & x),
        Nand2 | Nand3 => !v.iter().fold(!0, |acc, x| acc & x),
        Or2 | Or3 => v.iter().fold(0, |acc, x| acc | x),
        Nor2 => !(v[0] | v[1]),
        Xor2 => v[0] ^ v[1],
        Xnor2 => !(v[0] ^ v[1]),
        Inv => !v[0],
        Buf | Dff => v[0],
        Maj => (v[0] & v[1]) | (v[0] & v[2]) | (v[1] & v[2]),
        Aoi21 => !((v[0] & v[1]) | v[2]),
        Ao21 => (v[0] & v[1]) | v[2],
        Ao22 => (v[0] & v[1]) | (v[2] & v[3]),
        Oa21 => (v[0] | v[1]) & v[2],
        Oa22 => (v[0] | v[1]) & (v[2] | v[3]),
    }
}

/// Compiled simulator for one netlist.
#[derive(Debug, Clone)]
pub struct Simulator {
    ops: Vec<Op>,
    /// (D slot, Q slot) per register.
    regs: Vec<(usize, usize)>,
    slots: Vec<u64>,
    net_count: usize,
}

impl Simulator {
    /// Compiles a netlist of basic cells.
    pub fn new(g: &NetGraph) -> Result<Self> {
        Self::compile(g, None)
    }

    /// Compiles a netlist whose fused cells are defined in `lib`.
    pub fn with_library(g: &NetGraph, lib: &CellLibrary) -> Result<Self> {
        Self::compile(g, Some(lib))
    }

    fn compile(g: &NetGraph, lib: Option<&CellLibrary>) -> Result<Self> {
        let order = g.combinational_order()?;
        let mut ops = Vec::with_capacity(order.len());
        let mut next_slot = g.net_count();
        for cid in order {
            let cell = g.cell(cid);
            let ins: Vec<usize> = cell.inputs.iter().map(|p| p.net.index()).collect();
            let outs: Vec<usize> = cell.outputs.iter().map(|p| p.net.index()).collect();
            if let Some(func) = CellFunction::from_type(&cell.cell_type) {
                ops.push(Op { func, ins, out: outs[0] });
                continue;
            }
            let def = lib.and_then(|l| l.fused_def(&cell.cell_type)).ok_or_else(|| {
                Error::LibraryMismatch(format!("cell '{}': no definition for type '{}'", cell.name, cell.cell_type))
            })?;
            let frag = &def.fragment;
            if def.inputs.len() != ins.len() || def.outputs.len() != outs.len() {
                return Err(malformed(format!(
                    "cell '{}': pin count does not match fused type '{}'",
                    cell.name, cell.cell_type
                )));
            }
            // Fragment nets map onto the ports or onto fresh scratch slots.
            let mut map = vec![usize::MAX; frag.net_count()];
            for (port, &n) in def.inputs.iter().enumerate() {
                map[n.index()] = ins[port];
            }
            for (port, &n) in def.outputs.iter().enumerate() {
                map[n.index()] = outs[port];
            }
            for m in map.iter_mut().filter(|m| **m == usize::MAX) {
                *m = next_slot;
                next_slot += 1;
            }
            for fid in frag.combinational_order()? {
                let fc = frag.cell(fid);
                let func = CellFunction::from_type(&fc.cell_type)
                    .ok_or_else(|| malformed(format!("fused type '{}' nests a non-basic cell", cell.cell_type)))?;
                ops.push(Op {
                    func,
                    ins: fc.inputs.iter().map(|p| map[p.net.index()]).collect(),
                    out: map[fc.outputs[0].net.index()],
                });
            }
        }
        let regs = g
            .cells()
            .iter()
            .filter(|c| c.is_sequential())
            .map(|c| (c.inputs[0].net.index(), c.outputs[0].net.index()))
            .collect();
        Ok(Self { ops, regs, slots: vec![0; next_slot], net_count: g.net_count() })
    }

    /// Returns every register and net to zero.
    pub fn reset(&mut self) {
        self.slots.iter_mut().for_each(|s| *s = 0);
    }

    pub fn set(&mut self, net: NetId, word: u64) {
        self.slots[net.index()] = word;
    }

    pub fn get(&self, net: NetId) -> u64 {
        self.slots[net.index()]
    }

    /// Settles combinational logic without clocking.
    pub fn settle(&mut self) {
        let mut buf = [0u64; 4];
        for op in &self.ops {
            for (k, &i) in op.ins.iter().enumerate() {
                buf[k] = self.slots[i];
            }
            self.slots[op.out] = eval_word(op.func, &buf[..op.ins.len()]);
        }
    }

    /// One clock cycle with the currently applied inputs.
    pub fn step(&mut self) {
        self.settle();
        let latched: Vec<u64> = self.regs.iter().map(|&(d, _)| self.slots[d]).collect();
        for (&(_, q), v) in self.regs.iter().zip(latched) {
            self.slots[q] = v;
        }
        self.settle();
    }

    /// Drives a bus with one integer per lane; lanes beyond `values` get 0.
    pub fn set_bus(&mut self, bus: &[NetId], values: &[u64]) {
        for (bit, &n) in bus.iter().enumerate() {
            let mut w = 0u64;
            for (lane, &v) in values.iter().enumerate().take(64) {
                w |= ((v >> bit) & 1) << lane;
            }
            self.set(n, w);
        }
    }

    /// Reads a bus as one integer per lane.
    pub fn bus(&self, bus: &[NetId], lanes: usize) -> Vec<u64> {
        (0..lanes.min(64))
            .map(|lane| bus.iter().enumerate().fold(0u64, |acc, (bit, &n)| acc | (((self.get(n) >> lane) & 1) << bit)))
            .collect()
    }

    pub fn net_count(&self) -> usize {
        self.net_count
    }
}

/// Runs `cycles` clock cycles from reset with fixed input values and
/// returns the value of every output net.
pub fn simulate(g: &NetGraph, inputs: &HashMap<NetId, bool>, cycles: usize) -> Result<BTreeMap<NetId, bool>> {
    let mut sim = Simulator::new(g)?;
    for n in g.inputs() {
        let v = inputs
            .get(&n)
            .ok_or_else(|| Error::InvalidInput(format!("input net '{}' is not assigned", g.net(n).name)))?;
        sim.set(n, if *v { !0 } else { 0 });
    }
    if cycles == 0 {
        sim.settle();
    }
    for _ in 0..cycles {
        sim.step();
    }
    Ok(g.outputs().into_iter().map(|n| (n, sim.get(n) & 1 == 1)).collect())
}
