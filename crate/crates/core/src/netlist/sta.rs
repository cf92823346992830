// SPDX-License-Identifier: Apache-2.0

//! Static timing analysis over the net-centric graph.
//!
//! Paths launch at primary inputs and register outputs and are captured at
//! primary outputs, register inputs and unread nets. Registers are ideal:
//! they add no delay and split paths. Per-instance worst delays come from a
//! forward arrival pass and a backward tail pass, so no path is enumerated.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::graph::{CellId, NetGraph, NetId, NetKind};
use super::library::{CellLibrary, CellRecord};
use crate::error::Result;

/// One launch-to-capture route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingPath {
    pub cells: Vec<CellId>,
    /// Launch net followed by the net after each cell.
    pub nets: Vec<NetId>,
    pub delay: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaResult {
    /// Worst path delay through each instance; `None` for registers.
    pub through: Vec<Option<f64>>,
    pub arrival: Vec<f64>,
    pub tail: Vec<f64>,
    pub paths: Vec<TimingPath>,
    pub critical: f64,
}

impl StaResult {
    pub fn through_delay(&self, c: CellId) -> Option<f64> {
        self.through[c.index()]
    }
}

const NEG: f64 = f64::NEG_INFINITY;

fn is_launch(g: &NetGraph, n: NetId) -> bool {
    g.net(n).kind == NetKind::Input || g.driver_cell(n).is_some_and(|c| g.cell(c).is_sequential())
}

fn is_capture(g: &NetGraph, n: NetId) -> bool {
    let readers = g.readers(n);
    g.net(n).kind == NetKind::Output || readers.is_empty() || readers.iter().any(|r| g.cell(r.cell).is_sequential())
}

pub fn static_timing(g: &NetGraph, lib: &CellLibrary, top_k: usize) -> Result<StaResult> {
    lib.check_covers(g)?;
    let order = g.combinational_order()?;
    let recs: Vec<&CellRecord> = g.cells().iter().map(|c| lib.get(&c.cell_type)).collect::<Result<_>>()?;

    let mut at = vec![NEG; g.net_count()];
    for n in g.net_ids() {
        if is_launch(g, n) {
            at[n.index()] = 0.0;
        }
    }
    for &cid in &order {
        let cell = g.cell(cid);
        for (oi, o) in cell.outputs.iter().enumerate() {
            let mut best = NEG;
            for (ii, p) in cell.inputs.iter().enumerate() {
                if let Some(d) = recs[cid.index()].arc(ii, oi) {
                    best = best.max(at[p.net.index()] + d);
                }
            }
            at[o.net.index()] = best;
        }
    }

    let mut tail = vec![NEG; g.net_count()];
    for n in g.net_ids() {
        if is_capture(g, n) {
            tail[n.index()] = 0.0;
        }
    }
    for &cid in order.iter().rev() {
        let cell = g.cell(cid);
        for (ii, p) in cell.inputs.iter().enumerate() {
            let mut best = tail[p.net.index()];
            for (oi, o) in cell.outputs.iter().enumerate() {
                if let Some(d) = recs[cid.index()].arc(ii, oi) {
                    best = best.max(d + tail[o.net.index()]);
                }
            }
            tail[p.net.index()] = best;
        }
    }

    let mut through = vec![None; g.cell_count()];
    let mut critical: f64 = 0.0;
    for &cid in &order {
        let cell = g.cell(cid);
        let mut best = NEG;
        for (ii, p) in cell.inputs.iter().enumerate() {
            for (oi, o) in cell.outputs.iter().enumerate() {
                if let Some(d) = recs[cid.index()].arc(ii, oi) {
                    best = best.max(at[p.net.index()] + d + tail[o.net.index()]);
                }
            }
        }
        if best.is_finite() {
            through[cid.index()] = Some(best);
            critical = critical.max(best);
        }
    }

    let paths = top_paths(g, &recs, &at, &tail, top_k);
    Ok(StaResult { through, arrival: at, tail, paths, critical })
}

#[derive(Debug)]
struct Partial {
    bound: f64,
    delay: f64,
    done: bool,
    cells: Vec<CellId>,
    nets: Vec<NetId>,
}

impl PartialEq for Partial {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Partial {}
impl PartialOrd for Partial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Partial {
    fn cmp(&self, other: &Self) -> Ordering {
        // Larger bound first; completed paths first on ties, then by the
        // route itself so the order is total and deterministic.
        self.bound.total_cmp(&other.bound).then(self.done.cmp(&other.done)).then_with(|| other.nets.cmp(&self.nets))
    }
}

/// Best-first search; the tail values are exact upper bounds on the
/// remaining delay, so paths complete in non-increasing delay order.
fn top_paths(g: &NetGraph, recs: &[&CellRecord], at: &[f64], tail: &[f64], k: usize) -> Vec<TimingPath> {
    let mut out = Vec::new();
    if k == 0 {
        return out;
    }
    let mut heap = BinaryHeap::new();
    for n in g.net_ids() {
        if is_launch(g, n) && tail[n.index()].is_finite() && at[n.index()] == 0.0 {
            heap.push(Partial { bound: tail[n.index()], delay: 0.0, done: false, cells: Vec::new(), nets: vec![n] });
        }
    }
    while let Some(p) = heap.pop() {
        if p.done {
            out.push(TimingPath { cells: p.cells, nets: p.nets, delay: p.delay });
            if out.len() == k {
                break;
            }
            continue;
        }
        let net = *p.nets.last().expect("non-empty route");
        if !p.cells.is_empty() && is_capture(g, net) {
            heap.push(Partial {
                bound: p.delay,
                delay: p.delay,
                done: true,
                cells: p.cells.clone(),
                nets: p.nets.clone(),
            });
        }
        for r in g.readers(net) {
            let cell = g.cell(r.cell);
            if cell.is_sequential() {
                continue;
            }
            for (oi, o) in cell.outputs.iter().enumerate() {
                let Some(d) = recs[r.cell.index()].arc(r.pin, oi) else {
                    continue;
                };
                let rest = tail[o.net.index()];
                if !rest.is_finite() {
                    continue;
                }
                let mut cells = p.cells.clone();
                cells.push(r.cell);
                let mut nets = p.nets.clone();
                nets.push(o.net);
                heap.push(Partial { bound: p.delay + d + rest, delay: p.delay + d, done: false, cells, nets });
            }
        }
    }
    out
}
