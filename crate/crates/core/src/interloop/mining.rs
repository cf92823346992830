// SPDX-License-Identifier: Apache-2.0

//! Frequent subcircuit mining.
//!
//! A subcircuit is a set of combinational cells connected through shared
//! nets. Its inputs are the nets it reads but does not drive; its outputs
//! are the nets it drives that are read elsewhere, marked as outputs, or
//! left unread. For each set of at most `o_max` candidate output nets, a
//! backward search decides, one driver at a time, whether the driver joins
//! the subcircuit. Every subcircuit whose outputs are exactly that set and
//! which meets the input and depth bounds is counted under its canonical
//! key.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::canonical::canonical_form;
use crate::error::Result;
use crate::netlist::{Cell, CellId, NetGraph, NetGraphBuilder, NetId, NetKind, Pin};

/// Size limits of a mined subcircuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MiningBounds {
    pub i_max: usize,
    pub o_max: usize,
    pub d_max: usize,
}

impl Default for MiningBounds {
    fn default() -> Self {
        Self { i_max: 4, o_max: 2, d_max: 3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcircuitPattern {
    pub key: String,
    pub example: NetGraph,
    /// Number of enumerated occurrences, overlapping ones included.
    pub count: usize,
    pub num_inputs: usize,
    pub num_outputs: usize,
    pub depth: usize,
    pub num_cells: usize,
    /// Occurrences that can be replaced simultaneously (greedy packing in
    /// enumeration order).
    pub disjoint: usize,
    /// No larger pattern contains every occurrence of this one.
    pub closed: bool,
    /// Every input reaches every output.
    pub coupled: bool,
    /// Cell sets of the occurrences, in enumeration order.
    #[serde(skip)]
    pub occurrences: Vec<Vec<CellId>>,
}

/// One occurrence: the cells and, for binding, the fragment nets mapped
/// back to the host netlist in canonical order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Occurrence {
    pub key: String,
    pub cells: Vec<CellId>,
    /// Host nets in the canonical net order of the fragment.
    pub nets: Vec<NetId>,
}

struct Host<'a> {
    g: &'a NetGraph,
    topo: Vec<usize>,
    comb: Vec<bool>,
    bounds: MiningBounds,
}

impl<'a> Host<'a> {
    fn new(g: &'a NetGraph, bounds: MiningBounds) -> Result<Self> {
        let order = g.combinational_order()?;
        let mut topo = vec![usize::MAX; g.cell_count()];
        for (i, c) in order.iter().enumerate() {
            topo[c.index()] = i;
        }
        let comb = g.cells().iter().map(|c| !c.is_sequential()).collect();
        Ok(Self { g, topo, comb, bounds })
    }

    fn comb_driver(&self, n: NetId) -> Option<CellId> {
        self.g.driver_cell(n).filter(|c| self.comb[c.index()])
    }

    /// Cells within `d_max` levels upstream of the driver of `n`.
    fn cone(&self, n: NetId) -> Vec<CellId> {
        let mut seen: HashSet<CellId> = HashSet::new();
        let mut layer: Vec<CellId> = self.comb_driver(n).into_iter().collect();
        for _ in 0..self.bounds.d_max {
            let mut next = Vec::new();
            for c in layer {
                if seen.insert(c) {
                    for p in &self.g.cell(c).inputs {
                        if let Some(d) = self.comb_driver(p.net) {
                            next.push(d);
                        }
                    }
                }
            }
            layer = next;
        }
        let mut v: Vec<CellId> = seen.into_iter().collect();
        v.sort_unstable();
        v
    }

    /// Candidate output sets: every combinationally driven net alone, and
    /// pairs whose bounded cones share a net (otherwise no connected
    /// subcircuit can own both).
    fn output_sets(&self) -> Vec<Vec<NetId>> {
        let roots: Vec<NetId> = self.g.net_ids().filter(|&n| self.comb_driver(n).is_some()).collect();
        let mut sets: Vec<Vec<NetId>> = roots.iter().map(|&n| vec![n]).collect();
        if self.bounds.o_max < 2 {
            return sets;
        }
        let mut touching: HashMap<NetId, Vec<usize>> = HashMap::new();
        for (ri, &r) in roots.iter().enumerate() {
            let mut nets: Vec<NetId> = Vec::new();
            for c in self.cone(r) {
                let cell = self.g.cell(c);
                nets.extend(cell.inputs.iter().chain(&cell.outputs).map(|p| p.net));
            }
            nets.sort_unstable();
            nets.dedup();
            for n in nets {
                touching.entry(n).or_default().push(ri);
            }
        }
        let mut pairs: HashSet<(usize, usize)> = HashSet::new();
        for list in touching.values() {
            for (i, &x) in list.iter().enumerate() {
                for &y in &list[i + 1..] {
                    pairs.insert((x.min(y), x.max(y)));
                }
            }
        }
        let mut pairs: Vec<(usize, usize)> = pairs.into_iter().collect();
        pairs.sort_unstable();
        sets.extend(pairs.into_iter().map(|(x, y)| vec![roots[x], roots[y]]));
        sets
    }

    fn depth(&self, members: &[CellId]) -> usize {
        let mut ordered = members.to_vec();
        ordered.sort_by_key(|c| self.topo[c.index()]);
        let mut level: HashMap<NetId, usize> = HashMap::new();
        let mut best = 0;
        for c in ordered {
            let cell = self.g.cell(c);
            let d = 1 + cell.inputs.iter().filter_map(|p| level.get(&p.net).copied()).max().unwrap_or(0);
            for o in &cell.outputs {
                level.insert(o.net, d);
            }
            best = best.max(d);
        }
        best
    }
}

const UNDECIDED: u8 = 0;
const IN: u8 = 1;
const OUT: u8 = 2;

struct Search<'h, 'a, F> {
    host: &'h Host<'a>,
    status: HashMap<CellId, u8>,
    members: Vec<CellId>,
    targets: Vec<NetId>,
    emit: F,
}

impl<F: FnMut(&[CellId], &[NetId])> Search<'_, '_, F> {
    fn is_member(&self, c: CellId) -> bool {
        self.status.get(&c) == Some(&IN)
    }

    fn driven_by_members(&self, n: NetId) -> bool {
        self.host.g.driver_cell(n).is_some_and(|d| self.is_member(d))
    }

    /// Input nets that can no longer become internal.
    fn committed_inputs(&self) -> usize {
        let mut nets: Vec<NetId> = Vec::new();
        for &c in &self.members {
            for p in &self.host.g.cell(c).inputs {
                if self.driven_by_members(p.net) {
                    continue;
                }
                let open = self
                    .host
                    .comb_driver(p.net)
                    .is_some_and(|d| self.status.get(&d).copied().unwrap_or(UNDECIDED) == UNDECIDED);
                if !open {
                    nets.push(p.net);
                }
            }
        }
        nets.sort_unstable();
        nets.dedup();
        nets.len()
    }

    /// Whether some non-target net is already certain to be an output.
    fn stray_output(&self) -> bool {
        let g = self.host.g;
        for &c in &self.members {
            for o in &g.cell(c).outputs {
                if self.targets.contains(&o.net) {
                    continue;
                }
                let readers = g.readers(o.net);
                if g.net(o.net).kind == NetKind::Output || readers.is_empty() {
                    return true;
                }
                let fixed_outside =
                    readers.iter().any(|r| !self.host.comb[r.cell.index()] || self.status.get(&r.cell) == Some(&OUT));
                if fixed_outside {
                    return true;
                }
            }
        }
        false
    }

    fn next_frontier(&self) -> Option<CellId> {
        let mut best: Option<CellId> = None;
        for &c in &self.members {
            for p in &self.host.g.cell(c).inputs {
                if let Some(d) = self.host.comb_driver(p.net) {
                    if !self.status.contains_key(&d) {
                        best = Some(best.map_or(d, |b| b.min(d)));
                    }
                }
            }
        }
        best
    }

    fn run(&mut self) {
        if self.committed_inputs() > self.host.bounds.i_max || self.stray_output() {
            return;
        }
        match self.next_frontier() {
            None => self.leaf(),
            Some(c) => {
                self.status.insert(c, IN);
                self.members.push(c);
                if self.host.depth(&self.members) <= self.host.bounds.d_max {
                    self.run();
                }
                self.members.pop();
                self.status.insert(c, OUT);
                self.run();
                self.status.remove(&c);
            }
        }
    }

    fn leaf(&mut self) {
        let outs = outputs_of(self.host.g, &self.members, |c| self.is_member(c));
        if outs.len() != self.targets.len() || !outs.iter().all(|n| self.targets.contains(n)) {
            return;
        }
        let ins = inputs_of(self.host.g, &self.members, |c| self.is_member(c));
        if ins.len() > self.host.bounds.i_max || !connected(self.host.g, &self.members) {
            return;
        }
        let mut cells = self.members.clone();
        cells.sort_unstable();
        (self.emit)(&cells, &outs);
    }
}

fn inputs_of(g: &NetGraph, members: &[CellId], is_member: impl Fn(CellId) -> bool) -> Vec<NetId> {
    let mut v: Vec<NetId> = members
        .iter()
        .flat_map(|&c| g.cell(c).inputs.iter().map(|p| p.net))
        .filter(|&n| !g.driver_cell(n).is_some_and(&is_member))
        .collect();
    v.sort_unstable();
    v.dedup();
    v
}

fn outputs_of(g: &NetGraph, members: &[CellId], is_member: impl Fn(CellId) -> bool) -> Vec<NetId> {
    let mut v: Vec<NetId> = members
        .iter()
        .flat_map(|&c| g.cell(c).outputs.iter().map(|p| p.net))
        .filter(|&n| {
            let readers = g.readers(n);
            g.net(n).kind == NetKind::Output || readers.is_empty() || readers.iter().any(|r| !is_member(r.cell))
        })
        .collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Whether the cells form one component when cells sharing any net are
/// adjacent.
pub fn connected(g: &NetGraph, cells: &[CellId]) -> bool {
    if cells.len() <= 1 {
        return true;
    }
    let nets_of = |c: CellId| -> Vec<NetId> {
        let cell = g.cell(c);
        cell.inputs.iter().chain(&cell.outputs).map(|p| p.net).collect()
    };
    let mut reached = vec![false; cells.len()];
    reached[0] = true;
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        let ni = nets_of(cells[i]);
        for j in 0..cells.len() {
            if !reached[j] && nets_of(cells[j]).iter().any(|n| ni.contains(n)) {
                reached[j] = true;
                stack.push(j);
            }
        }
    }
    reached.into_iter().all(|r| r)
}

/// Builds the fragment induced by `cells`; returns it with the host net of
/// every fragment net.
pub fn fragment(g: &NetGraph, cells: &[CellId]) -> (NetGraph, Vec<NetId>) {
    let member: HashSet<CellId> = cells.iter().copied().collect();
    let is_member = |c: CellId| member.contains(&c);
    let outs: HashSet<NetId> = outputs_of(g, cells, is_member).into_iter().collect();
    let mut b = NetGraphBuilder::new();
    let mut map: HashMap<NetId, NetId> = HashMap::new();
    let mut host: Vec<NetId> = Vec::new();
    let mut local = |n: NetId, b: &mut NetGraphBuilder| -> NetId {
        *map.entry(n).or_insert_with(|| {
            let kind = if !g.driver_cell(n).is_some_and(is_member) {
                NetKind::Input
            } else if outs.contains(&n) {
                NetKind::Output
            } else {
                NetKind::Internal
            };
            host.push(n);
            b.add_net(format!("f{}", host.len() - 1), kind)
        })
    };
    for &c in cells {
        let cell = g.cell(c);
        let inputs: Vec<Pin> =
            cell.inputs.iter().map(|p| Pin { name: p.name.clone(), net: local(p.net, &mut b) }).collect();
        let outputs: Vec<Pin> =
            cell.outputs.iter().map(|p| Pin { name: p.name.clone(), net: local(p.net, &mut b) }).collect();
        b.push_cell(Cell { name: format!("c{}", c.0), cell_type: cell.cell_type.clone(), inputs, outputs });
    }
    (b.build().expect("fragment of a valid netlist is valid"), host)
}

/// Calls `emit(cells, outputs)` once for every subcircuit within `bounds`.
pub fn enumerate_subcircuits(
    g: &NetGraph,
    bounds: MiningBounds,
    mut emit: impl FnMut(&[CellId], &[NetId]),
) -> Result<()> {
    let host = Host::new(g, bounds)?;
    for targets in host.output_sets() {
        let mut members: Vec<CellId> = targets.iter().filter_map(|&n| host.comb_driver(n)).collect();
        members.sort_unstable();
        members.dedup();
        let mut status = HashMap::new();
        for &c in &members {
            status.insert(c, IN);
        }
        if host.depth(&members) > bounds.d_max {
            continue;
        }
        let mut s = Search { host: &host, status, members, targets, emit: &mut emit };
        s.run();
    }
    Ok(())
}

/// Lists every occurrence with its canonical key.
pub fn occurrences(g: &NetGraph, bounds: MiningBounds) -> Result<Vec<Occurrence>> {
    let mut out = Vec::new();
    enumerate_subcircuits(g, bounds, |cells, _| {
        let (frag, host) = fragment(g, cells);
        let canon = canonical_form(&frag);
        let nets = canon.net_order.iter().map(|n| host[n.index()]).collect();
        out.push(Occurrence { key: canon.key, cells: cells.to_vec(), nets });
    })?;
    Ok(out)
}

/// Mines `g` and returns one pattern per canonical key, most frequent
/// first.
pub fn mine_subcircuits(g: &NetGraph, d_max: usize, o_max: usize, i_max: usize) -> Result<Vec<SubcircuitPattern>> {
    let bounds = MiningBounds { i_max, o_max, d_max };
    let occ = occurrences(g, bounds)?;
    Ok(patterns_from(g, &occ))
}

/// Aggregates occurrences into patterns, sorted by descending count, then
/// fewer cells, then key.
pub fn patterns_from(g: &NetGraph, occ: &[Occurrence]) -> Vec<SubcircuitPattern> {
    let mut by_key: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, o) in occ.iter().enumerate() {
        by_key.entry(o.key.as_str()).or_default().push(i);
    }
    let mut by_cell: HashMap<CellId, Vec<usize>> = HashMap::new();
    for (i, o) in occ.iter().enumerate() {
        for &c in &o.cells {
            by_cell.entry(c).or_default().push(i);
        }
    }
    let mut out: Vec<SubcircuitPattern> = by_key
        .into_iter()
        .map(|(key, list)| {
            let (example, _) = fragment(g, &occ[list[0]].cells);
            let mut used: HashSet<CellId> = HashSet::new();
            let mut disjoint = 0;
            for &i in &list {
                if occ[i].cells.iter().all(|c| !used.contains(c)) {
                    used.extend(occ[i].cells.iter().copied());
                    disjoint += 1;
                }
            }
            SubcircuitPattern {
                key: key.to_string(),
                count: list.len(),
                num_inputs: example.inputs().len(),
                num_outputs: example.outputs().len(),
                depth: fragment_depth(&example),
                num_cells: example.cell_count(),
                disjoint,
                closed: !always_embedded(occ, &list, &by_cell),
                coupled: fully_coupled(&example),
                occurrences: list.iter().map(|&i| occ[i].cells.clone()).collect(),
                example,
            }
        })
        .collect();
    out.sort_by(|a, b| b.count.cmp(&a.count).then(a.num_cells.cmp(&b.num_cells)).then_with(|| a.key.cmp(&b.key)));
    out
}

/// Whether some other pattern has an occurrence containing each of the
/// listed occurrences.
fn always_embedded(occ: &[Occurrence], list: &[usize], by_cell: &HashMap<CellId, Vec<usize>>) -> bool {
    let mut common: Option<HashSet<&str>> = None;
    for &i in list {
        let o = &occ[i];
        let hosts: HashSet<&str> = by_cell[&o.cells[0]]
            .iter()
            .map(|&j| &occ[j])
            .filter(|q| q.cells.len() > o.cells.len() && o.cells.iter().all(|c| q.cells.binary_search(c).is_ok()))
            .map(|q| q.key.as_str())
            .collect();
        let next: HashSet<&str> = match common {
            None => hosts,
            Some(prev) => prev.intersection(&hosts).copied().collect(),
        };
        if next.is_empty() {
            return false;
        }
        common = Some(next);
    }
    common.is_some_and(|c| !c.is_empty())
}

/// Whether every input net of the fragment reaches every output net.
pub fn fully_coupled(g: &NetGraph) -> bool {
    let Ok(order) = g.combinational_order() else {
        return false;
    };
    let outputs = g.outputs();
    for src in g.inputs() {
        let mut reach = vec![false; g.net_count()];
        reach[src.index()] = true;
        for &c in &order {
            let cell = g.cell(c);
            if cell.inputs.iter().any(|p| reach[p.net.index()]) {
                for o in &cell.outputs {
                    reach[o.net.index()] = true;
                }
            }
        }
        if outputs.iter().any(|o| !reach[o.index()]) {
            return false;
        }
    }
    true
}

/// Longest cell chain of a fragment.
pub fn fragment_depth(g: &NetGraph) -> usize {
    let Ok(order) = g.combinational_order() else {
        return 0;
    };
    let mut level = vec![0usize; g.net_count()];
    let mut best = 0;
    for c in order {
        let cell = g.cell(c);
        let d = 1 + cell.inputs.iter().map(|p| level[p.net.index()]).max().unwrap_or(0);
        for o in &cell.outputs {
            level[o.net.index()] = d;
        }
        best = best.max(d);
    }
    best
}

/// Greedily packs occurrences that avoid `used` and each other.
fn pack<'p>(occ: &'p [Vec<CellId>], used: &HashSet<CellId>) -> Vec<&'p Vec<CellId>> {
    let mut taken: HashSet<CellId> = HashSet::new();
    let mut out = Vec::new();
    for o in occ {
        if o.iter().all(|c| !used.contains(c) && !taken.contains(c)) {
            taken.extend(o.iter().copied());
            out.push(o);
        }
    }
    out
}

/// Picks up to `n_ext` patterns to turn into fused cells.
///
/// Eligible patterns have at least two cells, are closed and fully
/// coupled. Selection is greedy: each round takes the pattern with the
/// most non-overlapping occurrences on cells not claimed by earlier picks,
/// breaking ties by fewer cells and then by key. Patterns that are not
/// picked are never fused.
pub fn select_fusion_candidates(patterns: &[SubcircuitPattern], n_ext: usize) -> Vec<SubcircuitPattern> {
    let mut pool: Vec<&SubcircuitPattern> =
        patterns.iter().filter(|p| p.num_cells >= 2 && p.closed && p.coupled).collect();
    let mut used: HashSet<CellId> = HashSet::new();
    let mut chosen = Vec::new();
    while chosen.len() < n_ext && !pool.is_empty() {
        // Patterns loaded from disk carry no occurrence lists.
        let scored = pool.iter().enumerate().map(|(i, p)| {
            let s = if p.occurrences.is_empty() { p.disjoint } else { pack(&p.occurrences, &used).len() };
            (i, s)
        });
        let best = scored.max_by(|&(i, a), &(j, b)| {
            a.cmp(&b).then(pool[j].num_cells.cmp(&pool[i].num_cells)).then_with(|| pool[j].key.cmp(&pool[i].key))
        });
        let Some((i, support)) = best else { break };
        if support == 0 {
            break;
        }
        let p = pool.remove(i);
        for o in pack(&p.occurrences, &used) {
            used.extend(o.iter().copied());
        }
        chosen.push(p.clone());
    }
    chosen
}
