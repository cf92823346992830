// SPDX-License-Identifier: Apache-2.0

//! Splitting a sequential netlist into combinational islands.

use super::graph::{Cell, CellId, NetGraph, NetGraphBuilder, NetKind, Pin};

struct Dsu(Vec<usize>);

impl Dsu {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.0[r] != r {
            r = self.0[r];
        }
        let mut c = x;
        while self.0[c] != r {
            let next = self.0[c];
            self.0[c] = r;
            c = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Groups combinational cells into islands bounded by registers.
///
/// An island is a maximal set of combinational cells connected through
/// shared nets. Nets fed by a register or a primary input become island
/// inputs; nets captured by a register, read outside the island or marked
/// as outputs become island outputs. A netlist without registers is
/// returned unchanged as a single island. Islands are ordered by their
/// first cell.
pub fn partition_combinational(g: &NetGraph) -> Vec<NetGraph> {
    if !g.has_registers() {
        return vec![g.clone()];
    }
    let n = g.cell_count();
    let mut dsu = Dsu((0..n).collect());
    for net in g.net_ids() {
        let mut first: Option<usize> = None;
        let touching = g.driver_cell(net).into_iter().chain(g.readers(net).iter().map(|r| r.cell));
        for c in touching {
            if g.cell(c).is_sequential() {
                continue;
            }
            match first {
                None => first = Some(c.index()),
                Some(f) => dsu.union(f, c.index()),
            }
        }
    }
    let mut groups: Vec<(usize, Vec<CellId>)> = Vec::new();
    let mut slot_of_root = vec![usize::MAX; n];
    for c in g.cell_ids() {
        if g.cell(c).is_sequential() {
            continue;
        }
        let root = dsu.find(c.index());
        if slot_of_root[root] == usize::MAX {
            slot_of_root[root] = groups.len();
            groups.push((root, Vec::new()));
        }
        groups[slot_of_root[root]].1.push(c);
    }
    groups.into_iter().map(|(_, cells)| island(g, &cells)).collect()
}

fn island(g: &NetGraph, cells: &[CellId]) -> NetGraph {
    let mut member = vec![false; g.cell_count()];
    for &c in cells {
        member[c.index()] = true;
    }
    let mut remap = vec![u32::MAX; g.net_count()];
    let mut b = NetGraphBuilder::new();
    let mut touch = |net: super::graph::NetId, b: &mut NetGraphBuilder| -> super::graph::NetId {
        if remap[net.index()] == u32::MAX {
            let src = g.net(net);
            let driven_inside = g.driver_cell(net).is_some_and(|d| member[d.index()]);
            let kind = if !driven_inside {
                NetKind::Input
            } else {
                let escapes = src.kind == NetKind::Output || g.readers(net).iter().any(|r| !member[r.cell.index()]);
                if escapes {
                    NetKind::Output
                } else {
                    NetKind::Internal
                }
            };
            remap[net.index()] = b.add_net(src.name.clone(), kind).0;
        }
        super::graph::NetId(remap[net.index()])
    };
    for &c in cells {
        let cell = g.cell(c);
        let mut map = |pins: &[Pin], b: &mut NetGraphBuilder| -> Vec<Pin> {
            pins.iter().map(|p| Pin { name: p.name.clone(), net: touch(p.net, b) }).collect()
        };
        let inputs = map(&cell.inputs, &mut b);
        let outputs = map(&cell.outputs, &mut b);
        b.push_cell(Cell { name: cell.name.clone(), cell_type: cell.cell_type.clone(), inputs, outputs });
    }
    b.build().expect("island of a valid netlist is valid")
}
