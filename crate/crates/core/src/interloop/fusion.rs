// SPDX-License-Identifier: Apache-2.0

//! Packaging mined patterns as fused cells and substituting them into
//! netlists.

use std::collections::{BTreeSet, HashMap, HashSet};

use super::canonical::canonical_form;
use super::mining::{fragment, SubcircuitPattern};
use crate::error::Result;
use crate::netlist::{Cell, CellId, CellLibrary, FusedCellDef, NetGraph, NetGraphBuilder, NetId, NetKind, Pin};

/// Name given to the `i`-th fused cell type.
pub fn fused_name(i: usize) -> String {
    format!("FUSED{i}")
}

/// Fused-cell definition for `pattern`, ports in canonical net order.
pub fn fused_cell_def(pattern: &SubcircuitPattern, name: &str) -> FusedCellDef {
    let frag = pattern.example.clone();
    let canon = canonical_form(&frag);
    let of_kind = |k: NetKind| canon.net_order.iter().copied().filter(|&n| frag.net(n).kind == k).collect::<Vec<_>>();
    FusedCellDef {
        name: name.to_string(),
        key: pattern.key.clone(),
        inputs: of_kind(NetKind::Input),
        outputs: of_kind(NetKind::Output),
        fragment: frag,
    }
}

/// Copy of `base` extended with one single-row fused cell per pattern.
pub fn fused_library(base: &CellLibrary, patterns: &[SubcircuitPattern]) -> Result<CellLibrary> {
    let mut lib = base.clone();
    for (i, p) in patterns.iter().enumerate() {
        lib.add_fused(fused_cell_def(p, &fused_name(i)))?;
    }
    Ok(lib)
}

/// Cell sets of `g` whose induced fragment is isomorphic to `def`, each
/// with the host net bound to every fragment net of the definition.
pub fn find_matches(g: &NetGraph, def: &FusedCellDef) -> Vec<(Vec<CellId>, Vec<NetId>)> {
    let pat = &def.fragment;
    if pat.cell_count() == 0 {
        return Vec::new();
    }
    let pat_canon = canonical_form(pat);
    // Visit pattern cells so that each one after the first touches an
    // earlier one.
    let mut order = vec![CellId(0)];
    let mut seen = vec![false; pat.cell_count()];
    seen[0] = true;
    let mut i = 0;
    while i < order.len() {
        let c = pat.cell(order[i]);
        for p in c.inputs.iter().chain(&c.outputs) {
            let touching = pat.driver_cell(p.net).into_iter().chain(pat.readers(p.net).iter().map(|r| r.cell));
            for d in touching {
                if !seen[d.index()] {
                    seen[d.index()] = true;
                    order.push(d);
                }
            }
        }
        i += 1;
    }
    let types: Vec<&str> = order.iter().map(|&c| pat.cell(c).cell_type.as_str()).collect();

    let mut found: BTreeSet<Vec<CellId>> = BTreeSet::new();
    let mut stack: Vec<CellId> = Vec::with_capacity(types.len());
    for start in g.cell_ids() {
        if g.cell(start).cell_type == types[0] {
            stack.push(start);
            extend(g, &types, &mut stack, &mut found);
            stack.pop();
        }
    }

    let mut out = Vec::new();
    for cells in found {
        let (frag, host) = fragment(g, &cells);
        let canon = canonical_form(&frag);
        if canon.key != def.key && canon.key != pat_canon.key {
            continue;
        }
        // Equal keys mean position i of both canonical orders correspond.
        let mut bind = vec![NetId(u32::MAX); pat.net_count()];
        for (pn, hn) in pat_canon.net_order.iter().zip(&canon.net_order) {
            bind[pn.index()] = host[hn.index()];
        }
        out.push((cells, bind));
    }
    out
}

fn extend(g: &NetGraph, types: &[&str], stack: &mut Vec<CellId>, found: &mut BTreeSet<Vec<CellId>>) {
    if stack.len() == types.len() {
        let mut set = stack.clone();
        set.sort_unstable();
        found.insert(set);
        return;
    }
    let want = types[stack.len()];
    let mut cands: Vec<CellId> = Vec::new();
    for &c in stack.iter() {
        let cell = g.cell(c);
        for p in cell.inputs.iter().chain(&cell.outputs) {
            cands.extend(g.driver_cell(p.net));
            cands.extend(g.readers(p.net).iter().map(|r| r.cell));
        }
    }
    cands.sort_unstable();
    cands.dedup();
    for c in cands {
        if !stack.contains(&c) && g.cell(c).cell_type == want {
            stack.push(c);
            extend(g, types, stack, found);
            stack.pop();
        }
    }
}

/// Replaces non-overlapping occurrences of every fused cell of `lib` in
/// `g`, larger definitions first.
pub fn apply_fusion(g: &NetGraph, lib: &CellLibrary) -> Result<NetGraph> {
    let mut defs: Vec<&FusedCellDef> = lib.fused.iter().collect();
    defs.sort_by_key(|d| std::cmp::Reverse(d.fragment.cell_count()));
    let mut used: HashSet<CellId> = HashSet::new();
    // First cell of each replaced group -> replacement cell.
    let mut repl: HashMap<CellId, Cell> = HashMap::new();
    for def in defs {
        for (cells, bind) in find_matches(g, def) {
            if cells.iter().any(|c| used.contains(c)) {
                continue;
            }
            used.extend(cells.iter().copied());
            let pins = |nets: &[NetId], prefix: char| {
                nets.iter()
                    .enumerate()
                    .map(|(k, n)| Pin { name: format!("{prefix}{k}"), net: bind[n.index()] })
                    .collect::<Vec<_>>()
            };
            let first = cells[0];
            repl.insert(
                first,
                Cell {
                    name: format!("{}_{}", def.name.to_lowercase(), g.cell(first).name),
                    cell_type: def.name.clone(),
                    inputs: pins(&def.inputs, 'I'),
                    outputs: pins(&def.outputs, 'O'),
                },
            );
        }
    }

    let mut cells_out: Vec<Cell> = Vec::with_capacity(g.cell_count());
    for (cid, cell) in g.cell_ids().zip(g.cells()) {
        if let Some(r) = repl.remove(&cid) {
            cells_out.push(r);
        } else if !used.contains(&cid) {
            cells_out.push(cell.clone());
        }
    }
    let mut referenced = vec![false; g.net_count()];
    for c in &cells_out {
        for p in c.inputs.iter().chain(&c.outputs) {
            referenced[p.net.index()] = true;
        }
    }
    let mut remap = vec![u32::MAX; g.net_count()];
    let mut b = NetGraphBuilder::new();
    for (i, n) in g.nets().iter().enumerate() {
        if n.kind != NetKind::Internal || referenced[i] {
            remap[i] = b.add_net(n.name.clone(), n.kind).0;
        }
    }
    for mut c in cells_out {
        for p in c.inputs.iter_mut().chain(c.outputs.iter_mut()) {
            p.net = NetId(remap[p.net.index()]);
        }
        b.push_cell(c);
    }
    b.build()
}
