// SPDX-License-Identifier: Apache-2.0

//! Canonical labelling of small netlist fragments.
//!
//! Nets and cells form a bipartite graph whose edges carry the pin
//! direction and symmetry class. Colour refinement splits vertices by
//! their neighbourhoods; ties are broken by individualizing each member of
//! the first non-singleton class in turn and keeping the smallest
//! resulting encoding. Two fragments get equal keys exactly when a
//! relabelling of nets and cells maps one onto the other while preserving
//! net kinds, cell types and pin classes.

use std::collections::BTreeMap;

use crate::netlist::cell::pin_class;
use crate::netlist::{NetGraph, NetId, NetKind};

/// Canonical key plus the net order that produced it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Canonical {
    pub key: String,
    /// Nets of the fragment in canonical order.
    pub net_order: Vec<NetId>,
}

pub fn canonical_repr(g: &NetGraph) -> String {
    canonical_form(g).key
}

/// Edge label: direction (0 in, 1 out) and pin class.
type Label = (u8, u8);

struct Bip {
    n_nets: usize,
    adj: Vec<Vec<(usize, Label)>>,
    init: Vec<String>,
}

fn build(g: &NetGraph) -> Bip {
    let n_nets = g.net_count();
    let total = n_nets + g.cell_count();
    let mut adj: Vec<Vec<(usize, Label)>> = vec![Vec::new(); total];
    let mut init = Vec::with_capacity(total);
    for n in g.nets() {
        let k = match n.kind {
            NetKind::Input => "i",
            NetKind::Output => "o",
            NetKind::Internal => "n",
        };
        init.push(format!("0{k}"));
    }
    for (ci, c) in g.cells().iter().enumerate() {
        let v = n_nets + ci;
        init.push(format!("1{}", c.cell_type));
        for (dir, pins) in [(0u8, &c.inputs), (1u8, &c.outputs)] {
            for p in pins.iter() {
                let l = (dir, pin_class(&c.cell_type, &p.name));
                adj[v].push((p.net.index(), l));
                adj[p.net.index()].push((v, l));
            }
        }
    }
    Bip { n_nets, adj, init }
}

/// Colours are dense ranks; equal rank means same class.
fn rank_by<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter().map(|k| sorted.binary_search(k).expect("present")).collect()
}

fn refine(b: &Bip, mut color: Vec<usize>) -> Vec<usize> {
    let mut classes = count_classes(&color);
    loop {
        let sigs: Vec<(usize, Vec<(Label, usize)>)> = (0..color.len())
            .map(|v| {
                let mut s: Vec<(Label, usize)> = b.adj[v].iter().map(|&(u, l)| (l, color[u])).collect();
                s.sort_unstable();
                (color[v], s)
            })
            .collect();
        let next = rank_by(&sigs);
        let n = count_classes(&next);
        color = next;
        if n == classes {
            return color;
        }
        classes = n;
    }
}

fn count_classes(color: &[usize]) -> usize {
    color.iter().copied().max().map_or(0, |m| m + 1)
}

/// Splits `v` off as a class of its own placed just before its old class.
fn individualize(color: &[usize], v: usize) -> Vec<usize> {
    let keys: Vec<usize> = color.iter().enumerate().map(|(u, &c)| if u == v { 2 * c } else { 2 * c + 1 }).collect();
    rank_by(&keys)
}

fn encode(g: &NetGraph, b: &Bip, color: &[usize]) -> String {
    let mut net_rank = vec![0usize; b.n_nets];
    let mut order: Vec<usize> = (0..b.n_nets).collect();
    order.sort_by_key(|&v| color[v]);
    for (r, &v) in order.iter().enumerate() {
        net_rank[v] = r;
    }
    let mut out = String::new();
    for &v in &order {
        out.push_str(&b.init[v][1..]);
    }
    let mut cells: Vec<String> = Vec::with_capacity(g.cell_count());
    for c in g.cells() {
        let mut s = format!("|{}", c.cell_type);
        for (tag, pins) in [('<', &c.inputs), ('>', &c.outputs)] {
            let mut by_class: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
            for p in pins.iter() {
                by_class.entry(pin_class(&c.cell_type, &p.name)).or_default().push(net_rank[p.net.index()]);
            }
            s.push(tag);
            for (k, mut nets) in by_class {
                nets.sort_unstable();
                s.push_str(&format!("{k}:"));
                for n in nets {
                    s.push_str(&format!("{n},"));
                }
                s.push(';');
            }
        }
        cells.push(s);
    }
    cells.sort();
    out.extend(cells);
    out
}

fn search(g: &NetGraph, b: &Bip, color: Vec<usize>, best: &mut Option<(String, Vec<usize>)>) {
    let color = refine(b, color);
    let n = color.len();
    let mut size = vec![0usize; n];
    for &c in &color {
        size[c] += 1;
    }
    let target = (0..n).find(|&c| size[c] > 1);
    match target {
        None => {
            let code = encode(g, b, &color);
            if best.as_ref().is_none_or(|(k, _)| code < *k) {
                *best = Some((code, color));
            }
        }
        Some(t) => {
            for v in (0..n).filter(|&v| color[v] == t) {
                search(g, b, individualize(&color, v), best);
            }
        }
    }
}

pub fn canonical_form(g: &NetGraph) -> Canonical {
    let b = build(g);
    let init = rank_by(&b.init);
    let mut best = None;
    search(g, &b, init, &mut best);
    let (key, color) = best.expect("search reaches a discrete colouring");
    let mut net_order: Vec<NetId> = (0..b.n_nets as u32).map(NetId).collect();
    net_order.sort_by_key(|n| color[n.index()]);
    Canonical { key, net_order }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::NetGraphBuilder;

    fn gate(t: &str, swap: bool) -> NetGraph {
        let mut b = NetGraphBuilder::new();
        let (x, y) = if swap {
            let y = b.add_net("y", NetKind::Input);
            (b.add_net("x", NetKind::Input), y)
        } else {
            let x = b.add_net("x", NetKind::Input);
            (x, b.add_net("y", NetKind::Input))
        };
        let z = b.add_net("z", NetKind::Output);
        b.add_cell("u", t, &[("A", x), ("B", y), ("Y", z)]).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn relabelling_keeps_key() {
        assert_eq!(canonical_repr(&gate("AND2x2", false)), canonical_repr(&gate("AND2x2", true)));
    }

    #[test]
    fn types_distinguish() {
        assert_ne!(canonical_repr(&gate("AND2x2", false)), canonical_repr(&gate("OR2x2", false)));
    }
}
