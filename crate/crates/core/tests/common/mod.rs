// SPDX-License-Identifier: Apache-2.0

//! Test-side oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap, HashSet};

use orthrus_core::interloop::MiningBounds;
use orthrus_core::netlist::cell::pin_class;
use orthrus_core::netlist::{CellId, CellLibrary, NetGraph, NetGraphBuilder, NetId, NetKind, DFF};
use rand::seq::SliceRandom;
use rand::Rng;

pub const COMB_TYPES: &[(&str, &[&str])] = &[
    ("AND2x2", &["A", "B"]),
    ("XOR2x2", &["A", "B"]),
    ("INVx1", &["A"]),
    ("MAJx1", &["A", "B", "C"]),
    ("OR2x2", &["A", "B"]),
    ("AO21x1", &["A1", "A2", "B"]),
    ("NAND2x1", &["A", "B"]),
];

fn pins_of(t: &str) -> &'static [&'static str] {
    COMB_TYPES.iter().find(|(n, _)| *n == t).map(|(_, p)| *p).expect("known type")
}

/// Random netlist: `n_cells` cells, each reading nets created before it,
/// mostly from a short window so that depth grows. Registers appear with
/// probability `p_reg`.
pub fn random_dag(rng: &mut impl Rng, n_cells: usize, p_reg: f64) -> NetGraph {
    let mut b = NetGraphBuilder::new();
    let n_in = rng.random_range(2..=4);
    let mut nets: Vec<NetId> = (0..n_in).map(|i| b.add_net(format!("in{i}"), NetKind::Input)).collect();
    let pick = |rng: &mut dyn rand::RngCore, nets: &[NetId]| -> NetId {
        let lo = if rng.random_bool(0.8) { nets.len().saturating_sub(5) } else { 0 };
        nets[rng.random_range(lo..nets.len())]
    };
    for c in 0..n_cells {
        let y = b.add_net(format!("n{c}"), NetKind::Internal);
        if rng.random_bool(p_reg) {
            let d = pick(rng, &nets);
            b.add_cell(format!("r{c}"), DFF, &[("D", d), ("Q", y)]).unwrap();
        } else {
            let (t, pins) = COMB_TYPES[rng.random_range(0..COMB_TYPES.len())];
            let mut conn: Vec<(&str, NetId)> = pins.iter().map(|&p| (p, pick(rng, &nets))).collect();
            conn.push(("Y", y));
            b.add_cell(format!("u{c}"), t, &conn).unwrap();
        }
        nets.push(y);
    }
    for &n in &nets[n_in..] {
        if rng.random_bool(0.15) {
            b.set_kind(n, NetKind::Output);
        }
    }
    b.build().unwrap()
}

/// Default library with every delay replaced by a random multiple of 1/256
/// so that path sums are exact in floating point.
pub fn dyadic_library(rng: &mut impl Rng) -> CellLibrary {
    let mut lib = CellLibrary::default();
    for rec in lib.cells.values_mut() {
        rec.delay = rng.random_range(1..64) as f64 / 256.0;
    }
    lib
}

fn launches(g: &NetGraph, n: NetId) -> bool {
    g.net(n).kind == NetKind::Input || g.driver_cell(n).is_some_and(|c| g.cell(c).is_sequential())
}

fn captures(g: &NetGraph, n: NetId) -> bool {
    let r = g.readers(n);
    g.net(n).kind == NetKind::Output || r.is_empty() || r.iter().any(|p| g.cell(p.cell).is_sequential())
}

/// Worst launch-to-capture path delay through each combinational instance,
/// by walking every path.
pub fn enumerate_through(g: &NetGraph, lib: &CellLibrary) -> Vec<Option<f64>> {
    fn walk(g: &NetGraph, lib: &CellLibrary, n: NetId, d: f64, path: &mut Vec<CellId>, best: &mut [Option<f64>]) {
        if captures(g, n) {
            for c in path.iter() {
                let b = &mut best[c.index()];
                *b = Some(b.map_or(d, |v: f64| v.max(d)));
            }
        }
        for r in g.readers(n) {
            let cell = g.cell(r.cell);
            if cell.is_sequential() {
                continue;
            }
            let rec = lib.get(&cell.cell_type).unwrap();
            let ii = cell.inputs.iter().position(|p| p.net == n).unwrap();
            for (oi, o) in cell.outputs.iter().enumerate() {
                if let Some(arc) = rec.arc(ii, oi) {
                    path.push(r.cell);
                    walk(g, lib, o.net, d + arc, path, best);
                    path.pop();
                }
            }
        }
    }
    let mut best = vec![None; g.cell_count()];
    for n in g.net_ids() {
        if launches(g, n) {
            walk(g, lib, n, 0.0, &mut Vec::new(), &mut best);
        }
    }
    best
}

fn nets_of(g: &NetGraph, c: CellId) -> Vec<NetId> {
    let cell = g.cell(c);
    cell.inputs.iter().chain(&cell.outputs).map(|p| p.net).collect()
}

/// Longest chain of member cells linked through member-driven nets.
pub fn chain_depth(g: &NetGraph, cells: &[CellId]) -> usize {
    fn up(g: &NetGraph, c: CellId, member: &HashSet<CellId>, memo: &mut HashMap<CellId, usize>) -> usize {
        if let Some(&d) = memo.get(&c) {
            return d;
        }
        let d = 1 + g
            .cell(c)
            .inputs
            .iter()
            .filter_map(|p| g.driver_cell(p.net).filter(|d| member.contains(d)))
            .map(|d| up(g, d, member, memo))
            .max()
            .unwrap_or(0);
        memo.insert(c, d);
        d
    }
    let member: HashSet<CellId> = cells.iter().copied().collect();
    let mut memo = HashMap::new();
    cells.iter().map(|&c| up(g, c, &member, &mut memo)).max().unwrap_or(0)
}

/// Cells at most `levels` combinational levels upstream of `c`, `c`
/// included.
fn upstream(g: &NetGraph, c: CellId, levels: usize) -> BTreeSet<CellId> {
    let mut out = BTreeSet::from([c]);
    let mut layer = vec![c];
    for _ in 1..levels {
        let mut next = Vec::new();
        for x in layer {
            for p in &g.cell(x).inputs {
                if let Some(d) = g.driver_cell(p.net).filter(|d| !g.cell(*d).is_sequential()) {
                    if out.insert(d) {
                        next.push(d);
                    }
                }
            }
        }
        layer = next;
    }
    out
}

fn shares_net(g: &NetGraph, cells: &[CellId]) -> bool {
    let mut reached = vec![false; cells.len()];
    reached[0] = true;
    let mut stack = vec![0];
    while let Some(i) = stack.pop() {
        let ni = nets_of(g, cells[i]);
        for j in 0..cells.len() {
            if !reached[j] && nets_of(g, cells[j]).iter().any(|n| ni.contains(n)) {
                reached[j] = true;
                stack.push(j);
            }
        }
    }
    reached.into_iter().all(|r| r)
}

/// Whether `cells` is a subcircuit within `bounds`.
pub fn is_subcircuit(g: &NetGraph, cells: &[CellId], bounds: MiningBounds) -> bool {
    let member: HashSet<CellId> = cells.iter().copied().collect();
    let mut ins = BTreeSet::new();
    let mut outs = BTreeSet::new();
    for &c in cells {
        let cell = g.cell(c);
        for p in &cell.inputs {
            if !g.driver_cell(p.net).is_some_and(|d| member.contains(&d)) {
                ins.insert(p.net);
            }
        }
        for p in &cell.outputs {
            let r = g.readers(p.net);
            if g.net(p.net).kind == NetKind::Output || r.is_empty() || r.iter().any(|x| !member.contains(&x.cell)) {
                outs.insert(p.net);
            }
        }
    }
    ins.len() <= bounds.i_max
        && (1..=bounds.o_max).contains(&outs.len())
        && chain_depth(g, cells) <= bounds.d_max
        && shares_net(g, cells)
}

/// Every subcircuit within `bounds`, by exhaustive subset search.
///
/// Each member of a subcircuit feeds, through members, a cell that drives
/// one of its outputs, and that chain is at most `d_max` cells long. So a
/// subcircuit with output drivers `s1` and `s2` lies inside the union of
/// their `d_max`-level fan-in cones, and every subset of that union that
/// holds both drivers is tested.
pub fn brute_subcircuits(g: &NetGraph, bounds: MiningBounds) -> BTreeSet<Vec<CellId>> {
    assert!(bounds.o_max <= 2, "oracle handles at most two outputs");
    let comb: Vec<CellId> = g.cell_ids().filter(|&c| !g.cell(c).is_sequential()).collect();
    let cones: HashMap<CellId, BTreeSet<CellId>> = comb.iter().map(|&c| (c, upstream(g, c, bounds.d_max))).collect();
    let mut found = BTreeSet::new();
    for (i, &s1) in comb.iter().enumerate() {
        let firsts = if bounds.o_max == 2 { &comb[i..] } else { &comb[i..=i] };
        for &s2 in firsts {
            let region: BTreeSet<CellId> = cones[&s1].union(&cones[&s2]).copied().collect();
            let free: Vec<CellId> = region.iter().copied().filter(|&c| c != s1 && c != s2).collect();
            assert!(free.len() <= 24, "fan-in region of {} cells is too large to enumerate", free.len());
            for mask in 0u32..(1 << free.len()) {
                let mut set = vec![s1];
                if s2 != s1 {
                    set.push(s2);
                }
                set.extend(free.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1).map(|(_, &c)| c));
                set.sort_unstable();
                if is_subcircuit(g, &set, bounds) {
                    found.insert(set);
                }
            }
        }
    }
    found
}

/// Small netlist fragment: net `i < n_in` is a primary input and net
/// `n_in + k` is driven by cell `k`.
#[derive(Debug, Clone)]
pub struct FragSpec {
    pub n_in: usize,
    pub cells: Vec<(&'static str, Vec<usize>)>,
    pub out_flag: Vec<bool>,
}

const FRAG_TYPES: &[&str] = &["AND2x2", "XOR2x2", "INVx1", "AO21x1", "MAJx1"];

impl FragSpec {
    pub fn random(rng: &mut impl Rng) -> Self {
        let n_in = rng.random_range(2..=3);
        let n = rng.random_range(2..=5);
        let mut cells = Vec::new();
        for k in 0..n {
            let t = FRAG_TYPES[rng.random_range(0..FRAG_TYPES.len())];
            let ins = pins_of(t).iter().map(|_| rng.random_range(0..n_in + k)).collect();
            cells.push((t, ins));
        }
        let out_flag = (0..n).map(|_| rng.random_bool(0.2)).collect();
        Self { n_in, cells, out_flag }
    }

    /// One local edit: retype a cell, rewire a pin or toggle an output.
    pub fn mutate(&self, rng: &mut impl Rng) -> Self {
        let mut s = self.clone();
        let k = rng.random_range(0..s.cells.len());
        match rng.random_range(0..3) {
            0 => {
                let arity = s.cells[k].1.len();
                let same: Vec<&str> = FRAG_TYPES.iter().copied().filter(|t| pins_of(t).len() == arity).collect();
                s.cells[k].0 = same[rng.random_range(0..same.len())];
            }
            1 => {
                let p = rng.random_range(0..s.cells[k].1.len());
                s.cells[k].1[p] = rng.random_range(0..s.n_in + k);
            }
            _ => s.out_flag[k] = !s.out_flag[k],
        }
        s
    }

    /// Builds the fragment. With `shuffle`, net and cell order are permuted
    /// and same-class pins are swapped, which preserves isomorphism.
    pub fn build(&self, shuffle: Option<&mut dyn rand::RngCore>) -> NetGraph {
        let total = self.n_in + self.cells.len();
        let mut net_perm: Vec<usize> = (0..total).collect();
        let mut cell_perm: Vec<usize> = (0..self.cells.len()).collect();
        let mut cells = self.cells.clone();
        if let Some(rng) = shuffle {
            net_perm.shuffle(rng);
            cell_perm.shuffle(rng);
            for (t, ins) in cells.iter_mut() {
                let pins = pins_of(t);
                for _ in 0..4 {
                    let (i, j) = (rng.random_range(0..ins.len()), rng.random_range(0..ins.len()));
                    if pin_class(t, pins[i]) == pin_class(t, pins[j]) {
                        ins.swap(i, j);
                    }
                }
            }
        }
        let read: HashSet<usize> = self.cells.iter().flat_map(|(_, ins)| ins.iter().copied()).collect();
        let kind = |n: usize| {
            if n < self.n_in {
                NetKind::Input
            } else if self.out_flag[n - self.n_in] || !read.contains(&n) {
                NetKind::Output
            } else {
                NetKind::Internal
            }
        };
        let mut b = NetGraphBuilder::new();
        let mut ids = vec![NetId(0); total];
        let mut slots: Vec<usize> = (0..total).collect();
        slots.sort_by_key(|&n| net_perm[n]);
        for n in slots {
            ids[n] = b.add_net(format!("x{}", net_perm[n]), kind(n));
        }
        for &k in &cell_perm {
            let (t, ins) = &cells[k];
            let mut conn: Vec<(&str, NetId)> = pins_of(t).iter().zip(ins).map(|(&p, &n)| (p, ids[n])).collect();
            conn.push(("Y", ids[self.n_in + k]));
            b.add_cell(format!("c{k}"), *t, &conn).unwrap();
        }
        b.build().unwrap()
    }
}

type PinLabel = (u8, u8);

fn labelled_pins(g: &NetGraph, c: CellId) -> Vec<(PinLabel, NetId)> {
    let cell = g.cell(c);
    let mut v: Vec<(PinLabel, NetId)> =
        cell.inputs.iter().map(|p| ((0, pin_class(&cell.cell_type, &p.name)), p.net)).collect();
    v.extend(cell.outputs.iter().map(|p| ((1, pin_class(&cell.cell_type, &p.name)), p.net)));
    v
}

/// Backtracking search for cell and net bijections that keep cell types,
/// net kinds and pin labels.
pub fn isomorphic(a: &NetGraph, b: &NetGraph) -> bool {
    if a.cell_count() != b.cell_count() || a.net_count() != b.net_count() {
        return false;
    }
    let kinds = |g: &NetGraph| {
        let mut v: Vec<String> = g.nets().iter().map(|n| format!("{:?}", n.kind)).collect();
        v.sort();
        v
    };
    let ctypes = |g: &NetGraph| {
        let mut v: Vec<String> = g.cells().iter().map(|c| c.cell_type.clone()).collect();
        v.sort();
        v
    };
    if kinds(a) != kinds(b) || ctypes(a) != ctypes(b) {
        return false;
    }
    let mut s = Iso {
        a,
        b,
        cell_used: vec![false; b.cell_count()],
        net_map: vec![None; a.net_count()],
        net_used: vec![false; b.net_count()],
    };
    s.cells(0)
}

struct Iso<'g> {
    a: &'g NetGraph,
    b: &'g NetGraph,
    cell_used: Vec<bool>,
    net_map: Vec<Option<NetId>>,
    net_used: Vec<bool>,
}

impl Iso<'_> {
    fn cells(&mut self, i: usize) -> bool {
        if i == self.a.cell_count() {
            return true;
        }
        let ca = CellId(i as u32);
        let pa = labelled_pins(self.a, ca);
        for j in 0..self.b.cell_count() {
            let cb = CellId(j as u32);
            if self.cell_used[j] || self.b.cell(cb).cell_type != self.a.cell(ca).cell_type {
                continue;
            }
            let pb = labelled_pins(self.b, cb);
            self.cell_used[j] = true;
            let mut taken = vec![false; pb.len()];
            if self.pins(i, &pa, &pb, 0, &mut taken) {
                return true;
            }
            self.cell_used[j] = false;
        }
        false
    }

    fn pins(
        &mut self,
        i: usize,
        pa: &[(PinLabel, NetId)],
        pb: &[(PinLabel, NetId)],
        k: usize,
        taken: &mut [bool],
    ) -> bool {
        if k == pa.len() {
            return self.cells(i + 1);
        }
        let (label, x) = pa[k];
        for m in 0..pb.len() {
            let (lb, y) = pb[m];
            if taken[m] || lb != label {
                continue;
            }
            let fresh = match self.net_map[x.index()] {
                Some(z) if z == y => false,
                Some(_) => continue,
                None => {
                    if self.net_used[y.index()] || self.a.net(x).kind != self.b.net(y).kind {
                        continue;
                    }
                    true
                }
            };
            if fresh {
                self.net_map[x.index()] = Some(y);
                self.net_used[y.index()] = true;
            }
            taken[m] = true;
            if self.pins(i, pa, pb, k + 1, taken) {
                return true;
            }
            taken[m] = false;
            if fresh {
                self.net_map[x.index()] = None;
                self.net_used[y.index()] = false;
            }
        }
        false
    }
}

/// Drives two cycles per lane and counts lanes where the accumulator
/// differs from `a1*b1` after one cycle or `a1*b1 + a2*b2` after two.
pub fn mac_mismatches(g: &NetGraph, width: usize, vectors: &[(u64, u64, u64, u64)]) -> usize {
    let a = g.bus("a_0_");
    let b = g.bus("b_0_");
    let acc = g.bus("acc_0_0_");
    assert_eq!(a.len(), width);
    let aw = orthrus_core::netlist::acc_width(width);
    assert_eq!(acc.len(), aw);
    let mask = (1u64 << aw) - 1;
    let mut sim = orthrus_core::netlist::Simulator::new(g).unwrap();
    let mut bad = 0;
    for chunk in vectors.chunks(64) {
        sim.reset();
        let col = |f: fn(&(u64, u64, u64, u64)) -> u64| chunk.iter().map(f).collect::<Vec<_>>();
        sim.set_bus(&a, &col(|v| v.0));
        sim.set_bus(&b, &col(|v| v.1));
        sim.step();
        let first = sim.bus(&acc, chunk.len());
        sim.set_bus(&a, &col(|v| v.2));
        sim.set_bus(&b, &col(|v| v.3));
        sim.step();
        let second = sim.bus(&acc, chunk.len());
        for (lane, v) in chunk.iter().enumerate() {
            if first[lane] != v.0 * v.1 || second[lane] != (v.0 * v.1 + v.2 * v.3) & mask {
                bad += 1;
            }
        }
    }
    bad
}

/// Every operand quadruple for `width`-bit operands.
pub fn all_vectors(width: usize) -> Vec<(u64, u64, u64, u64)> {
    let n = 1u64 << width;
    let mut v = Vec::new();
    for a1 in 0..n {
        for b1 in 0..n {
            for a2 in 0..n {
                for b2 in 0..n {
                    v.push((a1, b1, a2, b2));
                }
            }
        }
    }
    v
}

/// A netlist with its expected per-type delay and power shares at the
/// default library and the given lambda.
pub struct ContributionCase {
    pub name: &'static str,
    pub netlist: NetGraph,
    pub delay: Vec<(&'static str, f64)>,
    pub power: Vec<(&'static str, f64)>,
}

pub fn contribution_cases(lambda: f64) -> Vec<ContributionCase> {
    let lib = CellLibrary::default();
    let d = |t: &str| lib.cells[t].delay;
    let p = |t: &str| lib.cells[t].power;
    let e = |x: f64| (lambda * x).exp();
    let mut out = Vec::new();

    // in0 -> INV -> AND2(., in1) -> out: both cells sit on the one path.
    let mut b = NetGraphBuilder::new();
    let i0 = b.add_net("i0", NetKind::Input);
    let i1 = b.add_net("i1", NetKind::Input);
    let m = b.add_net("m", NetKind::Internal);
    let o = b.add_net("o", NetKind::Output);
    b.add_cell("u0", "INVx1", &[("A", i0), ("Y", m)]).unwrap();
    b.add_cell("u1", "AND2x2", &[("A", m), ("B", i1), ("Y", o)]).unwrap();
    let (pi, pa) = (p("INVx1"), p("AND2x2"));
    out.push(ContributionCase {
        name: "chain",
        netlist: b.build().unwrap(),
        delay: vec![("AND2x2", 0.5), ("INVx1", 0.5)],
        power: vec![("AND2x2", pa / (pi + pa)), ("INVx1", pi / (pi + pa))],
    });

    // One XOR beside a chain of two inverters.
    let mut b = NetGraphBuilder::new();
    let i0 = b.add_net("i0", NetKind::Input);
    let i1 = b.add_net("i1", NetKind::Input);
    let o1 = b.add_net("o1", NetKind::Output);
    let m = b.add_net("m", NetKind::Internal);
    let o2 = b.add_net("o2", NetKind::Output);
    b.add_cell("x", "XOR2x2", &[("A", i0), ("B", i1), ("Y", o1)]).unwrap();
    b.add_cell("v0", "INVx1", &[("A", i0), ("Y", m)]).unwrap();
    b.add_cell("v1", "INVx1", &[("A", m), ("Y", o2)]).unwrap();
    let wx = e(d("XOR2x2"));
    let wv = 2.0 * e(2.0 * d("INVx1"));
    let (px, pv) = (p("XOR2x2"), 2.0 * p("INVx1"));
    out.push(ContributionCase {
        name: "parallel",
        netlist: b.build().unwrap(),
        delay: vec![("INVx1", wv / (wx + wv)), ("XOR2x2", wx / (wx + wv))],
        power: vec![("INVx1", pv / (px + pv)), ("XOR2x2", px / (px + pv))],
    });

    // A register splits NAND -> DFF -> INV into two paths; it draws power
    // but carries no timing weight.
    let mut b = NetGraphBuilder::new();
    let i0 = b.add_net("i0", NetKind::Input);
    let i1 = b.add_net("i1", NetKind::Input);
    let dn = b.add_net("d", NetKind::Internal);
    let q = b.add_net("q", NetKind::Internal);
    let o = b.add_net("o", NetKind::Output);
    b.add_cell("n", "NAND2x1", &[("A", i0), ("B", i1), ("Y", dn)]).unwrap();
    b.add_cell("r", DFF, &[("D", dn), ("Q", q)]).unwrap();
    b.add_cell("v", "INVx1", &[("A", q), ("Y", o)]).unwrap();
    let (wn, wv) = (e(d("NAND2x1")), e(d("INVx1")));
    let (pn, pr, pv) = (p("NAND2x1"), p(DFF), p("INVx1"));
    let pt = pn + pr + pv;
    out.push(ContributionCase {
        name: "registered",
        netlist: b.build().unwrap(),
        delay: vec![("INVx1", wv / (wn + wv)), ("NAND2x1", wn / (wn + wv))],
        power: vec![(DFF, pr / pt), ("INVx1", pv / pt), ("NAND2x1", pn / pt)],
    });
    out
}

/// Random non-dominated two-metric front sorted by the first metric.
pub fn random_front(rng: &mut impl Rng) -> Vec<(f64, f64)> {
    let n = rng.random_range(3..12);
    let mut xs: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut ys: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(|a, b| b.total_cmp(a));
    xs.into_iter().zip(ys).collect()
}

pub fn full_adder() -> NetGraph {
    FragSpec {
        n_in: 3,
        cells: vec![("XOR2x2", vec![0, 1]), ("XOR2x2", vec![3, 2]), ("MAJx1", vec![0, 1, 2])],
        out_flag: vec![false; 3],
    }
    .build(None)
}

pub fn half_adder() -> NetGraph {
    FragSpec { n_in: 2, cells: vec![("XOR2x2", vec![0, 1]), ("AND2x2", vec![0, 1])], out_flag: vec![false; 2] }
        .build(None)
}
