// SPDX-License-Identifier: Apache-2.0

//! Structural generator for systolic multiply-accumulate arrays.
//!
//! Each processing element computes `acc += a * b` on unsigned operands: an
//! AND2 partial-product array, a Wallace or Dadda compressor tree that also
//! absorbs the accumulator row, and a parallel-prefix carry-propagate adder.
//! Operands travel right (`a`) and down (`b`) through pipeline registers.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::graph::{NetGraph, NetGraphBuilder, NetId, NetKind};
use super::library::DFF;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CtType {
    /// Wallace tree.
    #[serde(rename = "WT")]
    Wt,
    /// Dadda tree.
    #[serde(rename = "DT")]
    Dt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CpaType {
    /// Sklansky.
    #[serde(rename = "SK")]
    Sk,
    /// Kogge-Stone.
    #[serde(rename = "KS")]
    Ks,
    /// Brent-Kung.
    #[serde(rename = "BK")]
    Bk,
}

impl CtType {
    pub const ALL: [CtType; 2] = [CtType::Wt, CtType::Dt];
}

impl CpaType {
    pub const ALL: [CpaType; 3] = [CpaType::Sk, CpaType::Ks, CpaType::Bk];
}

impl fmt::Display for CtType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CtType::Wt => "WT",
            CtType::Dt => "DT",
        })
    }
}

impl fmt::Display for CpaType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CpaType::Sk => "SK",
            CpaType::Ks => "KS",
            CpaType::Bk => "BK",
        })
    }
}

impl FromStr for CtType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "WT" => Ok(CtType::Wt),
            "DT" => Ok(CtType::Dt),
            _ => Err(invalid(format!("ct_type: unsupported value '{s}' (expected WT or DT)"))),
        }
    }
}

impl FromStr for CpaType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SK" => Ok(CpaType::Sk),
            "KS" => Ok(CpaType::Ks),
            "BK" => Ok(CpaType::Bk),
            _ => Err(invalid(format!("cpa_type: unsupported value '{s}' (expected SK, KS or BK)"))),
        }
    }
}

/// Width of the accumulator register for `width`-bit operands.
pub fn acc_width(width: usize) -> usize {
    2 * width + 4
}

/// Name of bit `k` of the `a` operand entering row `r`.
pub fn a_name(r: usize, k: usize) -> String {
    format!("a_{r}_{k}")
}

/// Name of bit `k` of the `b` operand entering column `c`.
pub fn b_name(c: usize, k: usize) -> String {
    format!("b_{c}_{k}")
}

/// Name of bit `k` of the accumulator of the element at (`r`, `c`).
pub fn acc_name(r: usize, c: usize, k: usize) -> String {
    format!("acc_{r}_{c}_{k}")
}

/// A signal that is either constant zero or a net.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sig {
    Zero,
    Net(NetId),
}

struct Gen {
    b: NetGraphBuilder,
    cells: usize,
}

impl Gen {
    fn wire(&mut self) -> NetId {
        let n = self.b.net_count();
        self.b.add_net(format!("n{n}"), NetKind::Internal)
    }

    fn cell(&mut self, cell_type: &str, ins: &[(&str, NetId)], out_pin: &str) -> NetId {
        let y = self.wire();
        let mut pins = ins.to_vec();
        pins.push((out_pin, y));
        let name = format!("u{}", self.cells);
        self.cells += 1;
        self.b.add_cell(name, cell_type, &pins).expect("generator emits valid pins");
        y
    }

    fn and2(&mut self, a: Sig, b: Sig) -> Sig {
        match (a, b) {
            (Sig::Net(x), Sig::Net(y)) => Sig::Net(self.cell("AND2x2", &[("A", x), ("B", y)], "Y")),
            _ => Sig::Zero,
        }
    }

    fn xor2(&mut self, a: Sig, b: Sig) -> Sig {
        match (a, b) {
            (Sig::Net(x), Sig::Net(y)) => Sig::Net(self.cell("XOR2x2", &[("A", x), ("B", y)], "Y")),
            (Sig::Zero, s) | (s, Sig::Zero) => s,
        }
    }

    fn maj(&mut self, a: Sig, b: Sig, c: Sig) -> Sig {
        match (a, b, c) {
            (Sig::Net(x), Sig::Net(y), Sig::Net(z)) => {
                Sig::Net(self.cell("MAJx1", &[("A", x), ("B", y), ("C", z)], "Y"))
            }
            (Sig::Zero, p, q) | (p, Sig::Zero, q) | (p, q, Sig::Zero) => self.and2(p, q),
        }
    }

    /// `(a & b) | c`
    fn ao21(&mut self, a: Sig, b: Sig, c: Sig) -> Sig {
        match (a, b, c) {
            (Sig::Net(x), Sig::Net(y), Sig::Net(z)) => {
                Sig::Net(self.cell("AO21x1", &[("A1", x), ("A2", y), ("B", z)], "Y"))
            }
            (_, _, Sig::Zero) => self.and2(a, b),
            _ => c,
        }
    }

    fn full_add(&mut self, a: Sig, b: Sig, c: Sig) -> (Sig, Sig) {
        let t = self.xor2(a, b);
        let s = self.xor2(t, c);
        (s, self.maj(a, b, c))
    }

    fn half_add(&mut self, a: Sig, b: Sig) -> (Sig, Sig) {
        (self.xor2(a, b), self.and2(a, b))
    }

    fn dff(&mut self, d: NetId, q_name: String, q_kind: NetKind) -> NetId {
        let q = self.b.add_net(q_name, q_kind);
        let name = format!("r{}", self.cells);
        self.cells += 1;
        self.b.add_cell(name, DFF, &[("D", d), ("Q", q)]).expect("valid register pins");
        q
    }

    /// Multiply-accumulate datapath; returns the next accumulator value.
    fn mac(&mut self, a: &[NetId], b: &[NetId], acc: &[NetId], ct: CtType, cpa: CpaType) -> Vec<Sig> {
        let n = acc.len();
        let mut cols: Vec<Vec<Sig>> = vec![Vec::new(); n];
        for (j, &bj) in b.iter().enumerate() {
            for (i, &ai) in a.iter().enumerate() {
                let pp = self.and2(Sig::Net(ai), Sig::Net(bj));
                cols[i + j].push(pp);
            }
        }
        for (k, &q) in acc.iter().enumerate() {
            cols[k].push(Sig::Net(q));
        }
        let cols = match ct {
            CtType::Wt => self.wallace(cols),
            CtType::Dt => self.dadda(cols),
        };
        let x: Vec<Sig> = cols.iter().map(|c| c.first().copied().unwrap_or(Sig::Zero)).collect();
        let y: Vec<Sig> = cols.iter().map(|c| c.get(1).copied().unwrap_or(Sig::Zero)).collect();
        self.prefix_add(&x, &y, cpa)
    }

    fn wallace(&mut self, mut cols: Vec<Vec<Sig>>) -> Vec<Vec<Sig>> {
        while cols.iter().any(|c| c.len() > 2) {
            let mut next: Vec<Vec<Sig>> = vec![Vec::new(); cols.len()];
            for (i, col) in cols.iter().enumerate() {
                let mut chunks = col.chunks_exact(3);
                for t in chunks.by_ref() {
                    let (s, c) = self.full_add(t[0], t[1], t[2]);
                    next[i].push(s);
                    push_carry(&mut next, i + 1, c);
                }
                match *chunks.remainder() {
                    [p, q] => {
                        let (s, c) = self.half_add(p, q);
                        next[i].push(s);
                        push_carry(&mut next, i + 1, c);
                    }
                    [p] => next[i].push(p),
                    _ => {}
                }
            }
            cols = next;
        }
        cols
    }

    fn dadda(&mut self, mut cols: Vec<Vec<Sig>>) -> Vec<Vec<Sig>> {
        let height = cols.iter().map(Vec::len).max().unwrap_or(0);
        let mut targets = vec![2usize];
        while *targets.last().unwrap() < height {
            let d = *targets.last().unwrap();
            targets.push(d * 3 / 2);
        }
        targets.pop();
        for &d in targets.iter().rev() {
            let mut next: Vec<Vec<Sig>> = vec![Vec::new(); cols.len()];
            for (i, col) in cols.iter().enumerate() {
                let mut pending = col.iter().copied();
                let mut left = col.len();
                let mut total = col.len() + next[i].len();
                while total > d && left >= 2 {
                    if total - d >= 2 && left >= 3 {
                        let t: Vec<Sig> = pending.by_ref().take(3).collect();
                        let (s, c) = self.full_add(t[0], t[1], t[2]);
                        next[i].push(s);
                        push_carry(&mut next, i + 1, c);
                        total -= 2;
                        left -= 3;
                    } else {
                        let t: Vec<Sig> = pending.by_ref().take(2).collect();
                        let (s, c) = self.half_add(t[0], t[1]);
                        next[i].push(s);
                        push_carry(&mut next, i + 1, c);
                        total -= 1;
                        left -= 2;
                    }
                }
                next[i].extend(pending);
            }
            cols = next;
        }
        // No-op unless a column ran short of fresh bits above.
        self.wallace(cols)
    }

    /// `x + y` modulo `2^len` through a parallel-prefix carry network.
    fn prefix_add(&mut self, x: &[Sig], y: &[Sig], cpa: CpaType) -> Vec<Sig> {
        let n = x.len();
        let mut p = Vec::with_capacity(n);
        let mut gp: Vec<(Sig, Sig)> = Vec::with_capacity(n);
        for i in 0..n {
            let (pi, gi) = self.half_add(x[i], y[i]);
            p.push(pi);
            gp.push((gi, pi));
        }
        // The top bit's carry-out is dropped, so the network spans n-1 bits.
        let m = n.saturating_sub(1);
        match cpa {
            CpaType::Sk => {
                let mut span = 1;
                while span < m {
                    for i in 0..m {
                        if i & span != 0 {
                            let j = (i & !(span - 1)) - 1;
                            gp[i] = self.combine(gp[i], gp[j]);
                        }
                    }
                    span <<= 1;
                }
            }
            CpaType::Ks => {
                let mut d = 1;
                while d < m {
                    let prev = gp.clone();
                    for i in d..m {
                        gp[i] = self.combine(prev[i], prev[i - d]);
                    }
                    d <<= 1;
                }
            }
            CpaType::Bk => {
                let mut d = 1;
                while d < m {
                    let mut i = 2 * d - 1;
                    while i < m {
                        gp[i] = self.combine(gp[i], gp[i - d]);
                        i += 2 * d;
                    }
                    d <<= 1;
                }
                d >>= 1;
                while d >= 1 {
                    let mut i = 3 * d - 1;
                    while i < m {
                        gp[i] = self.combine(gp[i], gp[i - d]);
                        i += 2 * d;
                    }
                    d >>= 1;
                }
            }
        }
        let mut sum = Vec::with_capacity(n);
        for i in 0..n {
            let s = if i == 0 { p[0] } else { self.xor2(p[i], gp[i - 1].0) };
            sum.push(s);
        }
        sum
    }

    /// Prefix operator: `(g, p) o (g', p') = (g | p & g', p & p')`.
    fn combine(&mut self, hi: (Sig, Sig), lo: (Sig, Sig)) -> (Sig, Sig) {
        let g = self.ao21(hi.1, lo.0, hi.0);
        let p = self.and2(hi.1, lo.1);
        (g, p)
    }
}

fn push_carry(cols: &mut [Vec<Sig>], i: usize, c: Sig) {
    if let Some(col) = cols.get_mut(i) {
        col.push(c);
    }
}

/// Builds a `rows x cols` systolic array of `width`-bit MAC units.
///
/// Primary inputs are `a_<r>_<k>` and `b_<c>_<k>`; the accumulator register
/// outputs `acc_<r>_<c>_<k>` are the primary outputs. Logic that cannot
/// reach an output is pruned.
pub fn generate_mac_array(ct: CtType, cpa: CpaType, rows: usize, cols: usize, width: usize) -> Result<NetGraph> {
    if rows == 0 || cols == 0 {
        return Err(invalid("rows and cols must be at least 1"));
    }
    if width < 2 {
        return Err(invalid("width must be at least 2"));
    }
    let aw = acc_width(width);
    let mut g = Gen { b: NetGraphBuilder::new(), cells: 0 };
    let a_in: Vec<Vec<NetId>> =
        (0..rows).map(|r| (0..width).map(|k| g.b.add_net(a_name(r, k), NetKind::Input)).collect()).collect();
    let b_in: Vec<Vec<NetId>> =
        (0..cols).map(|c| (0..width).map(|k| g.b.add_net(b_name(c, k), NetKind::Input)).collect()).collect();

    // Placeholder accumulator nets are created first so the datapath can
    // read them; their registers are added once the sum is known.
    let mut a_row = a_in;
    let mut b_col = b_in;
    for r in 0..rows {
        for c in 0..cols {
            let acc: Vec<NetId> = (0..aw).map(|k| g.b.add_net(acc_name(r, c, k), NetKind::Output)).collect();
            let a = a_row[r].clone();
            let b = b_col[c].clone();
            let sum = g.mac(&a, &b, &acc, ct, cpa);
            for (k, s) in sum.into_iter().enumerate() {
                // Every column holds an accumulator bit, so no sum bit folds to zero.
                let Sig::Net(d) = s else { unreachable!("sum bit {k} folded to a constant") };
                let name = format!("r{}", g.cells);
                g.cells += 1;
                g.b.add_cell(name, DFF, &[("D", d), ("Q", acc[k])]).expect("valid register pins");
            }
            if c + 1 < cols {
                a_row[r] = a
                    .iter()
                    .enumerate()
                    .map(|(k, &n)| g.dff(n, format!("ap_{r}_{}_{k}", c + 1), NetKind::Internal))
                    .collect();
            }
            if r + 1 < rows {
                b_col[c] = b
                    .iter()
                    .enumerate()
                    .map(|(k, &n)| g.dff(n, format!("bp_{}_{c}_{k}", r + 1), NetKind::Internal))
                    .collect();
            }
        }
    }
    Ok(g.b.build()?.prune_dead())
}
