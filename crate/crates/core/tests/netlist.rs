// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::HashMap;

use orthrus_core::netlist::{
    generate_mac_array, parse_netlist, partition_combinational, simulate, static_timing, write_netlist, CellLibrary,
    CpaType, CtType, NetGraph, Simulator,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn check_two_cycles(g: &NetGraph, width: usize, vectors: &[(u64, u64, u64, u64)]) {
    assert_eq!(common::mac_mismatches(g, width, vectors), 0);
}

#[test]
fn mac_exhaustive_small_widths() {
    for width in 2..=4 {
        let vectors = common::all_vectors(width);
        for ct in CtType::ALL {
            for cpa in CpaType::ALL {
                let g = generate_mac_array(ct, cpa, 1, 1, width).unwrap();
                check_two_cycles(&g, width, &vectors);
            }
        }
    }
}

#[test]
fn mac_random_width_eight() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let vectors: Vec<_> = (0..1024)
        .map(|_| {
            (rng.random_range(0..256), rng.random_range(0..256), rng.random_range(0..256), rng.random_range(0..256))
        })
        .collect();
    for ct in CtType::ALL {
        for cpa in CpaType::ALL {
            let g = generate_mac_array(ct, cpa, 1, 1, 8).unwrap();
            check_two_cycles(&g, 8, &vectors);
        }
    }
}

#[test]
fn two_by_two_multiplier_products() {
    let g = generate_mac_array(CtType::Wt, CpaType::Sk, 1, 1, 2).unwrap();
    for a in 0..4u64 {
        for b in 0..4u64 {
            let mut inputs = HashMap::new();
            for (k, n) in g.bus("a_0_").into_iter().enumerate() {
                inputs.insert(n, (a >> k) & 1 == 1);
            }
            for (k, n) in g.bus("b_0_").into_iter().enumerate() {
                inputs.insert(n, (b >> k) & 1 == 1);
            }
            let out = simulate(&g, &inputs, 1).unwrap();
            let acc = g.bus("acc_0_0_");
            let v = acc.iter().enumerate().fold(0u64, |s, (k, n)| s | ((out[n] as u64) << k));
            assert_eq!(v, a * b);
        }
    }
}

#[test]
fn accumulates_over_two_cycles() {
    let g = generate_mac_array(CtType::Dt, CpaType::Bk, 1, 1, 8).unwrap();
    check_two_cycles(&g, 8, &[(5, 7, 2, 3)]);
}

#[test]
fn systolic_array_skews_operands() {
    let g = generate_mac_array(CtType::Wt, CpaType::Ks, 2, 2, 3).unwrap();
    let mut sim = Simulator::new(&g).unwrap();
    let a: Vec<Vec<_>> = (0..2).map(|r| g.bus(&format!("a_{r}_"))).collect();
    let b: Vec<Vec<_>> = (0..2).map(|c| g.bus(&format!("b_{c}_"))).collect();
    // Cycle t feeds a_r = r + t + 1 and b_c = c + 2t + 1.
    let av = |r: u64, t: u64| (r + t + 1) & 7;
    let bv = |c: u64, t: u64| (c + 2 * t + 1) & 7;
    let cycles = 4u64;
    for t in 0..cycles {
        for r in 0..2 {
            sim.set_bus(&a[r], &[av(r as u64, t)]);
            sim.set_bus(&b[r], &[bv(r as u64, t)]);
        }
        sim.step();
    }
    for r in 0..2u64 {
        for c in 0..2u64 {
            // Element (r, c) sees a_r delayed by c and b_c delayed by r.
            let mut want = 0;
            for t in 0..cycles {
                if t >= c && t >= r {
                    want += av(r, t - c) * bv(c, t - r);
                }
            }
            let got = sim.bus(&g.bus(&format!("acc_{r}_{c}_")), 1)[0];
            assert_eq!(got, want, "element ({r},{c})");
        }
    }
}

#[test]
fn tree_and_adder_shapes_differ() {
    let count = |ct, cpa| {
        let g = generate_mac_array(ct, cpa, 1, 1, 8).unwrap();
        let t = g.type_counts();
        (g.cell_count(), t.get("MAJx1").copied().unwrap_or(0), t.get("XOR2x2").copied().unwrap_or(0))
    };
    let (_, wt_maj, wt_xor) = count(CtType::Wt, CpaType::Sk);
    let (_, dt_maj, dt_xor) = count(CtType::Dt, CpaType::Sk);
    assert!(wt_maj != dt_maj || wt_xor != dt_xor);
    let (ks, ..) = count(CtType::Wt, CpaType::Ks);
    let (bk, ..) = count(CtType::Wt, CpaType::Bk);
    assert!(ks > bk, "KS {ks} vs BK {bk}");
}

#[test]
fn islands_match_processing_elements() {
    let g = generate_mac_array(CtType::Wt, CpaType::Sk, 2, 2, 4).unwrap();
    let islands = partition_combinational(&g);
    assert_eq!(islands.len(), 4);
    let comb: usize = islands.iter().map(NetGraph::cell_count).sum();
    assert_eq!(comb, g.cells().iter().filter(|c| !c.is_sequential()).count());
}

#[test]
fn doubling_delays_doubles_critical_path() {
    let g = generate_mac_array(CtType::Wt, CpaType::Sk, 2, 2, 4).unwrap();
    let lib = CellLibrary::default();
    let base = static_timing(&g, &lib, 10).unwrap();
    let twice = static_timing(&g, &lib.with_scaled_delays(2.0), 10).unwrap();
    assert_eq!(twice.critical, 2.0 * base.critical);
    assert!(base.critical > 0.0);
    assert_eq!(base.paths[0].delay, base.critical);
    assert!(base.paths.windows(2).all(|w| w[0].delay >= w[1].delay));
}

#[test]
fn netlist_document_round_trip() {
    let g = generate_mac_array(CtType::Dt, CpaType::Ks, 2, 1, 3).unwrap();
    let text = write_netlist(&g).unwrap();
    assert_eq!(parse_netlist(&text).unwrap(), g);
}

#[test]
fn sta_matches_path_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..200 {
        let n = rng.random_range(1..=20);
        let g = common::random_dag(&mut rng, n, 0.15);
        let lib = common::dyadic_library(&mut rng);
        let sta = static_timing(&g, &lib, 5).unwrap();
        let want = common::enumerate_through(&g, &lib);
        assert_eq!(sta.through, want, "case {case}");
        let worst = want.iter().flatten().copied().fold(0.0, f64::max);
        assert_eq!(sta.critical, worst, "case {case}");
        for p in &sta.paths {
            let sum: f64 = p.cells.iter().map(|c| lib.cells[&g.cell(*c).cell_type].delay).sum();
            assert_eq!(p.delay, sum, "case {case}");
        }
    }
}
