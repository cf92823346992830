// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{
    brute_subcircuits, contribution_cases, full_adder, half_adder, isomorphic, random_dag, random_front,
    ContributionCase, FragSpec,
};
use orthrus_core::interloop::mining::fragment;
use orthrus_core::interloop::{
    canonical_repr, enumerate_subcircuits, mine_subcircuits, power_contribution, ppa_direction,
    select_fusion_candidates, timing_contribution, CellContribution, MiningBounds,
};
use orthrus_core::netlist::{
    generate_mac_array, partition_combinational, static_timing, CellLibrary, CpaType, CtType, NetGraph,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn mining_matches_connected_subset_enumeration() {
    let bounds = MiningBounds::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..200 {
        let n = rng.random_range(4..=30);
        let g = random_dag(&mut rng, n, 0.1);
        let mut got: Vec<Vec<_>> = Vec::new();
        enumerate_subcircuits(&g, bounds, |cells, _| {
            let mut c = cells.to_vec();
            c.sort_unstable();
            got.push(c);
        })
        .unwrap();
        let unique: BTreeSet<Vec<_>> = got.iter().cloned().collect();
        assert_eq!(unique.len(), got.len(), "case {case}: a subcircuit was emitted twice");
        let want = brute_subcircuits(&g, bounds);
        assert_eq!(unique, want, "case {case}");

        let mut by_key: BTreeMap<String, usize> = BTreeMap::new();
        for cells in &want {
            *by_key.entry(canonical_repr(&fragment(&g, cells).0)).or_default() += 1;
        }
        let mined: BTreeMap<String, usize> =
            mine_subcircuits(&g, 3, 2, 4).unwrap().into_iter().map(|p| (p.key, p.count)).collect();
        assert_eq!(mined, by_key, "case {case}");
    }
}

#[test]
fn canonical_keys_agree_with_isomorphism_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut same, mut differ) = (0, 0);
    for case in 0..500 {
        let a = FragSpec::random(&mut rng);
        let b = match case % 3 {
            0 => a.clone(),
            1 => a.mutate(&mut rng),
            _ => FragSpec::random(&mut rng),
        };
        let ga = a.build(None);
        let gb = b.build(Some(&mut rng));
        let iso = isomorphic(&ga, &gb);
        assert_eq!(canonical_repr(&ga) == canonical_repr(&gb), iso, "case {case}: {a:?} vs {b:?}");
        if iso {
            same += 1;
        } else {
            differ += 1;
        }
    }
    assert!(same > 150 && differ > 150, "{same} isomorphic, {differ} not");
}

#[test]
fn multiplier_mining_finds_full_and_half_adders() {
    let g = generate_mac_array(CtType::Wt, CpaType::Sk, 1, 1, 8).unwrap();
    let island = partition_combinational(&g).into_iter().max_by_key(NetGraph::cell_count).unwrap();
    let patterns = mine_subcircuits(&island, 3, 2, 4).unwrap();
    let picked = select_fusion_candidates(&patterns, 2);
    assert_eq!(picked.len(), 2);
    assert!(isomorphic(&picked[0].example, &full_adder()), "first pick is not a full adder");
    assert!(isomorphic(&picked[1].example, &half_adder()), "second pick is not a half adder");
    assert_eq!(picked[0].key, canonical_repr(&full_adder()));
    assert_eq!(picked[1].key, canonical_repr(&half_adder()));
}

const LAMBDA: f64 = 10.0;

fn close(a: f64, b: f64) {
    assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
}

fn check_contributions(case: &ContributionCase) {
    let g = &case.netlist;
    let lib = CellLibrary::default();
    let sta = static_timing(g, &lib, 1).unwrap();
    let c = CellContribution::compute(g, &lib, &sta, LAMBDA).unwrap();
    let td = timing_contribution(g, &sta, LAMBDA).unwrap();
    let pw = power_contribution(g, &lib).unwrap();
    assert_eq!(td.len(), case.delay.len(), "{}", case.name);
    assert_eq!(pw.len(), case.power.len(), "{}", case.name);
    for &(t, w) in &case.delay {
        close(td[t], w);
        close(c.weights[t].delay, w);
    }
    for &(t, w) in &case.power {
        close(pw[t], w);
        close(c.weights[t].power, w);
    }
    close(c.delay_sum(), 1.0);
    close(c.power_sum(), 1.0);
}

#[test]
fn contributions_on_constructed_netlists() {
    for case in contribution_cases(LAMBDA) {
        check_contributions(&case);
    }
}

#[test]
fn collinear_frontier_gives_the_diagonal() {
    let pts = [(0.0, 1.0), (0.5, 0.5), (1.0, 0.0)];
    let w = ppa_direction(&pts, 1, 2).unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!((w.w_delay - h).abs() < 1e-9 && (w.w_power - h).abs() < 1e-9, "{w:?}");
}

#[test]
fn direction_is_unit_and_translation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for case in 0..100 {
        let pts = random_front(&mut rng);
        let anchor = rng.random_range(0..pts.len());
        let w = ppa_direction(&pts, anchor, 2).unwrap();
        assert!((w.w_delay.hypot(w.w_power) - 1.0).abs() < 1e-12, "case {case}");
        assert!(w.w_delay >= 0.0 && w.w_power >= 0.0);
        let (dx, dy) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let moved: Vec<(f64, f64)> = pts.iter().map(|p| (p.0 + dx, p.1 + dy)).collect();
        let m = ppa_direction(&moved, anchor, 2).unwrap();
        assert!((m.w_delay - w.w_delay).abs() < 1e-9 && (m.w_power - w.w_power).abs() < 1e-9, "case {case}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relabelled_fragments_keep_their_key(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = FragSpec::random(&mut rng);
        prop_assert_eq!(canonical_repr(&s.build(None)), canonical_repr(&s.build(Some(&mut rng))));
    }

    #[test]
    fn timing_weights_sum_to_one(seed in any::<u64>(), lambda in 0.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_dag(&mut rng, 12, 0.0);
        let sta = static_timing(&g, &CellLibrary::default(), 1).unwrap();
        let w = timing_contribution(&g, &sta, lambda).unwrap();
        prop_assert!((w.values().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(w.values().all(|&v| v >= 0.0));
    }
}
