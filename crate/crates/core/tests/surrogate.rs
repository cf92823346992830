// SPDX-License-Identifier: Apache-2.0

use orthrus_core::pareto::ObjectiveVector;
use orthrus_core::surrogate::{encode_config, Forest, PrfModel, TreeParams};
use orthrus_core::sysloop::random_sample;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dataset(rng: &mut impl Rng, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<ObjectiveVector>) {
    let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random()).collect()).collect();
    let y = x
        .iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            ObjectiveVector::from_array([s.sin() + 2.0, r[0] * r[0], (r[1] - 0.5).abs() + rng.random::<f64>() * 0.1])
        })
        .collect();
    (x, y)
}

/// Mean and population variance written out longhand.
fn aggregate(p: &[f64]) -> (f64, f64) {
    let mut s = 0.0;
    for v in p {
        s += v;
    }
    let mu = s / p.len() as f64;
    let mut q = 0.0;
    for v in p {
        q += (v - mu) * (v - mu);
    }
    (mu, q / p.len() as f64)
}

#[test]
fn posterior_is_the_tree_aggregate() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (x, y) = dataset(&mut rng, 60, 5);
    let model = PrfModel::fit(&x, &y, 40, 3).unwrap();
    for _ in 0..200 {
        let q: Vec<f64> = (0..5).map(|_| rng.random_range(-0.2..1.2)).collect();
        let post = model.predict(&q).unwrap();
        for (k, f) in model.forests.iter().enumerate() {
            let (mu, var) = aggregate(&f.tree_predictions(&q).unwrap());
            assert!((post.mean[k] - mu).abs() <= 1e-15 * mu.abs().max(1.0), "{} vs {mu}", post.mean[k]);
            assert!((post.variance[k] - var).abs() <= 1e-15 * var.abs().max(1.0), "{} vs {var}", post.variance[k]);
        }
    }
}

#[test]
fn hand_aggregates() {
    assert_eq!(aggregate(&[1.0, 3.0]), (2.0, 1.0));
    assert_eq!(aggregate(&[0.25; 7]).1, 0.0);
}

#[test]
fn a_single_tree_has_no_spread() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (x, y) = dataset(&mut rng, 40, 4);
    let model = PrfModel::fit(&x, &y, 1, 9).unwrap();
    for _ in 0..500 {
        let q: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..2.0)).collect();
        assert_eq!(model.predict(&q).unwrap().variance, [0.0; 3]);
    }
}

#[test]
fn fits_are_seeded() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (x, y) = dataset(&mut rng, 50, 3);
    let a = PrfModel::fit(&x, &y, 10, 4).unwrap();
    assert_eq!(a, PrfModel::fit(&x, &y, 10, 4).unwrap());
    assert_ne!(a, PrfModel::fit(&x, &y, 10, 5).unwrap());
    assert_eq!(PrfModel::from_json(&a.to_json().unwrap()).unwrap(), a);
}

#[test]
fn forest_learns_a_step() {
    let x: Vec<Vec<f64>> = (0..80).map(|i| vec![i as f64 / 80.0]).collect();
    let y: Vec<f64> = x.iter().map(|r| if r[0] < 0.5 { 1.0 } else { 5.0 }).collect();
    let f = Forest::fit(&x, &y, 30, &TreeParams::default(), 1).unwrap();
    assert!((f.predict(&[0.1]).unwrap().0 - 1.0).abs() < 1e-9);
    assert!((f.predict(&[0.9]).unwrap().0 - 5.0).abs() < 1e-9);
}

#[test]
fn bad_inputs_are_rejected() {
    let x = vec![vec![0.0], vec![1.0]];
    assert!(Forest::fit(&x, &[1.0], 5, &TreeParams::default(), 0).is_err());
    assert!(Forest::fit(&x, &[1.0, 2.0], 0, &TreeParams::default(), 0).is_err());
    assert!(Forest::fit(&x[..1], &[1.0], 5, &TreeParams::default(), 0).is_err());
    assert!(Forest::fit(&[vec![f64::NAN], vec![1.0]], &[1.0, 2.0], 5, &TreeParams::default(), 0).is_err());
    let f = Forest::fit(&x, &[1.0, 2.0], 2, &TreeParams::default(), 0).unwrap();
    assert!(f.predict(&[0.0, 1.0]).is_err());
}

#[test]
fn configs_encode_to_a_fixed_width() {
    let rows: Vec<Vec<f64>> = random_sample(50, 6).iter().map(|p| encode_config(p).unwrap()).collect();
    assert!(rows.iter().all(|r| r.len() == rows[0].len() && r.iter().all(|v| v.is_finite())));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn predictions_stay_inside_the_target_range(seed in any::<u64>(), b in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = dataset(&mut rng, 30, 3);
        let model = PrfModel::fit(&x, &y, b, seed).unwrap();
        let q: Vec<f64> = (0..3).map(|_| rng.random_range(-0.5..1.5)).collect();
        let post = model.predict(&q).unwrap();
        for k in 0..3 {
            let t: Vec<f64> = y.iter().map(|v| v.to_array()[k]).collect();
            let lo = t.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = t.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(post.mean[k] >= lo - 1e-12 && post.mean[k] <= hi + 1e-12);
            prop_assert!(post.variance[k] >= 0.0);
            prop_assert!(post.variance[k] <= (hi - lo).powi(2) / 4.0 + 1e-12);
        }
    }
}
