// SPDX-License-Identifier: Apache-2.0

//! Seeded inputs shared by the benchmarks.

use orthrus_core::ObjectiveVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` mutually non-dominated points on the unit simplex.
pub fn simplex_front(n: usize, seed: u64) -> Vec<ObjectiveVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let a: [f64; 3] = std::array::from_fn(|_| -rng.random::<f64>().max(1e-12).ln());
            let s: f64 = a.iter().sum();
            ObjectiveVector::from_array(a.map(|v| v / s))
        })
        .collect()
}

/// Uniform rows in `[0, 1]^dims`.
pub fn unit_rows(n: usize, dims: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| (0..dims).map(|_| rng.random()).collect()).collect()
}
