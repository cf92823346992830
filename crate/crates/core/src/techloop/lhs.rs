// SPDX-License-Identifier: Apache-2.0

//! Latin hypercube sampling on the unit cube.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` points in `[0, 1]^dims`. Each dimension is cut into `n` equal strata
/// holding exactly one point; dimensions listed in `discrete` with `k`
/// levels instead draw a level uniformly and return `level / (k - 1)`.
pub fn lhs_unit(n: usize, dims: usize, discrete: &[(usize, usize)], seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = vec![vec![0.0; dims]; n];
    for d in 0..dims {
        if let Some(&(_, k)) = discrete.iter().find(|(i, _)| *i == d) {
            for row in out.iter_mut() {
                let level = rng.random_range(0..k);
                row[d] = if k > 1 { level as f64 / (k - 1) as f64 } else { 0.0 };
            }
            continue;
        }
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        for (row, s) in out.iter_mut().zip(strata) {
            let u: f64 = rng.random();
            row[d] = (s as f64 + u) / n as f64;
        }
    }
    out
}
