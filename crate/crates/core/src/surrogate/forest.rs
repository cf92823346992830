// SPDX-License-Identifier: Apache-2.0

//! CART regression trees and bagged forests.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Features tried per split; `None` means the square root of the count.
    pub max_features: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self { max_depth: 12, min_samples_leaf: 2, max_features: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<Node>,
}

impl RegressionTree {
    pub fn fit(x: &[Vec<f64>], y: &[f64], rows: &[usize], params: &TreeParams, rng: &mut impl Rng) -> Self {
        let d = x.first().map_or(0, Vec::len);
        let m = params.max_features.unwrap_or_else(|| (d as f64).sqrt().round() as usize).clamp(1, d.max(1));
        let mut t = Self { nodes: Vec::new() };
        let mut rows = rows.to_vec();
        t.grow(x, y, &mut rows, 0, params, m, rng);
        t
    }

    fn grow(
        &mut self,
        x: &[Vec<f64>],
        y: &[f64],
        rows: &mut [usize],
        depth: usize,
        params: &TreeParams,
        m: usize,
        rng: &mut impl Rng,
    ) -> usize {
        let id = self.nodes.len();
        let mean = rows.iter().map(|&r| y[r]).sum::<f64>() / rows.len() as f64;
        self.nodes.push(Node::Leaf { value: mean });
        let leaf = params.min_samples_leaf.max(1);
        if depth >= params.max_depth || rows.len() < 2 * leaf {
            return id;
        }
        let Some((feature, threshold)) = best_split(x, y, rows, leaf, m, rng) else {
            return id;
        };
        // Partition in place: rows with value <= threshold go left.
        let mut k = 0;
        for i in 0..rows.len() {
            if x[rows[i]][feature] <= threshold {
                rows.swap(i, k);
                k += 1;
            }
        }
        let (l, r) = rows.split_at_mut(k);
        let left = self.grow(x, y, l, depth + 1, params, m, rng);
        let right = self.grow(x, y, r, depth + 1, params, m, rng);
        self.nodes[id] = Node::Split { feature, threshold, left, right };
        id
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn leaf_values(&self) -> impl Iterator<Item = f64> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Leaf { value } => Some(*value),
            Node::Split { .. } => None,
        })
    }
}

/// Split maximizing the variance reduction over a random feature subset.
fn best_split(
    x: &[Vec<f64>],
    y: &[f64],
    rows: &[usize],
    leaf: usize,
    m: usize,
    rng: &mut impl Rng,
) -> Option<(usize, f64)> {
    let d = x[rows[0]].len();
    let n = rows.len();
    let total: f64 = rows.iter().map(|&r| y[r]).sum();
    let total_sq: f64 = rows.iter().map(|&r| y[r] * y[r]).sum();
    let parent_sse = total_sq - total * total / n as f64;
    if parent_sse <= 1e-12 * total_sq.max(1e-300) {
        return None;
    }
    let mut best: Option<(f64, usize, f64)> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);
    for f in sample(rng, d, m.min(d)).into_iter() {
        pairs.clear();
        pairs.extend(rows.iter().map(|&r| (x[r][f], y[r])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (mut ls, mut lsq) = (0.0, 0.0);
        for i in 0..n - 1 {
            ls += pairs[i].1;
            lsq += pairs[i].1 * pairs[i].1;
            let nl = i + 1;
            let nr = n - nl;
            if nl < leaf || nr < leaf || pairs[i].0 == pairs[i + 1].0 {
                continue;
            }
            let rs = total - ls;
            let rsq = total_sq - lsq;
            let sse = (lsq - ls * ls / nl as f64) + (rsq - rs * rs / nr as f64);
            if best.is_none_or(|b| sse < b.0) {
                best = Some((sse, f, 0.5 * (pairs[i].0 + pairs[i + 1].0)));
            }
        }
    }
    best.filter(|b| b.0 < parent_sse).map(|(_, f, t)| (f, t))
}

/// Bagged ensemble for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<RegressionTree>,
    pub n_features: usize,
}

impl Forest {
    /// Fits `b` trees, each on a bootstrap resample of the training size.
    pub fn fit(x: &[Vec<f64>], y: &[f64], b: usize, params: &TreeParams, seed: u64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(invalid(format!("{} feature rows but {} targets", x.len(), y.len())));
        }
        if x.len() < 2 {
            return Err(Error::InsufficientData(format!("need at least 2 samples, got {}", x.len())));
        }
        if b == 0 {
            return Err(invalid("forest needs at least one tree"));
        }
        let d = x[0].len();
        if x.iter().any(|r| r.len() != d) || x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
            return Err(invalid("training data must be finite with a fixed feature count"));
        }
        let n = x.len();
        let trees = (0..b)
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                let rows: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
                RegressionTree::fit(x, y, &rows, params, &mut rng)
            })
            .collect();
        Ok(Self { trees, n_features: d })
    }

    pub fn tree_predictions(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(invalid(format!("expected {} features, got {}", self.n_features, x.len())));
        }
        Ok(self.trees.iter().map(|t| t.predict(x)).collect())
    }

    /// Mean and population variance over the trees.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        let p = self.tree_predictions(x)?;
        Ok(mean_var(&p))
    }
}

pub(crate) fn mean_var(p: &[f64]) -> (f64, f64) {
    let b = p.len() as f64;
    let mu = p.iter().sum::<f64>() / b;
    let var = p.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / b;
    (mu, var)
}
