// SPDX-License-Identifier: Apache-2.0

//! Pareto dominance, frontiers, exact 3-D hypervolume and expected
//! hypervolume improvement. All objectives are minimized.

mod hv;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub use hv::{hypervolume, hypervolume_improvement};

/// (delay ns, power mW, area um^2), or the same triple after normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub delay: f64,
    pub power: f64,
    pub area: f64,
}

impl ObjectiveVector {
    pub const fn new(delay: f64, power: f64, area: f64) -> Self {
        Self { delay, power, area }
    }

    pub fn splat(v: f64) -> Self {
        Self::new(v, v, v)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.delay, self.power, self.area]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

fn check_finite(v: &ObjectiveVector) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("non-finite objective vector {v:?}")))
    }
}

/// Whether `a` is no worse than `b` everywhere and better somewhere.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> Result<bool> {
    check_finite(a)?;
    check_finite(b)?;
    Ok(dominates_unchecked(a, b))
}

pub(crate) fn dominates_unchecked(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    let (a, b) = (a.to_array(), b.to_array());
    a.iter().zip(&b).all(|(x, y)| x <= y) && a.iter().zip(&b).any(|(x, y)| x < y)
}

/// Indices of the non-dominated members of `ys`, ascending. Duplicates of a
/// frontier point are all kept.
pub fn pareto_front(ys: &[ObjectiveVector]) -> Result<Vec<usize>> {
    if ys.is_empty() {
        return Err(invalid("cannot take the frontier of an empty set"));
    }
    ys.iter().try_for_each(check_finite)?;
    // Sort lexicographically so a dominator always precedes what it
    // dominates, then compare each point against the frontier so far.
    let mut order: Vec<usize> = (0..ys.len()).collect();
    order.sort_by(|&i, &j| {
        let (a, b) = (ys[i].to_array(), ys[j].to_array());
        a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])).then(a[2].total_cmp(&b[2])).then(i.cmp(&j))
    });
    let mut front: Vec<usize> = Vec::new();
    for i in order {
        if !front.iter().any(|&f| dominates_unchecked(&ys[f], &ys[i])) {
            front.push(i);
        }
    }
    front.sort_unstable();
    Ok(front)
}

/// Independent Gaussian marginals per objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPosterior {
    pub mean: [f64; 3],
    pub variance: [f64; 3],
}

impl GaussianPosterior {
    pub fn new(mean: [f64; 3], variance: [f64; 3]) -> Result<Self> {
        if mean.iter().chain(&variance).any(|v| !v.is_finite()) || variance.iter().any(|&v| v < 0.0) {
            return Err(invalid("posterior needs finite means and non-negative variances"));
        }
        Ok(Self { mean, variance })
    }

    pub fn point(mean: ObjectiveVector) -> Self {
        Self { mean: mean.to_array(), variance: [0.0; 3] }
    }
}

/// Evaluated points, their frontier and the hypervolume reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoArchive {
    pub entries: Vec<(u64, ObjectiveVector)>,
    pub frontier: Vec<usize>,
    pub y_ref: ObjectiveVector,
}

impl ParetoArchive {
    pub fn new(y_ref: ObjectiveVector) -> Self {
        Self { entries: Vec::new(), frontier: Vec::new(), y_ref }
    }

    pub fn from_points(points: &[ObjectiveVector], y_ref: ObjectiveVector) -> Result<Self> {
        let mut a = Self::new(y_ref);
        for (i, p) in points.iter().enumerate() {
            a.push(i as u64, *p)?;
        }
        Ok(a)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn push(&mut self, id: u64, y: ObjectiveVector) -> Result<()> {
        check_finite(&y)?;
        let idx = self.entries.len();
        self.entries.push((id, y));
        let dominated = self.frontier.iter().any(|&f| dominates_unchecked(&self.entries[f].1, &y));
        if !dominated {
            let entries = &self.entries;
            self.frontier.retain(|&f| !dominates_unchecked(&y, &entries[f].1));
            self.frontier.push(idx);
        }
        Ok(())
    }

    pub fn frontier_points(&self) -> Vec<ObjectiveVector> {
        self.frontier.iter().map(|&i| self.entries[i].1).collect()
    }

    pub fn hypervolume(&self) -> Result<f64> {
        hypervolume(&self.frontier_points(), &self.y_ref)
    }
}

/// Monte Carlo estimate of the expected hypervolume improvement of a draw
/// from `posterior` over the archive frontier. A posterior without variance
/// is evaluated exactly.
pub fn ehvi(posterior: &GaussianPosterior, archive: &ParetoArchive, n_mc: usize, seed: u64) -> Result<f64> {
    if n_mc == 0 {
        return Err(invalid("n_mc must be at least 1"));
    }
    let front = archive.frontier_points();
    let y_ref = archive.y_ref;
    if posterior.variance.iter().all(|&v| v == 0.0) {
        return hypervolume_improvement(&front, &ObjectiveVector::from_array(posterior.mean), &y_ref);
    }
    let sd = posterior.variance.map(f64::sqrt);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = y_ref.to_array();
    let mut total = 0.0;
    for _ in 0..n_mc {
        let mut y = [0.0; 3];
        for k in 0..3 {
            let z: f64 = StandardNormal.sample(&mut rng);
            y[k] = posterior.mean[k] + sd[k] * z;
        }
        // Draws outside the reference box or behind the frontier add nothing.
        if y.iter().zip(&r).any(|(v, r)| v >= r) {
            continue;
        }
        let y = ObjectiveVector::from_array(y);
        if front.iter().any(|f| f.to_array().iter().zip(y.to_array()).all(|(a, b)| *a <= b)) {
            continue;
        }
        total += hypervolume_improvement(&front, &y, &y_ref)?;
    }
    Ok(total / n_mc as f64)
}

/// Per-objective min-max scaling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    pub lo: [f64; 3],
    pub hi: [f64; 3],
}

impl Normalizer {
    /// Bounds of `ys`; a constant objective gets unit span.
    pub fn fit<'a>(ys: impl IntoIterator<Item = &'a ObjectiveVector>) -> Result<Self> {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        let mut any = false;
        for y in ys {
            any = true;
            for (k, v) in y.to_array().into_iter().enumerate() {
                lo[k] = lo[k].min(v);
                hi[k] = hi[k].max(v);
            }
        }
        if !any {
            return Err(invalid("cannot normalize an empty set"));
        }
        for k in 0..3 {
            if hi[k] <= lo[k] {
                hi[k] = lo[k] + 1.0;
            }
        }
        Ok(Self { lo, hi })
    }

    pub fn apply(&self, y: &ObjectiveVector) -> ObjectiveVector {
        let a = y.to_array();
        ObjectiveVector::from_array(std::array::from_fn(|k| (a[k] - self.lo[k]) / (self.hi[k] - self.lo[k])))
    }

    /// Scales a displacement without shifting it.
    pub fn apply_delta(&self, d: &ObjectiveVector) -> ObjectiveVector {
        let a = d.to_array();
        ObjectiveVector::from_array(std::array::from_fn(|k| a[k] / (self.hi[k] - self.lo[k])))
    }
}
