// SPDX-License-Identifier: Apache-2.0

//! Local normal of the delay/power frontier at an anchor point.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DirectionWeights {
    pub w_delay: f64,
    pub w_power: f64,
    /// (delay, power) of the anchor in normalized objective space.
    pub anchor: (f64, f64),
}

impl DirectionWeights {
    pub fn new(w_delay: f64, w_power: f64) -> Self {
        Self { w_delay, w_power, anchor: (0.0, 0.0) }
    }

    pub fn cosine(&self, v: (f64, f64)) -> f64 {
        let n = (v.0 * v.0 + v.1 * v.1).sqrt();
        if n == 0.0 {
            return 0.0;
        }
        (self.w_delay * v.0 + self.w_power * v.1) / n
    }
}

/// Which way the normal is made to point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlipRule {
    /// Improvement direction has a negative dot product with the anchor.
    #[default]
    TowardOrigin,
    /// Weights have a non-negative sum.
    PositiveSum,
}

/// Normal to the frontier near `points[anchor]` from its `k` nearest
/// neighbours, returned as non-negative unit weights `(W_delay, W_power)`.
pub fn ppa_direction(points: &[(f64, f64)], anchor: usize, k: usize) -> Result<DirectionWeights> {
    ppa_direction_with(points, anchor, k, FlipRule::TowardOrigin)
}

pub fn ppa_direction_with(points: &[(f64, f64)], anchor: usize, k: usize, flip: FlipRule) -> Result<DirectionWeights> {
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    if points.len() < k + 1 {
        return Err(invalid(format!("need at least {} frontier points, got {}", k + 1, points.len())));
    }
    let a = *points.get(anchor).ok_or_else(|| invalid(format!("anchor index {anchor} out of range")))?;
    if points.iter().any(|p| !(p.0.is_finite() && p.1.is_finite())) {
        return Err(invalid("non-finite frontier point"));
    }
    let mut others: Vec<(f64, usize)> = points
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != anchor)
        .map(|(i, p)| ((p.0 - a.0).powi(2) + (p.1 - a.1).powi(2), i))
        .collect();
    others.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
    let hood: Vec<(f64, f64)> = others[..k].iter().map(|&(_, i)| points[i]).collect();

    let n = hood.len() as f64;
    let mx = hood.iter().map(|p| p.0).sum::<f64>() / n;
    let my = hood.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in &hood {
        let (dx, dy) = (p.0 - mx, p.1 - my);
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let (nx, ny) = smallest_axis(sxx, sxy, syy)?;

    // v2 is the normal oriented by the flip rule; the weights are -v2.
    let mut v2 = (nx, ny);
    let outward = match flip {
        FlipRule::TowardOrigin => v2.0 * a.0 + v2.1 * a.1 > 0.0,
        FlipRule::PositiveSum => v2.0 + v2.1 > 0.0,
    };
    if outward {
        v2 = (-v2.0, -v2.1);
    }
    let (mut wd, mut wp) = (-v2.0, -v2.1);
    if wd <= 0.0 && wp <= 0.0 {
        wd = -wd;
        wp = -wp;
    }
    // Weights are non-negative by convention; a component pointing away
    // from improvement is dropped and the rest renormalized.
    wd = wd.max(0.0);
    wp = wp.max(0.0);
    let norm = (wd * wd + wp * wp).sqrt();
    Ok(DirectionWeights { w_delay: wd / norm, w_power: wp / norm, anchor: a })
}

/// Unit eigenvector of the smaller eigenvalue of `[[sxx, sxy], [sxy, syy]]`,
/// obtained by rotating the principal axis.
fn smallest_axis(sxx: f64, sxy: f64, syy: f64) -> Result<(f64, f64)> {
    let tr = sxx + syy;
    let half_gap = (((sxx - syy) / 2.0).powi(2) + sxy * sxy).sqrt();
    if tr <= f64::MIN_POSITIVE || half_gap <= 1e-12 * tr {
        return Err(Error::DegenerateGeometry("neighbourhood has no dominant direction".into()));
    }
    let lmax = tr / 2.0 + half_gap;
    let c1 = (lmax - syy, sxy);
    let c2 = (sxy, lmax - sxx);
    let (px, py) = if c1.0.hypot(c1.1) >= c2.0.hypot(c2.1) { c1 } else { c2 };
    let n = px.hypot(py);
    Ok((-py / n, px / n))
}

/// Index of the point with the smallest Euclidean norm.
pub fn knee_index(points: &[(f64, f64)]) -> Option<usize> {
    points
        .iter()
        .enumerate()
        .min_by(|x, y| {
            let nx = x.1 .0.hypot(x.1 .1);
            let ny = y.1 .0.hypot(y.1 .1);
            nx.total_cmp(&ny).then(x.0.cmp(&y.0))
        })
        .map(|(i, _)| i)
}

/// Index of the point with the smallest delay, lower power on ties.
pub fn min_delay_index(points: &[(f64, f64)]) -> Option<usize> {
    points
        .iter()
        .enumerate()
        .min_by(|x, y| x.1 .0.total_cmp(&y.1 .0).then(x.1 .1.total_cmp(&y.1 .1)).then(x.0.cmp(&y.0)))
        .map(|(i, _)| i)
}
