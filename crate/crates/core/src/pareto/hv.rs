// SPDX-License-Identifier: Apache-2.0

//! Exact hypervolume in three objectives by sweeping the third coordinate
//! and maintaining the dominated area of the first two as a staircase.

use std::collections::BTreeMap;

use super::ObjectiveVector;
use crate::error::{invalid, Result};

/// Total-ordered f64 key for the staircase map.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Non-dominated (x, y) points with x ascending and y descending, plus the
/// area they dominate below the reference.
struct Staircase {
    steps: BTreeMap<Key, f64>,
    rx: f64,
    ry: f64,
    area: f64,
}

impl Staircase {
    fn new(rx: f64, ry: f64) -> Self {
        Self { steps: BTreeMap::new(), rx, ry, area: 0.0 }
    }

    fn insert(&mut self, x: f64, y: f64) {
        // Lowest y among steps at or left of x bounds what is already covered.
        let mut ceiling = self.ry;
        if let Some((_, &yl)) = self.steps.range(..=Key(x)).next_back() {
            if yl <= y {
                return;
            }
            ceiling = yl;
        }
        let mut left = x;
        let mut removed = Vec::new();
        let mut stop_x = self.rx;
        for (&k, &yq) in self.steps.range(Key(x)..) {
            self.area += (k.0 - left) * (ceiling - y);
            if yq < y {
                left = k.0;
                stop_x = k.0;
                break;
            }
            removed.push(k);
            ceiling = yq;
            left = k.0;
            stop_x = self.rx;
        }
        if left < stop_x {
            self.area += (stop_x - left) * (ceiling - y);
        }
        for k in removed {
            self.steps.remove(&k);
        }
        self.steps.insert(Key(x), y);
    }
}

/// Measure of the union of boxes `[p, y_ref]`. Points that do not lie
/// strictly below the reference in every objective add nothing.
pub fn hypervolume(front: &[ObjectiveVector], y_ref: &ObjectiveVector) -> Result<f64> {
    if !y_ref.is_finite() {
        return Err(invalid("reference point must be finite"));
    }
    let r = y_ref.to_array();
    let mut pts: Vec<[f64; 3]> = front
        .iter()
        .map(|p| p.to_array())
        .filter(|p| p.iter().all(|v| v.is_finite()) && p.iter().zip(&r).all(|(v, r)| v < r))
        .collect();
    pts.sort_by(|a, b| a[2].total_cmp(&b[2]).then(a[0].total_cmp(&b[0])).then(a[1].total_cmp(&b[1])));
    let mut stair = Staircase::new(r[0], r[1]);
    let mut vol = 0.0;
    for (i, p) in pts.iter().enumerate() {
        stair.insert(p[0], p[1]);
        let z_next = pts.get(i + 1).map_or(r[2], |q| q[2]);
        vol += stair.area * (z_next - p[2]);
    }
    Ok(vol)
}

/// Volume that `y` adds to the hypervolume of `front`.
pub fn hypervolume_improvement(front: &[ObjectiveVector], y: &ObjectiveVector, y_ref: &ObjectiveVector) -> Result<f64> {
    if !y_ref.is_finite() || !y.is_finite() {
        return Err(invalid("point and reference must be finite"));
    }
    let (ya, r) = (y.to_array(), y_ref.to_array());
    if ya.iter().zip(&r).any(|(v, r)| v >= r) {
        return Ok(0.0);
    }
    let own: f64 = ya.iter().zip(&r).map(|(v, r)| r - v).product();
    // The part of the box already covered is the frontier clipped to it.
    let clipped: Vec<ObjectiveVector> = front
        .iter()
        .map(|f| {
            let fa = f.to_array();
            ObjectiveVector::from_array(std::array::from_fn(|k| fa[k].max(ya[k])))
        })
        .collect();
    let covered = hypervolume(&clipped, y_ref)?;
    Ok((own - covered).max(0.0))
}
