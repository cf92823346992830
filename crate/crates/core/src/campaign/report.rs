// SPDX-License-Identifier: Apache-2.0

//! Hypervolumes, iso-metric deltas and plot data computed from archives.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pareto::{pareto_front, Normalizer, ObjectiveVector, ParetoArchive};
use crate::sysloop::ArchiveLine;

/// Relative tolerance on the held metric when pairing frontier points.
pub const ISO_TOLERANCE: f64 = 1e-3;

/// Archive lines sharing a label, such as one campaign mode.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledArchive {
    pub label: String,
    pub lines: Vec<ArchiveLine>,
}

/// Splits lines into one archive per mode, in first-seen order.
pub fn group_by_mode(lines: &[ArchiveLine]) -> Vec<LabeledArchive> {
    let mut out: Vec<LabeledArchive> = Vec::new();
    for l in lines {
        match out.iter_mut().find(|g| g.label == l.mode) {
            Some(g) => g.lines.push(l.clone()),
            None => out.push(LabeledArchive { label: l.mode.clone(), lines: vec![l.clone()] }),
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HvEntry {
    pub label: String,
    pub seed: u64,
    pub hypervolume: f64,
    pub evaluations: usize,
}

/// Per-seed min-max bounds over every archive.
pub fn seed_normalizers(archives: &[LabeledArchive]) -> Result<BTreeMap<u64, Normalizer>> {
    let mut by_seed: BTreeMap<u64, Vec<ObjectiveVector>> = BTreeMap::new();
    for l in archives.iter().flat_map(|a| &a.lines) {
        by_seed.entry(l.seed).or_default().push(l.objectives);
    }
    by_seed.into_iter().map(|(s, ys)| Ok((s, Normalizer::fit(&ys)?))).collect()
}

/// Hypervolume of every (archive, seed) under the shared per-seed
/// normalization, reference point (1, 1, 1).
pub fn hypervolumes(archives: &[LabeledArchive]) -> Result<Vec<HvEntry>> {
    let norms = seed_normalizers(archives)?;
    let mut out = Vec::new();
    for a in archives {
        let mut seeds: Vec<u64> = a.lines.iter().map(|l| l.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        for seed in seeds {
            let n = &norms[&seed];
            let pts: Vec<ObjectiveVector> =
                a.lines.iter().filter(|l| l.seed == seed).map(|l| n.apply(&l.objectives)).collect();
            let hv = ParetoArchive::from_points(&pts, ObjectiveVector::splat(1.0))?.hypervolume()?;
            out.push(HvEntry { label: a.label.clone(), seed, hypervolume: hv, evaluations: pts.len() });
        }
    }
    Ok(out)
}

/// Non-dominated (delay, power) points, by increasing delay.
pub fn front_2d(ys: &[ObjectiveVector]) -> Vec<(f64, f64)> {
    let mut pts: Vec<(f64, f64)> = ys.iter().map(|y| (y.delay, y.power)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut out: Vec<(f64, f64)> = Vec::new();
    for p in pts {
        if out.last().is_none_or(|q| p.1 < q.1) {
            out.push(p);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsoDelta {
    /// Reference points that found a partner within tolerance.
    pub pairs: usize,
    /// Mean and best relative reduction of the free metric.
    pub mean: f64,
    pub max: f64,
}

/// Reduction of metric `free` at a matched `held` metric (0 = delay,
/// 1 = power). Each reference point is paired with the candidate point
/// nearest in the held metric.
pub fn iso_reduction(reference: &[(f64, f64)], candidate: &[(f64, f64)], held: usize, tol: f64) -> Option<IsoDelta> {
    let get = |p: &(f64, f64), k: usize| if k == 0 { p.0 } else { p.1 };
    let free = 1 - held;
    let mut reductions = Vec::new();
    for a in reference {
        let ah = get(a, held);
        let Some(b) = candidate.iter().min_by(|x, y| (get(x, held) - ah).abs().total_cmp(&(get(y, held) - ah).abs()))
        else {
            continue;
        };
        if (get(b, held) - ah).abs() <= tol * ah.abs() && get(a, free) != 0.0 {
            reductions.push((get(a, free) - get(b, free)) / get(a, free));
        }
    }
    if reductions.is_empty() {
        return None;
    }
    let mean = reductions.iter().sum::<f64>() / reductions.len() as f64;
    let max = reductions.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some(IsoDelta { pairs: reductions.len(), mean, max })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoComparison {
    pub seed: u64,
    pub reference: String,
    pub candidate: String,
    /// Delay reduction at matched power.
    pub iso_power_delay: Option<IsoDelta>,
    /// Power reduction at matched delay.
    pub iso_delay_power: Option<IsoDelta>,
}

impl IsoComparison {
    pub fn describe(&self) -> String {
        let f = |d: &Option<IsoDelta>| match d {
            Some(d) => format!("{:.2}% (best {:.2}%, {} pairs)", 100.0 * d.mean, 100.0 * d.max, d.pairs),
            None => "no iso-comparison available".to_string(),
        };
        format!(
            "seed {} {} vs {}: iso-power delay reduction {}; iso-delay power reduction {}",
            self.seed,
            self.candidate,
            self.reference,
            f(&self.iso_power_delay),
            f(&self.iso_delay_power)
        )
    }
}

/// Compares every archive against `reference` on each seed both contain.
pub fn iso_comparisons(archives: &[LabeledArchive], reference: &str, tol: f64) -> Result<Vec<IsoComparison>> {
    let base = archives
        .iter()
        .find(|a| a.label == reference)
        .ok_or_else(|| invalid(format!("no archive labelled '{reference}'")))?;
    let fronts = |a: &LabeledArchive| {
        let mut by_seed: BTreeMap<u64, Vec<ObjectiveVector>> = BTreeMap::new();
        for l in &a.lines {
            by_seed.entry(l.seed).or_default().push(l.objectives);
        }
        by_seed.into_iter().map(|(s, ys)| (s, front_2d(&ys))).collect::<BTreeMap<_, _>>()
    };
    let ref_fronts = fronts(base);
    let mut out = Vec::new();
    for a in archives.iter().filter(|a| a.label != reference) {
        for (seed, front) in fronts(a) {
            let Some(rf) = ref_fronts.get(&seed) else { continue };
            out.push(IsoComparison {
                seed,
                reference: reference.to_string(),
                candidate: a.label.clone(),
                iso_power_delay: iso_reduction(rf, &front, 1, tol),
                iso_delay_power: iso_reduction(rf, &front, 0, tol),
            });
        }
    }
    Ok(out)
}

/// One row of `frontier.csv`, raw objective units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierRow {
    pub label: String,
    pub seed: u64,
    pub id: u64,
    pub delay: f64,
    pub power: f64,
    pub area: f64,
}

/// Pareto frontier of every (archive, seed).
pub fn frontier_rows(archives: &[LabeledArchive]) -> Result<Vec<FrontierRow>> {
    let mut out = Vec::new();
    for a in archives {
        let mut by_seed: BTreeMap<u64, Vec<&ArchiveLine>> = BTreeMap::new();
        for l in &a.lines {
            by_seed.entry(l.seed).or_default().push(l);
        }
        for (seed, ls) in by_seed {
            let ys: Vec<ObjectiveVector> = ls.iter().map(|l| l.objectives).collect();
            for i in pareto_front(&ys)? {
                let y = ys[i];
                out.push(FrontierRow {
                    label: a.label.clone(),
                    seed,
                    id: ls[i].id,
                    delay: y.delay,
                    power: y.power,
                    area: y.area,
                });
            }
        }
    }
    Ok(out)
}

pub fn write_frontier_csv(rows: &[FrontierRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}

pub fn read_frontier_csv(text: &str) -> Result<Vec<FrontierRow>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(format!("frontier CSV: {e}")))
}

/// Everything `orthrus report` derives from a set of archives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveReport {
    pub reference: String,
    pub hypervolumes: Vec<HvEntry>,
    pub iso: Vec<IsoComparison>,
    pub frontier: Vec<FrontierRow>,
}

impl ArchiveReport {
    /// The reference is the `baseline` archive when present, else the first.
    pub fn build(archives: &[LabeledArchive]) -> Result<Self> {
        if archives.len() < 2 {
            return Err(Error::InsufficientData(format!("need at least 2 archives, got {}", archives.len())));
        }
        let reference = archives.iter().find(|a| a.label == "baseline").unwrap_or(&archives[0]).label.clone();
        Ok(Self {
            hypervolumes: hypervolumes(archives)?,
            iso: iso_comparisons(archives, &reference, ISO_TOLERANCE)?,
            frontier: frontier_rows(archives)?,
            reference,
        })
    }

    /// Median hypervolume per label over its seeds.
    pub fn median_hypervolumes(&self) -> BTreeMap<String, f64> {
        let mut by: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for e in &self.hypervolumes {
            by.entry(e.label.clone()).or_default().push(e.hypervolume);
        }
        by.into_iter().map(|(k, v)| (k, median(&v))).collect()
    }
}

pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}
