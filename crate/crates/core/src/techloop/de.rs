// SPDX-License-Identifier: Apache-2.0

//! Differential evolution on the unit box with an elite archive and a
//! minimum-distance penalty.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DeConfig {
    /// Mutation factor.
    pub mf: f64,
    /// Crossover rate.
    pub cr: f64,
    /// Penalty factor.
    pub pf: f64,
    /// Penalty threshold on the gene-space distance.
    pub pt: f64,
    pub s_pop: usize,
    pub n_gen: usize,
    pub s_top: usize,
    /// Chance of drawing the difference vector from the elites.
    pub elite_prob: f64,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self { mf: 0.8, cr: 0.9, pf: 1e3, pt: 0.1, s_pop: 100, n_gen: 20, s_top: 5, elite_prob: 0.2 }
    }
}

/// `f + pf * max(0, pt - d_min)`.
pub fn penalized(f: f64, d_min: f64, pt: f64, pf: f64) -> f64 {
    f + pf * (pt - d_min).max(0.0)
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Rounds each listed `(dimension, levels)` gene to its nearest level.
pub fn snap(x: &mut [f64], discrete: &[(usize, usize)]) {
    for &(d, k) in discrete {
        let steps = k.saturating_sub(1).max(1) as f64;
        x[d] = (x[d].clamp(0.0, 1.0) * steps).round() / steps;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub genes: Vec<f64>,
    /// Penalized value for population members, plain value for elites.
    pub fitness: f64,
}

/// Population trace of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeOutcome {
    /// Diverse elites in fitness order, at most `s_top`.
    pub candidates: Vec<Individual>,
    pub population: Vec<Individual>,
    /// `(generation, individual)` of every accepted trial.
    pub replacements: Vec<(usize, usize)>,
}

struct Elites {
    members: Vec<Individual>,
    pt: f64,
    capacity: usize,
}

impl Elites {
    fn offer(&mut self, ind: &Individual) {
        let close: Vec<usize> =
            (0..self.members.len()).filter(|&i| distance(&self.members[i].genes, &ind.genes) < self.pt).collect();
        if close.is_empty() {
            self.members.push(ind.clone());
        } else if close.iter().all(|&i| ind.fitness < self.members[i].fitness) {
            for &i in close.iter().rev() {
                self.members.swap_remove(i);
            }
            self.members.push(ind.clone());
        } else {
            return;
        }
        self.members.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
        self.members.truncate(self.capacity);
    }
}

fn pick_distinct(rng: &mut impl Rng, n: usize, exclude: &[usize]) -> usize {
    loop {
        let i = rng.random_range(0..n);
        if !exclude.contains(&i) {
            return i;
        }
    }
}

/// Minimises `f` over `[0, 1]^dims`.
///
/// The population starts from `init` (snapped, truncated to `s_pop`) and is
/// filled with uniform draws. Discrete genes are listed as
/// `(dimension, levels)` and always sit on a level.
pub fn enhanced_de(
    f: impl Fn(&[f64]) -> f64,
    init: &[Vec<f64>],
    dims: usize,
    discrete: &[(usize, usize)],
    cfg: &DeConfig,
    seed: u64,
) -> Result<DeOutcome> {
    if cfg.s_pop < 4 {
        return Err(Error::InvalidState(format!("population of {} cannot form a/b/c triples", cfg.s_pop)));
    }
    if dims == 0 || init.iter().any(|x| x.len() != dims) {
        return Err(Error::InvalidState("initial genes do not match the dimension count".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pop: Vec<Individual> = Vec::with_capacity(cfg.s_pop);
    for x in init.iter().take(cfg.s_pop) {
        let mut g: Vec<f64> = x.iter().map(|v| v.clamp(0.0, 1.0)).collect();
        snap(&mut g, discrete);
        pop.push(Individual { fitness: f(&g), genes: g });
    }
    while pop.len() < cfg.s_pop {
        let mut g: Vec<f64> = (0..dims).map(|_| rng.random()).collect();
        snap(&mut g, discrete);
        pop.push(Individual { fitness: f(&g), genes: g });
    }
    let mut elites = Elites { members: Vec::new(), pt: cfg.pt, capacity: (2 * cfg.s_top).max(1) };
    let mut order: Vec<&Individual> = pop.iter().collect();
    order.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
    for ind in order {
        elites.offer(ind);
    }

    let n = pop.len();
    let mut replacements = Vec::new();
    for gen in 0..cfg.n_gen {
        for xi in 0..n {
            let use_elites = cfg.elite_prob > 0.0 && rng.random::<f64>() < cfg.elite_prob && elites.members.len() >= 2;
            let ai = pick_distinct(&mut rng, n, &[xi]);
            let (b, c) = if use_elites {
                let m = elites.members.len();
                let bi = rng.random_range(0..m);
                let ci = pick_distinct(&mut rng, m, &[bi]);
                (elites.members[bi].genes.clone(), elites.members[ci].genes.clone())
            } else {
                let bi = pick_distinct(&mut rng, n, &[xi, ai]);
                let ci = pick_distinct(&mut rng, n, &[xi, ai, bi]);
                (pop[bi].genes.clone(), pop[ci].genes.clone())
            };
            let a = &pop[ai].genes;
            let x = &pop[xi].genes;
            let jrand = rng.random_range(0..dims);
            let mut trial: Vec<f64> = (0..dims)
                .map(|j| {
                    let r: f64 = rng.random();
                    if r < cfg.cr || j == jrand {
                        (a[j] + cfg.mf * (b[j] - c[j])).clamp(0.0, 1.0)
                    } else {
                        x[j]
                    }
                })
                .collect();
            snap(&mut trial, discrete);

            let d_min = pop
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != xi)
                .map(|(_, p)| &p.genes)
                .chain(elites.members.iter().map(|e| &e.genes).filter(|g| *g != x))
                .map(|g| distance(g, &trial))
                .fold(f64::INFINITY, f64::min);
            let fb = f(&trial);
            let fp = penalized(fb, d_min, cfg.pt, cfg.pf);
            // Every trial competes for the elites on its unpenalized value.
            elites.offer(&Individual { genes: trial.clone(), fitness: fb });
            if fp < pop[xi].fitness {
                pop[xi] = Individual { genes: trial, fitness: fp };
                replacements.push((gen, xi));
            }
        }
    }

    let candidates = select_diverse(&elites.members, cfg.s_top, cfg.pt);
    Ok(DeOutcome { candidates, population: pop, replacements })
}

/// Up to `k` members in fitness order, each at least `pt` from those
/// already taken.
pub fn select_diverse(pool: &[Individual], k: usize, pt: f64) -> Vec<Individual> {
    let mut sorted: Vec<&Individual> = pool.iter().collect();
    sorted.sort_by(|a, b| a.fitness.total_cmp(&b.fitness));
    let mut out: Vec<Individual> = Vec::with_capacity(k);
    for ind in sorted {
        if out.len() == k {
            break;
        }
        if out.iter().all(|o| distance(&o.genes, &ind.genes) >= pt) {
            out.push(ind.clone());
        }
    }
    if out.len() < k {
        warn!("only {} of {k} candidates are at least {pt} apart", out.len());
    }
    out
}
