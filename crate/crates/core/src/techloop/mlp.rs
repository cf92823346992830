// SPDX-License-Identifier: Apache-2.0

//! Small fully connected regressor: sigmoid hidden layers, linear output,
//! squared-error loss with an L2 weight penalty, trained with Adam.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpConfig {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub l2: f64,
    pub validation_split: f64,
    /// With `backtrack`, an epoch that raises the full training loss is
    /// undone and the step size multiplied by `lr_shrink`; accepted epochs
    /// grow it by `lr_grow` up to `learning_rate`.
    pub backtrack: bool,
    pub lr_shrink: f64,
    pub lr_grow: f64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden: vec![16, 8],
            learning_rate: 0.02,
            epochs: 1500,
            batch_size: 16,
            l2: 1e-4,
            validation_split: 0.2,
            backtrack: true,
            lr_shrink: 0.9,
            lr_grow: 1.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Layer {
    n_in: usize,
    n_out: usize,
    /// Row-major `n_out x n_in`.
    w: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Layer>,
    /// Targets are standardized internally.
    y_mean: f64,
    y_std: f64,
    /// Inputs are standardized per feature as well.
    #[serde(default)]
    x_mean: Vec<f64>,
    #[serde(default)]
    x_std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub train_r2: f64,
    pub validation_r2: f64,
    /// Full training loss after each epoch.
    pub epoch_loss: Vec<f64>,
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl Mlp {
    /// Random network with Xavier-uniform weights and zero biases.
    pub fn new(n_in: usize, hidden: &[usize], rng: &mut impl Rng) -> Self {
        let mut sizes = vec![n_in];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|s| {
                let lim = (6.0 / (s[0] + s[1]) as f64).sqrt();
                Layer {
                    n_in: s[0],
                    n_out: s[1],
                    w: (0..s[0] * s[1]).map(|_| rng.random_range(-lim..lim)).collect(),
                    b: vec![0.0; s[1]],
                }
            })
            .collect();
        Self { layers, y_mean: 0.0, y_std: 1.0, x_mean: vec![0.0; n_in], x_std: vec![1.0; n_in] }
    }

    pub fn n_inputs(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// All weights and biases, layer by layer.
    pub fn params(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.w.iter().chain(&l.b).copied()).collect()
    }

    pub fn set_params(&mut self, p: &[f64]) {
        let mut i = 0;
        for l in &mut self.layers {
            for v in l.w.iter_mut().chain(l.b.iter_mut()) {
                *v = p[i];
                i += 1;
            }
        }
    }

    /// Output in standardized target units, with every layer's activations.
    fn forward(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = vec![x.iter().zip(&self.x_mean).zip(&self.x_std).map(|((v, m), s)| (v - m) / s).collect()];
        let last = self.layers.len() - 1;
        for (li, l) in self.layers.iter().enumerate() {
            let a = &acts[li];
            let z: Vec<f64> = (0..l.n_out)
                .map(|o| l.b[o] + l.w[o * l.n_in..(o + 1) * l.n_in].iter().zip(a).map(|(w, x)| w * x).sum::<f64>())
                .collect();
            acts.push(if li == last { z } else { z.into_iter().map(sigmoid).collect() });
        }
        acts
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let out = self.forward(x).pop().expect("output layer")[0];
        out * self.y_std + self.y_mean
    }

    /// Mean squared error on standardized targets plus `l2` times the sum
    /// of squared weights, and its gradient in [`Mlp::params`] order.
    pub fn loss_and_grad(&self, xs: &[Vec<f64>], ys: &[f64], l2: f64) -> (f64, Vec<f64>) {
        let n = xs.len() as f64;
        let mut grads: Vec<(Vec<f64>, Vec<f64>)> =
            self.layers.iter().map(|l| (vec![0.0; l.w.len()], vec![0.0; l.b.len()])).collect();
        let mut loss = 0.0;
        let last = self.layers.len() - 1;
        for (x, &y) in xs.iter().zip(ys) {
            let acts = self.forward(x);
            let t = (y - self.y_mean) / self.y_std;
            let err = acts[last + 1][0] - t;
            loss += err * err / n;
            let mut delta = vec![2.0 * err / n];
            for li in (0..=last).rev() {
                let l = &self.layers[li];
                let a = &acts[li];
                let (gw, gb) = &mut grads[li];
                for o in 0..l.n_out {
                    gb[o] += delta[o];
                    for i in 0..l.n_in {
                        gw[o * l.n_in + i] += delta[o] * a[i];
                    }
                }
                if li > 0 {
                    // Back through the sigmoid of the previous layer.
                    delta = (0..l.n_in)
                        .map(|i| {
                            let s: f64 = (0..l.n_out).map(|o| l.w[o * l.n_in + i] * delta[o]).sum();
                            s * a[i] * (1.0 - a[i])
                        })
                        .collect();
                }
            }
        }
        for (l, (gw, _)) in self.layers.iter().zip(grads.iter_mut()) {
            for (g, w) in gw.iter_mut().zip(&l.w) {
                loss += l2 * w * w;
                *g += 2.0 * l2 * w;
            }
        }
        let flat = grads.into_iter().flat_map(|(w, b)| w.into_iter().chain(b)).collect();
        (loss, flat)
    }
}

/// Coefficient of determination; 1 when the targets have no spread and
/// are matched exactly.
pub fn r_squared(pred: &[f64], y: &[f64]) -> f64 {
    if y.is_empty() {
        return 1.0;
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let ss_tot: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let ss_res: f64 = pred.iter().zip(y).map(|(p, v)| (p - v) * (p - v)).sum();
    if ss_tot <= 1e-300 {
        return if ss_res <= 1e-18 * y.len() as f64 { 1.0 } else { 0.0 };
    }
    1.0 - ss_res / ss_tot
}

/// Trains on a seeded split of `(x, y)` and reports R^2 on both parts.
pub fn train_mlp(x: &[Vec<f64>], y: &[f64], cfg: &MlpConfig, seed: u64) -> Result<(Mlp, TrainReport)> {
    if x.len() != y.len() {
        return Err(invalid(format!("{} inputs but {} targets", x.len(), y.len())));
    }
    if x.len() < 8 {
        return Err(Error::InsufficientData(format!("need at least 8 samples, got {}", x.len())));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) || x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
        return Err(invalid("training data must be finite with a fixed input width"));
    }
    if cfg.batch_size == 0
        || !(cfg.learning_rate > 0.0)
        || !(cfg.lr_shrink > 0.0 && cfg.lr_shrink < 1.0)
        || !(cfg.lr_grow >= 1.0)
    {
        return Err(invalid("batch size and learning rate must be positive, lr_shrink in (0, 1) and lr_grow >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.shuffle(&mut rng);
    let n_val = ((x.len() as f64) * cfg.validation_split.clamp(0.0, 0.5)).round() as usize;
    let (val, train) = idx.split_at(n_val);
    let tx: Vec<Vec<f64>> = train.iter().map(|&i| x[i].clone()).collect();
    let ty: Vec<f64> = train.iter().map(|&i| y[i]).collect();

    let mut net = Mlp::new(d, &cfg.hidden, &mut rng);
    for j in 0..d {
        let col: Vec<f64> = tx.iter().map(|r| r[j]).collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / col.len() as f64).sqrt();
        net.x_mean[j] = mean;
        net.x_std[j] = if sd > 1e-12 { sd } else { 1.0 };
    }
    net.y_mean = ty.iter().sum::<f64>() / ty.len() as f64;
    let var = ty.iter().map(|v| (v - net.y_mean).powi(2)).sum::<f64>() / ty.len() as f64;
    if var > 1e-24 {
        net.y_std = var.sqrt();
    } else {
        // Constant targets: a zero output layer is already optimal and
        // gets no gradient.
        let out = net.layers.last_mut().expect("output layer");
        out.w.fill(0.0);
        out.b.fill(0.0);
    }

    let (b1, b2, eps): (f64, f64, f64) = (0.9, 0.999, 1e-8);
    let mut p = net.params();
    let mut m = vec![0.0; p.len()];
    let mut v = vec![0.0; p.len()];
    let mut step = 0i32;
    let mut lr = cfg.learning_rate;
    let mut order: Vec<usize> = (0..tx.len()).collect();
    let mut current = net.loss_and_grad(&tx, &ty, cfg.l2).0;
    let mut epoch_loss = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let saved = (p.clone(), m.clone(), v.clone(), step);
        order.shuffle(&mut rng);
        for chunk in order.chunks(cfg.batch_size) {
            let bx: Vec<Vec<f64>> = chunk.iter().map(|&i| tx[i].clone()).collect();
            let by: Vec<f64> = chunk.iter().map(|&i| ty[i]).collect();
            let (loss, g) = net.loss_and_grad(&bx, &by, cfg.l2);
            if !loss.is_finite() {
                return Err(Error::Divergence(format!(
                    "loss became non-finite at epoch {epoch}; reduce the learning rate"
                )));
            }
            step += 1;
            let c1 = 1.0 - b1.powi(step);
            let c2 = 1.0 - b2.powi(step);
            for k in 0..p.len() {
                m[k] = b1 * m[k] + (1.0 - b1) * g[k];
                v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
                p[k] -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + eps);
            }
            net.set_params(&p);
        }
        let after = net.loss_and_grad(&tx, &ty, cfg.l2).0;
        if !after.is_finite() {
            return Err(Error::Divergence(format!(
                "loss became non-finite at epoch {epoch}; reduce the learning rate"
            )));
        }
        if after <= current || !cfg.backtrack {
            current = after;
            lr = (lr * cfg.lr_grow).min(cfg.learning_rate);
        } else {
            // Epoch made the full objective worse: undo it and retry smaller.
            (p, m, v, step) = saved;
            net.set_params(&p);
            lr *= cfg.lr_shrink;
        }
        epoch_loss.push(current);
    }

    let r2 = |rows: &[usize]| {
        let pred: Vec<f64> = rows.iter().map(|&i| net.predict(&x[i])).collect();
        let truth: Vec<f64> = rows.iter().map(|&i| y[i]).collect();
        r_squared(&pred, &truth)
    };
    let report = TrainReport { train_r2: r2(train), validation_r2: r2(val), epoch_loss };
    Ok((net, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_targets_are_reproduced() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 / 12.0, 0.5]).collect();
        let y = vec![2.5; 12];
        let cfg = MlpConfig::default();
        let (net, rep) = train_mlp(&x, &y, &cfg, 1).unwrap();
        assert_eq!(net.predict(&[0.3, 0.2]), 2.5);
        assert_eq!(rep.validation_r2, r_squared(&[2.5; 2], &[2.5; 2]));
    }

    #[test]
    fn too_few_samples() {
        let x = vec![vec![0.0]; 5];
        let err = train_mlp(&x, &[0.0; 5], &MlpConfig::default(), 0).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
    }

    #[test]
    fn huge_learning_rate_reports_divergence() {
        let x: Vec<Vec<f64>> = (0..16).map(|i| vec![i as f64 / 16.0]).collect();
        let y: Vec<f64> = (0..16).map(|i| (i % 5) as f64).collect();
        let cfg = MlpConfig { epochs: 5, learning_rate: 1e200, ..MlpConfig::default() };
        let err = train_mlp(&x, &y, &cfg, 0).unwrap_err();
        assert!(matches!(err, Error::Divergence(_)), "{err}");
    }
}
