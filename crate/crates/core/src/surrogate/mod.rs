// SPDX-License-Identifier: Apache-2.0

//! Probabilistic random forest: one bagged forest per objective whose
//! per-tree spread gives a Gaussian predictive variance.

pub mod encode;
pub mod forest;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pareto::{GaussianPosterior, ObjectiveVector};

pub use encode::{config_feature_names, encode_config, encode_tech, CONFIG_FEATURES};
pub use forest::{Forest, Node, RegressionTree, TreeParams};

pub const PRF_FORMAT: &str = "orthrus-prf";
pub const PRF_VERSION: u32 = 1;

/// Default number of trees per objective.
pub const DEFAULT_TREES: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrfModel {
    /// Delay, power and area forests.
    pub forests: Vec<Forest>,
    pub params: TreeParams,
    pub feature_names: Vec<String>,
}

impl PrfModel {
    pub fn fit(x: &[Vec<f64>], y: &[ObjectiveVector], b: usize, seed: u64) -> Result<Self> {
        Self::fit_with(x, y, b, &TreeParams::default(), seed)
    }

    pub fn fit_with(x: &[Vec<f64>], y: &[ObjectiveVector], b: usize, params: &TreeParams, seed: u64) -> Result<Self> {
        if x.len() != y.len() {
            return Err(invalid(format!("{} feature rows but {} targets", x.len(), y.len())));
        }
        let forests = (0..3)
            .map(|k| {
                let t: Vec<f64> = y.iter().map(|v| v.to_array()[k]).collect();
                Forest::fit(x, &t, b, params, seed.wrapping_add(k as u64 * 0x9E37_79B9))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { forests, params: *params, feature_names: Vec::new() })
    }

    pub fn n_features(&self) -> usize {
        self.forests[0].n_features
    }

    pub fn n_trees(&self) -> usize {
        self.forests[0].trees.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<GaussianPosterior> {
        let mut mean = [0.0; 3];
        let mut variance = [0.0; 3];
        for (k, f) in self.forests.iter().enumerate() {
            (mean[k], variance[k]) = f.predict(x)?;
        }
        GaussianPosterior::new(mean, variance)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = PrfDoc { format: PRF_FORMAT.into(), version: PRF_VERSION, model: self.clone() };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: PrfDoc = serde_json::from_str(text)?;
        if doc.format != PRF_FORMAT || doc.version != PRF_VERSION {
            return Err(Error::Parse(format!("unsupported model document {} v{}", doc.format, doc.version)));
        }
        if doc.model.forests.len() != 3 {
            return Err(Error::Parse("model must hold three forests".into()));
        }
        Ok(doc.model)
    }
}

#[derive(Serialize, Deserialize)]
struct PrfDoc {
    format: String,
    version: u32,
    #[serde(flatten)]
    model: PrfModel,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_trees_mean_and_variance() {
        let forest = |a: f64, b: f64| Forest {
            trees: vec![
                RegressionTree { nodes: vec![Node::Leaf { value: a }] },
                RegressionTree { nodes: vec![Node::Leaf { value: b }] },
            ],
            n_features: 1,
        };
        let m = PrfModel {
            forests: vec![forest(1.0, 3.0), forest(2.0, 2.0), forest(0.0, 4.0)],
            params: TreeParams::default(),
            feature_names: Vec::new(),
        };
        let p = m.predict(&[0.0]).unwrap();
        assert_eq!(p.mean, [2.0, 2.0, 2.0]);
        assert_eq!(p.variance, [1.0, 0.0, 4.0]);
        assert!(m.predict(&[0.0, 1.0]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let y: Vec<ObjectiveVector> = (0..12).map(|i| ObjectiveVector::new(i as f64, 1.0, (i % 4) as f64)).collect();
        let m = PrfModel::fit(&x, &y, 5, 2).unwrap();
        let back = PrfModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
