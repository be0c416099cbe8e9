//! First-order gradient boosting with squared loss.
//!
//! Each round fits a regression tree to the current residuals and adds it
//! scaled by the learning rate. With leaf values equal to residual means this
//! never increases the training MSE.

use serde::{Deserialize, Serialize};

use super::tree::{Presorted, RegressionTree, TreeParams};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoostConfig {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_leaf: usize,
}

impl Default for BoostConfig {
    fn default() -> Self {
        Self { n_rounds: 100, learning_rate: 0.1, max_depth: 3, min_leaf: 5 }
    }
}

impl BoostConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidHyperparameter(format!("learning_rate {} not in (0, 1]", self.learning_rate)));
        }
        if self.min_leaf == 0 {
            return Err(Error::InvalidHyperparameter("min_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedTreesModel {
    pub base_prediction: f64,
    pub learning_rate: f64,
    pub trees: Vec<RegressionTree>,
}

impl BoostedTreesModel {
    pub fn predict_raw(&self, x: &[f64]) -> f64 {
        self.trees.iter().fold(self.base_prediction, |acc, t| acc + self.learning_rate * t.predict(x))
    }
}

/// Fitted model plus the training MSE before the first tree and after every
/// added tree.
pub struct BoostFit {
    pub model: BoostedTreesModel,
    pub train_mse: Vec<f64>,
}

fn mse(pred: &[f64], y: &[f64]) -> f64 {
    pred.iter().zip(y).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / y.len() as f64
}

pub fn fit_boosted_trees(rows: &[&[f64]], y: &[f64], dim: usize, config: &BoostConfig) -> Result<BoostFit> {
    config.validate()?;
    if rows.is_empty() {
        return Err(Error::DegenerateInput("no training rows".into()));
    }
    let base = y.iter().sum::<f64>() / y.len() as f64;
    let mut pred = vec![base; y.len()];
    let mut residual = vec![0.0; y.len()];
    let mut train_mse = vec![mse(&pred, y)];
    let presorted = Presorted::new(rows, dim);
    let params = TreeParams { max_depth: config.max_depth, min_leaf: config.min_leaf };
    let mut trees = Vec::with_capacity(config.n_rounds);

    for _ in 0..config.n_rounds {
        for ((r, t), p) in residual.iter_mut().zip(y).zip(&pred) {
            *r = t - p;
        }
        let tree = RegressionTree::fit(rows, &residual, &presorted, &params);
        // A single leaf holds the mean residual, which is already zero; every
        // later round would produce the same tree.
        if tree.is_stump_leaf() {
            break;
        }
        for (p, row) in pred.iter_mut().zip(rows) {
            *p += config.learning_rate * tree.predict(row);
        }
        train_mse.push(mse(&pred, y));
        trees.push(tree);
    }
    Ok(BoostFit {
        model: BoostedTreesModel { base_prediction: base, learning_rate: config.learning_rate, trees },
        train_mse,
    })
}
