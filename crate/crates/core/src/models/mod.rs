//! The four trait regressors, the random-forest class baseline, clipping and
//! the versioned model document.

pub mod boosting;
pub mod forest;
pub mod knn;
pub mod linear;
pub mod mlp;
mod persist;
pub mod tree;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use boosting::{fit_boosted_trees, BoostConfig, BoostedTreesModel};
pub use forest::{fit_forest_classifier, ForestClassifier, ForestConfig};
pub use knn::{fit_knn, knn_distance, KnnConfig, KnnModel};
pub use linear::{fit_linear, LinearModel};
pub use mlp::{fit_mlp, MlpConfig, MlpModel};
pub use persist::{load_model, load_model_file, save_model, save_model_file, ModelBundle, FORMAT_VERSION};

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FeatureMode, Taxonomy};
use crate::types::{clamp_score, FeatureSpace, FeatureVector, Trait};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Linear,
    BoostedTrees,
    Knn,
    Mlp,
    Forest,
}

impl Algorithm {
    /// The four regressors, in reporting order.
    pub const REGRESSORS: [Algorithm; 4] = [Algorithm::BoostedTrees, Algorithm::Linear, Algorithm::Knn, Algorithm::Mlp];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Linear => "linear",
            Algorithm::BoostedTrees => "boosted_trees",
            Algorithm::Knn => "knn",
            Algorithm::Mlp => "mlp",
            Algorithm::Forest => "forest",
        }
    }

    pub fn default_config(self) -> AlgorithmConfig {
        match self {
            Algorithm::Linear => AlgorithmConfig::Linear,
            Algorithm::BoostedTrees => AlgorithmConfig::BoostedTrees(BoostConfig::default()),
            Algorithm::Knn => AlgorithmConfig::Knn(KnnConfig::default()),
            Algorithm::Mlp => AlgorithmConfig::Mlp(MlpConfig::default()),
            Algorithm::Forest => AlgorithmConfig::Forest(ForestConfig::default()),
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Algorithm::Linear, Algorithm::BoostedTrees, Algorithm::Knn, Algorithm::Mlp, Algorithm::Forest]
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown algorithm {s:?}")))
    }
}

/// An algorithm together with its hyperparameters, e.g.
/// `{"name": "knn", "k": 12, "penalty": 0.1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum AlgorithmConfig {
    Linear,
    BoostedTrees(BoostConfig),
    Knn(KnnConfig),
    Mlp(MlpConfig),
    Forest(ForestConfig),
}

impl AlgorithmConfig {
    pub fn algorithm(&self) -> Algorithm {
        match self {
            AlgorithmConfig::Linear => Algorithm::Linear,
            AlgorithmConfig::BoostedTrees(_) => Algorithm::BoostedTrees,
            AlgorithmConfig::Knn(_) => Algorithm::Knn,
            AlgorithmConfig::Mlp(_) => Algorithm::Mlp,
            AlgorithmConfig::Forest(_) => Algorithm::Forest,
        }
    }

    /// Replaces the seed of the randomized algorithms.
    pub fn with_seed(mut self, seed: u64) -> Self {
        match &mut self {
            AlgorithmConfig::Mlp(c) => c.seed = seed,
            AlgorithmConfig::Forest(c) => c.seed = seed,
            _ => {}
        }
        self
    }
}

/// Fitted parameters of any model kind.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Linear(LinearModel),
    BoostedTrees(BoostedTreesModel),
    Knn(KnnModel),
    Mlp(MlpModel),
    Forest(ForestClassifier),
}

impl Model {
    /// Unclipped model output.
    pub fn predict_raw(&self, x: &[f64]) -> f64 {
        match self {
            Model::Linear(m) => m.predict_raw(x),
            Model::BoostedTrees(m) => m.predict_raw(x),
            Model::Knn(m) => m.predict_raw(x),
            Model::Mlp(m) => m.predict_raw(x),
            Model::Forest(m) => m.predict_raw(x),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            Model::Linear(_) => Algorithm::Linear,
            Model::BoostedTrees(_) => Algorithm::BoostedTrees,
            Model::Knn(_) => Algorithm::Knn,
            Model::Mlp(_) => Algorithm::Mlp,
            Model::Forest(_) => Algorithm::Forest,
        }
    }
}

/// How raw like counts were turned into the model's inputs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSettings {
    pub mode: FeatureMode,
    pub taxonomy: Taxonomy,
}

/// A fitted model for one trait plus everything needed to apply it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub target: Trait,
    pub feature_space: FeatureSpace,
    pub features: FeatureSettings,
    pub hyperparameters: AlgorithmConfig,
    pub model: Model,
}

impl TrainedModel {
    pub fn algorithm(&self) -> Algorithm {
        self.model.algorithm()
    }

    pub fn dim(&self) -> usize {
        self.feature_space.dim()
    }

    /// Clipped prediction for one feature row.
    pub fn predict(&self, x: &FeatureVector) -> Result<f64> {
        self.predict_slice(x.as_slice())
    }

    pub fn predict_slice(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(clamp_score(self.model.predict_raw(x)))
    }
}

/// Clipped prediction; the same clamp is applied to every model kind.
pub fn predict(model: &TrainedModel, x: &FeatureVector) -> Result<f64> {
    model.predict(x)
}

/// Fits `config` on `train` for one trait.
pub fn fit(train: &FeatureMatrix, target: Trait, config: &AlgorithmConfig, taxonomy: Taxonomy) -> Result<TrainedModel> {
    if train.is_empty() {
        return Err(Error::DegenerateInput("training matrix has no rows".into()));
    }
    let rows: Vec<&[f64]> = train.features().collect();
    let y = train.targets(target);
    let dim = train.dim();
    let model = match config {
        AlgorithmConfig::Linear => Model::Linear(fit_linear(&rows, &y, dim)?),
        AlgorithmConfig::BoostedTrees(c) => Model::BoostedTrees(fit_boosted_trees(&rows, &y, dim, c)?.model),
        AlgorithmConfig::Knn(c) => Model::Knn(fit_knn(&rows, &y, c)?),
        AlgorithmConfig::Mlp(c) => Model::Mlp(fit_mlp(&rows, &y, dim, c)?.model),
        AlgorithmConfig::Forest(c) => Model::Forest(fit_forest_classifier(&rows, &y, dim, c)?),
    };
    Ok(TrainedModel {
        target,
        feature_space: train.space.clone(),
        features: FeatureSettings { mode: train.mode, taxonomy },
        hyperparameters: *config,
        model,
    })
}
