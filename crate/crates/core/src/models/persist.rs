//! Versioned JSON model documents (`*.model.json`).
//!
//! ```json
//! {"format_version": 1, "kind": "linear", "trait": "ope",
//!  "feature_space": [...], "features": {...},
//!  "hyperparameters": {...}, "parameters": {...}}
//! ```
//!
//! A bundle holds one document per trait:
//! `{"format_version": 1, "kind": "bundle", "models": [...]}`.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{
    Algorithm, AlgorithmConfig, BoostedTreesModel, FeatureSettings, ForestClassifier, KnnModel, LinearModel, MlpModel,
    Model, TrainedModel,
};
use crate::error::{Error, Result};
use crate::types::{FeatureSpace, Trait};

pub const FORMAT_VERSION: u64 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    format_version: u64,
    kind: Algorithm,
    #[serde(rename = "trait")]
    target: Trait,
    feature_space: FeatureSpace,
    features: FeatureSettings,
    hyperparameters: AlgorithmConfig,
    parameters: Value,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleDocument {
    format_version: u64,
    kind: String,
    models: Vec<Value>,
}

/// One model per trait, applied together.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub models: Vec<TrainedModel>,
}

fn corrupt(e: impl std::fmt::Display) -> Error {
    Error::CorruptDocument(e.to_string())
}

fn to_document(m: &TrainedModel) -> Result<Document> {
    let parameters = match &m.model {
        Model::Linear(p) => serde_json::to_value(p)?,
        Model::BoostedTrees(p) => serde_json::to_value(p)?,
        Model::Knn(p) => serde_json::to_value(p)?,
        Model::Mlp(p) => serde_json::to_value(p)?,
        Model::Forest(p) => serde_json::to_value(p)?,
    };
    Ok(Document {
        format_version: FORMAT_VERSION,
        kind: m.algorithm(),
        target: m.target,
        feature_space: m.feature_space.clone(),
        features: m.features,
        hyperparameters: m.hyperparameters,
        parameters,
    })
}

fn check_version(v: &Value) -> Result<()> {
    match v.get("format_version").and_then(Value::as_u64) {
        Some(FORMAT_VERSION) => Ok(()),
        Some(other) => Err(Error::UnsupportedVersion(other)),
        None => Err(corrupt("missing or non-integer format_version")),
    }
}

fn from_value(v: Value) -> Result<TrainedModel> {
    check_version(&v)?;
    let doc: Document = serde_json::from_value(v).map_err(corrupt)?;
    if doc.hyperparameters.algorithm() != doc.kind {
        return Err(corrupt("hyperparameters do not match the model kind"));
    }
    let dim = doc.feature_space.dim();
    let p = doc.parameters;
    let model = match doc.kind {
        Algorithm::Linear => {
            let m: LinearModel = serde_json::from_value(p).map_err(corrupt)?;
            let ok =
                m.coefficients.len() == dim && m.intercept.is_finite() && m.coefficients.iter().all(|c| c.is_finite());
            ok.then_some(Model::Linear(m))
        }
        Algorithm::BoostedTrees => {
            let m: BoostedTreesModel = serde_json::from_value(p).map_err(corrupt)?;
            let ok =
                m.base_prediction.is_finite() && m.learning_rate.is_finite() && m.trees.iter().all(|t| t.validate(dim));
            ok.then_some(Model::BoostedTrees(m))
        }
        Algorithm::Knn => {
            let m: KnnModel = serde_json::from_value(p).map_err(corrupt)?;
            let ok = m.rows.len() == m.targets.len() && m.rows.iter().all(|r| r.len() == dim);
            if ok {
                Some(Model::Knn(m.restore().map_err(corrupt)?))
            } else {
                None
            }
        }
        Algorithm::Mlp => {
            let m: MlpModel = serde_json::from_value(p).map_err(corrupt)?;
            (m.dim == dim && m.validate()).then_some(Model::Mlp(m))
        }
        Algorithm::Forest => {
            let m: ForestClassifier = serde_json::from_value(p).map_err(corrupt)?;
            m.validate(dim).then_some(Model::Forest(m))
        }
    }
    .ok_or_else(|| corrupt(format!("{} parameters inconsistent with a {dim}-dimensional feature space", doc.kind)))?;

    Ok(TrainedModel {
        target: doc.target,
        feature_space: doc.feature_space,
        features: doc.features,
        hyperparameters: doc.hyperparameters,
        model,
    })
}

pub fn save_model(m: &TrainedModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&to_document(m)?)? + "\n")
}

pub fn load_model(text: &str) -> Result<TrainedModel> {
    let v: Value = serde_json::from_str(text).map_err(corrupt)?;
    if v.get("kind").and_then(Value::as_str) == Some("bundle") {
        return Err(corrupt("document is a model bundle"));
    }
    from_value(v)
}

pub fn save_model_file(m: &TrainedModel, path: &Path) -> Result<()> {
    std::fs::write(path, save_model(m)?)?;
    Ok(())
}

pub fn load_model_file(path: &Path) -> Result<TrainedModel> {
    load_model(&std::fs::read_to_string(path)?)
}

impl ModelBundle {
    pub fn save(&self) -> Result<String> {
        let models =
            self.models.iter().map(|m| Ok(serde_json::to_value(to_document(m)?)?)).collect::<Result<Vec<_>>>()?;
        let doc = BundleDocument { format_version: FORMAT_VERSION, kind: "bundle".into(), models };
        Ok(serde_json::to_string_pretty(&doc)? + "\n")
    }

    /// Reads either a bundle or a single-model document.
    pub fn load(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(corrupt)?;
        check_version(&v)?;
        if v.get("kind").and_then(Value::as_str) != Some("bundle") {
            return Ok(Self { models: vec![from_value(v)?] });
        }
        let doc: BundleDocument = serde_json::from_value(v).map_err(corrupt)?;
        let models = doc.models.into_iter().map(from_value).collect::<Result<Vec<_>>>()?;
        if models.is_empty() {
            return Err(corrupt("bundle holds no models"));
        }
        Ok(Self { models })
    }

    pub fn get(&self, t: Trait) -> Option<&TrainedModel> {
        self.models.iter().find(|m| m.target == t)
    }
}
