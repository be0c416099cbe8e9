//! Browser bindings. Every export takes and returns JSON text so the page
//! needs no generated TypeScript types.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use likesense::experiments::{
    generate_synthetic, run_comparison, run_threshold_sweep, ExperimentFeatures, SweepMode, SyntheticSpec,
};
use likesense::features::{build_feature_space, build_matrix, vectorize_for_prediction, Taxonomy};
use likesense::models::{fit, Algorithm, AlgorithmConfig};
use likesense::sampling::SplitSpec;
use likesense::{CategoryPath, Trait};

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DemoRequest {
    pub data: SyntheticSpec,
    pub algorithms: Vec<AlgorithmConfig>,
    pub features: ExperimentFeatures,
    pub split: SplitSpec,
    pub thresholds: Vec<u64>,
    /// `None` sweeps with the maximal training set.
    pub fixed_train: Option<usize>,
    /// Like counts keyed by `category/subcategory`.
    pub likes: BTreeMap<String, u64>,
}

impl Default for DemoRequest {
    fn default() -> Self {
        Self {
            data: SyntheticSpec { n_users: 800, n_categories: 12, ..Default::default() },
            algorithms: Algorithm::REGRESSORS.iter().map(|a| a.default_config()).collect(),
            features: ExperimentFeatures::default(),
            split: SplitSpec::default(),
            thresholds: vec![10, 25, 50, 100, 200],
            fixed_train: None,
            likes: BTreeMap::new(),
        }
    }
}

fn parse(request: &str) -> Result<DemoRequest, String> {
    if request.trim().is_empty() {
        return Ok(DemoRequest::default());
    }
    serde_json::from_str(request).map_err(|e| format!("bad request: {e}"))
}

fn to_json<T: Serialize>(v: &T) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// Per-trait test RMSE of every requested algorithm on a synthetic dataset.
pub fn compare(request: &str) -> Result<String, String> {
    let r = parse(request)?;
    let data = generate_synthetic(&r.data).map_err(|e| e.to_string())?;
    let reports =
        run_comparison(&data.dataset, &r.algorithms, &r.split, &r.features, &Trait::ALL).map_err(|e| e.to_string())?;
    #[derive(Serialize)]
    struct Out<'a> {
        rows: &'a [likesense::eval::RegressionReport],
        oracle_rmse: &'a BTreeMap<Trait, f64>,
    }
    to_json(&Out { rows: &reports, oracle_rmse: &data.truth.oracle_rmse })
}

/// Test RMSE against the minimum-likes threshold.
pub fn sweep(request: &str) -> Result<String, String> {
    let r = parse(request)?;
    let data = generate_synthetic(&r.data).map_err(|e| e.to_string())?;
    let mode = r.fixed_train.map_or(SweepMode::MaxTrain, |size| SweepMode::FixedTrain { size });
    let result =
        run_threshold_sweep(&data.dataset, &r.thresholds, mode, &r.algorithms, &r.split, &r.features, &Trait::ALL)
            .map_err(|e| e.to_string())?;
    to_json(&result)
}

fn parse_path(key: &str) -> Result<CategoryPath, String> {
    let (c, s) = match key.split_once('/') {
        Some((c, s)) => (c, Some(s.to_string()).filter(|s| !s.is_empty())),
        None => (key, None),
    };
    CategoryPath::new(c, s).map_err(|e| e.to_string())
}

/// Trains the first requested algorithm for every trait on the synthetic
/// data and predicts the profile of `likes`.
pub fn predict(request: &str) -> Result<String, String> {
    let r = parse(request)?;
    let config = r.algorithms.first().ok_or("no algorithm requested")?;
    let data = generate_synthetic(&r.data).map_err(|e| e.to_string())?;
    let space = build_feature_space(&data.dataset).map_err(|e| e.to_string())?;
    let matrix =
        build_matrix(&data.dataset, &space, r.features.min_likes, r.features.mode).map_err(|e| e.to_string())?;
    let counts = r.likes.iter().map(|(k, &v)| Ok((parse_path(k)?, v))).collect::<Result<BTreeMap<_, _>, String>>()?;
    let x = vectorize_for_prediction(&counts, &space, r.features.mode).map_err(|e| e.to_string())?;
    let mut out = BTreeMap::new();
    for t in Trait::ALL {
        let model = fit(&matrix, t, config, Taxonomy::Both).map_err(|e| e.to_string())?;
        out.insert(t, model.predict(&x).map_err(|e| e.to_string())?);
    }
    to_json(&out)
}

/// Category keys of the synthetic taxonomy, for building the like form.
pub fn categories(request: &str) -> Result<String, String> {
    let r = parse(request)?;
    let keys: Vec<String> = (0..r.data.n_categories).map(|c| r.data.category_path(c).to_string()).collect();
    to_json(&keys)
}

#[wasm_bindgen]
pub fn compare_algorithms(request: &str) -> Result<String, JsValue> {
    compare(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn threshold_sweep(request: &str) -> Result<String, JsValue> {
    sweep(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn predict_profile(request: &str) -> Result<String, JsValue> {
    predict(request).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn category_keys(request: &str) -> Result<String, JsValue> {
    categories(request).map_err(|e| JsValue::from_str(&e))
}
