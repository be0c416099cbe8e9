//! JSON experiment configs and their on-disk outputs.
//!
//! ```json
//! {"data": {"synthetic": {"n_users": 2000, "n_categories": 20, "seed": 1}},
//!  "features": {"mode": "relative", "taxonomy": "both", "min_likes": 1},
//!  "split": {"test_fraction": 0.2, "method": "random"},
//!  "algorithms": [{"name": "linear"}, {"name": "knn", "k": 12}],
//!  "experiment": {"kind": "comparison"},
//!  "seed": 7}
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::protocols::{run_comparison, run_threshold_sweep, ExperimentFeatures, SweepMode, SweepResult};
use super::synthetic::{generate_synthetic, SyntheticSpec};
use crate::error::{Error, Result};
use crate::eval::{reports_to_csv, RegressionReport};
use crate::ingest::{load_data_dir, ResolverPolicy};
use crate::models::{Algorithm, AlgorithmConfig};
use crate::rng::RNG_ID;
use crate::sampling::SplitSpec;
use crate::types::{Dataset, Trait};

pub const COMPARISON_FILE: &str = "comparison.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const RUN_META_FILE: &str = "run_meta.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Directory holding the three ingest CSVs; relative to the config file.
    Dir(PathBuf),
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentKind {
    Comparison,
    Sweep { thresholds: Vec<u64>, mode: SweepMode },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub data: DataSource,
    #[serde(default)]
    pub features: ExperimentFeatures,
    #[serde(default)]
    pub split: SplitSpec,
    pub algorithms: Vec<AlgorithmConfig>,
    /// All five when absent.
    #[serde(default)]
    pub traits: Option<Vec<Trait>>,
    pub experiment: ExperimentKind,
    /// Overrides the split, generator and model seeds when set.
    #[serde(default)]
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("algorithms must not be empty".into()));
        }
        if self.algorithms.iter().any(|a| a.algorithm() == Algorithm::Forest) {
            return Err(Error::InvalidConfig("experiments compare regressors; forest is not one".into()));
        }
        if matches!(&self.traits, Some(t) if t.is_empty()) {
            return Err(Error::InvalidConfig("traits must not be empty".into()));
        }
        self.split.validate().map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if let ExperimentKind::Sweep { thresholds, .. } = &self.experiment {
            if thresholds.is_empty() || thresholds.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidConfig("thresholds must be non-empty and strictly ascending".into()));
            }
        }
        Ok(())
    }

    /// The config with `seed` pushed into every seeded component.
    pub fn resolved(&self) -> Self {
        let mut c = self.clone();
        if let Some(seed) = c.seed {
            c.split.seed = seed;
            if let DataSource::Synthetic(s) = &mut c.data {
                s.seed = seed;
            }
            c.algorithms = c.algorithms.iter().map(|a| a.with_seed(seed)).collect();
        }
        c
    }

    pub fn traits(&self) -> Vec<Trait> {
        self.traits.clone().unwrap_or_else(|| Trait::ALL.to_vec())
    }
}

/// Seeds, RNG and config digest of a run. Contains no timestamps so that
/// reruns are byte-identical.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub seed: Option<u64>,
    pub split_seed: u64,
    pub data_seed: Option<u64>,
    pub rng: String,
    /// SHA-256 of the config file bytes.
    pub config_sha256: String,
    pub n_users: usize,
    pub outputs: Vec<String>,
}

pub enum ExperimentOutput {
    Comparison(Vec<RegressionReport>),
    Sweep(SweepResult),
}

impl ExperimentOutput {
    pub fn file_name(&self) -> &'static str {
        match self {
            ExperimentOutput::Comparison(_) => COMPARISON_FILE,
            ExperimentOutput::Sweep(_) => SWEEP_FILE,
        }
    }

    pub fn to_csv(&self) -> String {
        match self {
            ExperimentOutput::Comparison(r) => reports_to_csv(r),
            ExperimentOutput::Sweep(s) => s.to_csv(),
        }
    }
}

pub fn load_dataset(source: &DataSource, base: &Path) -> Result<Dataset> {
    match source {
        DataSource::Dir(dir) => Ok(load_data_dir(&base.join(dir), &ResolverPolicy::Drop)?.0),
        DataSource::Synthetic(spec) => Ok(generate_synthetic(spec)?.dataset),
    }
}

/// Runs a resolved config against an already loaded dataset.
pub fn run_on_dataset(config: &ExperimentConfig, dataset: &Dataset) -> Result<ExperimentOutput> {
    let traits = config.traits();
    Ok(match &config.experiment {
        ExperimentKind::Comparison => ExperimentOutput::Comparison(run_comparison(
            dataset,
            &config.algorithms,
            &config.split,
            &config.features,
            &traits,
        )?),
        ExperimentKind::Sweep { thresholds, mode } => ExperimentOutput::Sweep(run_threshold_sweep(
            dataset,
            thresholds,
            *mode,
            &config.algorithms,
            &config.split,
            &config.features,
            &traits,
        )?),
    })
}

/// Reads the config at `config_path`, runs it and writes the result CSV and
/// `run_meta.json` into `out_dir`. A `seed` argument replaces the config's
/// seed. Returns the written paths.
pub fn run_experiment_file(config_path: &Path, out_dir: &Path, seed: Option<u64>) -> Result<Vec<PathBuf>> {
    let bytes = std::fs::read(config_path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| Error::InvalidConfig(e.to_string()))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    if seed.is_some() {
        config.seed = seed;
    }
    let config = config.resolved();
    let base = config_path.parent().unwrap_or(Path::new("."));
    let dataset = load_dataset(&config.data, base)?;
    let output = run_on_dataset(&config, &dataset)?;

    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join(output.file_name());
    std::fs::write(&csv_path, output.to_csv())?;
    let meta = RunMeta {
        seed: config.seed,
        split_seed: config.split.seed,
        data_seed: match &config.data {
            DataSource::Synthetic(s) => Some(s.seed),
            DataSource::Dir(_) => None,
        },
        rng: RNG_ID.to_string(),
        config_sha256: hex::encode(Sha256::digest(&bytes)),
        n_users: dataset.len(),
        outputs: vec![output.file_name().to_string()],
    };
    let meta_path = out_dir.join(RUN_META_FILE);
    std::fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(vec![csv_path, meta_path])
}
