//! Algorithm comparison and minimum-likes sweeps.

use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{evaluate, RegressionReport};
use crate::features::{build_feature_space, build_matrix, filter_min_likes, FeatureMatrix, FeatureMode, Taxonomy};
use crate::models::{fit, Algorithm, AlgorithmConfig};
use crate::sampling::{fixed_train_indices, split_indices, SplitSpec};
use crate::types::{Dataset, FeatureSpace, Trait};

/// Feature construction shared by every cell of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentFeatures {
    pub mode: FeatureMode,
    pub taxonomy: Taxonomy,
    /// Users with fewer likes are dropped before anything else.
    pub min_likes: u64,
}

impl Default for ExperimentFeatures {
    fn default() -> Self {
        Self { mode: FeatureMode::Relative, taxonomy: Taxonomy::Both, min_likes: 1 }
    }
}

/// The projected dataset and the feature space of its users passing
/// `min_likes`. Sweeps keep this space fixed across thresholds.
pub fn prepare(dataset: &Dataset, features: &ExperimentFeatures) -> Result<(Dataset, FeatureSpace)> {
    let projected = features.taxonomy.project_dataset(dataset);
    let space = build_feature_space(&filter_min_likes(&projected, features.min_likes))?;
    Ok((projected, space))
}

/// Runs `f` over `0..n` on a small worker pool; results keep index order.
fn run_cells<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let workers = std::thread::available_parallelism().map_or(1, |p| p.get()).min(n).max(1);
    if workers == 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let out = f(i);
                slots.lock().expect("worker panicked")[i] = Some(out);
            });
        }
    });
    slots.into_inner().expect("worker panicked").into_iter().map(|o| o.expect("cell ran")).collect()
}

fn fit_and_evaluate(
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    target: Trait,
    config: &AlgorithmConfig,
    taxonomy: Taxonomy,
) -> Result<RegressionReport> {
    let model = fit(train, target, config, taxonomy)?;
    evaluate(&model, test)
}

fn trait_split(split: &SplitSpec, target: Trait) -> SplitSpec {
    SplitSpec { strat_trait: target, ..*split }
}

/// One report per (trait, algorithm), ordered by trait then by the order of
/// `algorithms`. All algorithms of a trait share one split.
pub fn run_comparison(
    dataset: &Dataset,
    algorithms: &[AlgorithmConfig],
    split: &SplitSpec,
    features: &ExperimentFeatures,
    traits: &[Trait],
) -> Result<Vec<RegressionReport>> {
    split.validate()?;
    let (projected, space) = prepare(dataset, features)?;
    let matrix = build_matrix(&projected, &space, features.min_likes, features.mode)?;
    let splits = traits
        .iter()
        .map(|&t| Ok(split_indices(&matrix, &trait_split(split, t))?.apply(&matrix)))
        .collect::<Result<Vec<_>>>()?;
    let n_alg = algorithms.len();
    run_cells(traits.len() * n_alg, |cell| {
        let (ti, ai) = (cell / n_alg, cell % n_alg);
        let (train, test) = &splits[ti];
        fit_and_evaluate(train, test, traits[ti], &algorithms[ai], features.taxonomy)
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SweepMode {
    /// Every user passing the threshold is split with the standard split.
    MaxTrain,
    /// The test set is taken as in the standard split and the training set
    /// is capped at `size` users.
    FixedTrain { size: usize },
}

pub const SWEEP_CSV_HEADER: &str = "threshold,trait,algorithm,n_train,n_test,rmse,mae_pct,skipped";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: u64,
    #[serde(rename = "trait")]
    pub target: Trait,
    pub algorithm: Algorithm,
    pub n_train: usize,
    pub n_test: usize,
    /// `None` when the cell was skipped.
    pub rmse: Option<f64>,
    pub mae_pct: Option<f64>,
    /// Why the cell was skipped, if it was.
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub mode: SweepMode,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{SWEEP_CSV_HEADER}\n");
        for r in &self.rows {
            let num = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.threshold,
                r.target,
                r.algorithm,
                r.n_train,
                r.n_test,
                num(r.rmse),
                num(r.mae_pct),
                r.skipped.as_deref().unwrap_or("")
            );
        }
        out
    }

    /// Non-skipped rows of one (trait, algorithm) group, by threshold.
    pub fn series(&self, target: Trait, algorithm: Algorithm) -> Vec<&SweepRow> {
        self.rows.iter().filter(|r| r.target == target && r.algorithm == algorithm && r.skipped.is_none()).collect()
    }
}

/// Short marker recorded for a cell that had too little data.
fn skip_reason(e: &Error) -> Option<&'static str> {
    match e {
        Error::TooFewRows { .. } | Error::EmptyDataset | Error::EmptyInput | Error::DegenerateInput(_) => {
            Some("too_few_users")
        }
        Error::InsufficientRows { .. } => Some("insufficient_rows"),
        Error::KTooLarge { .. } => Some("k_too_large"),
        _ => None,
    }
}

/// Fits and evaluates every (threshold, trait, algorithm) cell. Rows are
/// ordered by threshold, then trait, then the order of `algorithms`.
pub fn run_threshold_sweep(
    dataset: &Dataset,
    thresholds: &[u64],
    mode: SweepMode,
    algorithms: &[AlgorithmConfig],
    split: &SplitSpec,
    features: &ExperimentFeatures,
    traits: &[Trait],
) -> Result<SweepResult> {
    split.validate()?;
    if thresholds.is_empty() || thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidConfig("thresholds must be non-empty and strictly ascending".into()));
    }
    let (projected, space) = prepare(dataset, features)?;

    // one split per (threshold, trait); a data shortfall skips the whole group
    let mut groups = Vec::with_capacity(thresholds.len() * traits.len());
    for &t in thresholds {
        let matrix = build_matrix(&projected, &space, t.max(features.min_likes), features.mode)?;
        for &target in traits {
            let s = trait_split(split, target);
            let indices = match mode {
                SweepMode::MaxTrain => split_indices(&matrix, &s),
                SweepMode::FixedTrain { size } => fixed_train_indices(matrix.len(), size, s.test_fraction, s.seed),
            };
            let data = match indices {
                Ok(ix) => Ok(ix.apply(&matrix)),
                Err(e) => Err(skip_reason(&e).ok_or(e)?),
            };
            groups.push((t, target, data));
        }
    }

    let n_alg = algorithms.len();
    let rows = run_cells(groups.len() * n_alg, |cell| {
        let (threshold, target, data) = &groups[cell / n_alg];
        let config = &algorithms[cell % n_alg];
        let mut row = SweepRow {
            threshold: *threshold,
            target: *target,
            algorithm: config.algorithm(),
            n_train: 0,
            n_test: 0,
            rmse: None,
            mae_pct: None,
            skipped: None,
        };
        let (train, test) = match data {
            Ok(d) => d,
            Err(reason) => {
                row.skipped = Some(reason.to_string());
                return Ok(row);
            }
        };
        row.n_train = train.len();
        row.n_test = test.len();
        match fit_and_evaluate(train, test, *target, config, features.taxonomy) {
            Ok(rep) => {
                row.rmse = Some(rep.rmse);
                row.mae_pct = Some(rep.mean_abs_pct_of_range);
                Ok(row)
            }
            Err(e) => match skip_reason(&e) {
                Some(reason) => {
                    row.skipped = Some(reason.to_string());
                    Ok(row)
                }
                None => Err(e),
            },
        }
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { mode, rows })
}

/// Least-squares slope of `y` against `x`.
pub fn trend_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}
