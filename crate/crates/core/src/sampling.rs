//! Train/test splitting.
//!
//! All sizes use round-half-to-even. Stratified buckets are equal-width bins
//! over the fixed `[1, 5]` trait scale with the top edge inclusive.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::rng;
use crate::types::{Trait, SCORE_MAX, SCORE_MIN};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMethod {
    #[default]
    Random,
    Stratified,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub test_fraction: f64,
    pub method: SplitMethod,
    pub strat_trait: Trait,
    pub n_buckets: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { test_fraction: 0.2, method: SplitMethod::Random, strat_trait: Trait::Ope, n_buckets: 8, seed: 0 }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidSplit(format!("test_fraction {} not in (0, 1)", self.test_fraction)));
        }
        if self.n_buckets == 0 {
            return Err(Error::InvalidSplit("n_buckets must be at least 1".into()));
        }
        Ok(())
    }
}

/// Row indices of a split, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl SplitIndices {
    fn sorted(mut train: Vec<usize>, mut test: Vec<usize>) -> Self {
        train.sort_unstable();
        test.sort_unstable();
        Self { train, test }
    }

    pub fn apply(&self, matrix: &FeatureMatrix) -> (FeatureMatrix, FeatureMatrix) {
        (matrix.subset(&self.train), matrix.subset(&self.test))
    }
}

pub fn round_count(x: f64) -> usize {
    x.round_ties_even() as usize
}

/// Stratification bucket of a trait score.
pub fn bucket_of(score: f64, n_buckets: usize) -> usize {
    let width = (SCORE_MAX - SCORE_MIN) / n_buckets as f64;
    let b = ((score - SCORE_MIN) / width).floor();
    if b <= 0.0 {
        0
    } else {
        (b as usize).min(n_buckets - 1)
    }
}

fn ensure_rows(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::TooFewRows { needed: 2, have: n });
    }
    Ok(())
}

/// Seeded uniform permutation of `0..n`; the split depends on nothing else.
fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng::seeded(seed));
    idx
}

pub fn random_indices(n: usize, test_fraction: f64, seed: u64) -> Result<SplitIndices> {
    ensure_rows(n)?;
    let perm = permutation(n, seed);
    let n_test = round_count(n as f64 * test_fraction);
    Ok(SplitIndices::sorted(perm[n_test..].to_vec(), perm[..n_test].to_vec()))
}

pub fn stratified_indices(scores: &[f64], spec: &SplitSpec) -> Result<SplitIndices> {
    ensure_rows(scores.len())?;
    let mut buckets = vec![Vec::new(); spec.n_buckets];
    for (i, &s) in scores.iter().enumerate() {
        buckets[bucket_of(s, spec.n_buckets)].push(i);
    }
    let mut r = rng::seeded(spec.seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for mut bucket in buckets {
        bucket.shuffle(&mut r);
        let n_test = round_count(bucket.len() as f64 * spec.test_fraction);
        test.extend_from_slice(&bucket[..n_test]);
        train.extend_from_slice(&bucket[n_test..]);
    }
    Ok(SplitIndices::sorted(train, test))
}

/// Split indices for `matrix` according to `spec.method`.
pub fn split_indices(matrix: &FeatureMatrix, spec: &SplitSpec) -> Result<SplitIndices> {
    spec.validate()?;
    match spec.method {
        SplitMethod::Random => random_indices(matrix.len(), spec.test_fraction, spec.seed),
        SplitMethod::Stratified => stratified_indices(&matrix.targets(spec.strat_trait), spec),
    }
}

pub fn split_random(matrix: &FeatureMatrix, spec: &SplitSpec) -> Result<(FeatureMatrix, FeatureMatrix)> {
    spec.validate()?;
    Ok(random_indices(matrix.len(), spec.test_fraction, spec.seed)?.apply(matrix))
}

pub fn split_stratified(matrix: &FeatureMatrix, spec: &SplitSpec) -> Result<(FeatureMatrix, FeatureMatrix)> {
    spec.validate()?;
    Ok(stratified_indices(&matrix.targets(spec.strat_trait), spec)?.apply(matrix))
}

pub fn split(matrix: &FeatureMatrix, spec: &SplitSpec) -> Result<(FeatureMatrix, FeatureMatrix)> {
    Ok(split_indices(matrix, spec)?.apply(matrix))
}

/// Test rows as in [`random_indices`]; training rows are the next
/// `train_size` entries of the same permutation, so a fixed seed gives the
/// same test set as the maximal split.
pub fn fixed_train_indices(n: usize, train_size: usize, test_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidSplit(format!("test_fraction {test_fraction} not in (0, 1)")));
    }
    let n_test = round_count(n as f64 * test_fraction);
    let available = n.saturating_sub(n_test);
    if n_test > n || train_size > available {
        return Err(Error::InsufficientRows { requested: train_size, available });
    }
    let perm = permutation(n, seed);
    Ok(SplitIndices::sorted(perm[n_test..n_test + train_size].to_vec(), perm[..n_test].to_vec()))
}

pub fn sample_fixed_train(
    matrix: &FeatureMatrix,
    train_size: usize,
    test_fraction: f64,
    seed: u64,
) -> Result<(FeatureMatrix, FeatureMatrix)> {
    Ok(fixed_train_indices(matrix.len(), train_size, test_fraction, seed)?.apply(matrix))
}
