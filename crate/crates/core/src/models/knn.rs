//! k-nearest-neighbour regression with a category-mismatch penalty.
//!
//! The distance between two users is their Euclidean distance plus
//! `penalty` times the number of categories in which exactly one of the two
//! has likes. Users who like disjoint sets of categories are pushed apart
//! even when their proportions happen to be close.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KnnConfig {
    pub k: usize,
    pub penalty: f64,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self { k: 12, penalty: 0.1 }
    }
}

/// Sorted indices of the strictly positive entries.
pub fn support_of(x: &[f64]) -> Vec<usize> {
    x.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(i, _)| i).collect()
}

fn symmetric_difference_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => {
                n += 1;
                i += 1;
            }
            Ordering::Greater => {
                n += 1;
                j += 1;
            }
            Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    n + (a.len() - i) + (b.len() - j)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn penalized(a: &[f64], sa: &[usize], b: &[f64], sb: &[usize], penalty: f64) -> f64 {
    euclidean(a, b) + penalty * symmetric_difference_len(sa, sb) as f64
}

/// `euclidean(a, b) + penalty * |support(a) △ support(b)|`.
pub fn knn_distance(a: &[f64], b: &[f64], penalty: f64) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.len(), got: b.len() });
    }
    Ok(penalized(a, &support_of(a), b, &support_of(b), penalty))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub penalty: f64,
    pub rows: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    #[serde(skip)]
    supports: Vec<Vec<usize>>,
}

impl KnnModel {
    pub fn new(k: usize, penalty: f64, rows: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidHyperparameter("k must be at least 1".into()));
        }
        if k > rows.len() {
            return Err(Error::KTooLarge { k, rows: rows.len() });
        }
        if !(penalty >= 0.0 && penalty.is_finite()) {
            return Err(Error::InvalidHyperparameter(format!("penalty {penalty} must be a non-negative number")));
        }
        let supports = rows.iter().map(|r| support_of(r)).collect();
        Ok(Self { k, penalty, rows, targets, supports })
    }

    /// Rebuilds the cached support sets after deserialization.
    pub(crate) fn restore(self) -> Result<Self> {
        Self::new(self.k, self.penalty, self.rows, self.targets)
    }

    /// Unweighted mean target of the `k` nearest rows; distance ties go to
    /// the lower row index.
    pub fn predict_raw(&self, x: &[f64]) -> f64 {
        let sx = support_of(x);
        let mut d: Vec<(f64, usize)> = self
            .rows
            .iter()
            .zip(&self.supports)
            .enumerate()
            .map(|(i, (r, s))| (penalized(x, &sx, r, s, self.penalty), i))
            .collect();
        let by = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, by);
            d.truncate(self.k);
        }
        d.sort_by(by);
        d.iter().map(|&(_, i)| self.targets[i]).sum::<f64>() / self.k as f64
    }
}

pub fn fit_knn(rows: &[&[f64]], y: &[f64], config: &KnnConfig) -> Result<KnnModel> {
    KnnModel::new(config.k, config.penalty, rows.iter().map(|r| r.to_vec()).collect(), y.to_vec())
}
