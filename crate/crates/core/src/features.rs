//! Category counts to model features.
//!
//! The default representation is relative: each user's counts are divided by
//! the user's total, so a user with 30 politics likes and 300 sports likes
//! gets `politics = 30/330`. Absolute mode keeps the raw counts and exists for
//! comparison.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{Big5Scores, CategoryPath, Dataset, FeatureSpace, FeatureVector, Trait, UserRecord};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureMode {
    #[default]
    Relative,
    Absolute,
}

/// Which part of a category path becomes a feature dimension.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Taxonomy {
    /// The full `(category, subcategory)` path.
    #[default]
    Both,
    /// Subcategories collapsed into their parent category.
    CategoryOnly,
    /// The subcategory label alone; paths without one keep their category.
    SubcategoryOnly,
}

impl Taxonomy {
    pub fn project(self, path: &CategoryPath) -> CategoryPath {
        match (self, &path.subcategory) {
            (Taxonomy::Both, _) => path.clone(),
            (Taxonomy::CategoryOnly, _) | (Taxonomy::SubcategoryOnly, None) => {
                CategoryPath { category: path.category.clone(), subcategory: None }
            }
            (Taxonomy::SubcategoryOnly, Some(sub)) => CategoryPath { category: sub.clone(), subcategory: None },
        }
    }

    pub fn project_counts(self, counts: &BTreeMap<CategoryPath, u64>) -> BTreeMap<CategoryPath, u64> {
        let mut out = BTreeMap::new();
        for (p, &c) in counts {
            *out.entry(self.project(p)).or_insert(0) += c;
        }
        out
    }

    pub fn project_dataset(self, dataset: &Dataset) -> Dataset {
        if self == Taxonomy::Both {
            return dataset.clone();
        }
        let users = dataset
            .users()
            .map(|u| (u.user_id.clone(), UserRecord { like_counts: self.project_counts(&u.like_counts), ..u.clone() }));
        Dataset::from_sorted(users.collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixRow {
    pub user_id: String,
    pub features: FeatureVector,
    pub scores: Big5Scores,
    pub total_likes: u64,
}

/// Feature rows over one [`FeatureSpace`], ordered by user id.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub space: FeatureSpace,
    pub mode: FeatureMode,
    pub rows: Vec<MatrixRow>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn targets(&self, t: Trait) -> Vec<f64> {
        self.rows.iter().map(|r| r.scores.get(t)).collect()
    }

    pub fn features(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.iter().map(|r| r.features.as_slice())
    }

    /// Rows at `indices`, kept in ascending index order.
    pub fn subset(&self, indices: &[usize]) -> FeatureMatrix {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        FeatureMatrix {
            space: self.space.clone(),
            mode: self.mode,
            rows: idx.into_iter().map(|i| self.rows[i].clone()).collect(),
        }
    }

    /// CSV dump: `userid,total_likes,<categories...>,ope,con,ext,agr,neu`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("userid,total_likes");
        for p in self.space.paths() {
            let _ = write!(out, ",{p}");
        }
        out.push_str(",ope,con,ext,agr,neu\n");
        for r in &self.rows {
            let _ = write!(out, "{},{}", r.user_id, r.total_likes);
            for v in r.features.as_slice() {
                let _ = write!(out, ",{v}");
            }
            for s in r.scores.to_array() {
                let _ = write!(out, ",{s}");
            }
            out.push('\n');
        }
        out
    }
}

/// Union of all categories present in the dataset, sorted.
pub fn build_feature_space(dataset: &Dataset) -> Result<FeatureSpace> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(FeatureSpace::from_paths(dataset.users().flat_map(|u| u.like_counts.keys().cloned())))
}

/// Users with at least `threshold` likes.
pub fn filter_min_likes(dataset: &Dataset, threshold: u64) -> Dataset {
    Dataset::from_sorted(
        dataset.users().filter(|u| u.total_likes() >= threshold).map(|u| (u.user_id.clone(), u.clone())).collect(),
    )
}

fn scatter(counts: &BTreeMap<CategoryPath, u64>, space: &FeatureSpace) -> Result<Vec<u64>> {
    let mut raw = vec![0u64; space.dim()];
    for (p, &c) in counts {
        let i = space.position(p).ok_or_else(|| Error::UnknownCategory(p.to_string()))?;
        raw[i] += c;
    }
    Ok(raw)
}

/// Per-category proportions of the user's total.
pub fn normalize_counts(counts: &BTreeMap<CategoryPath, u64>, space: &FeatureSpace) -> Result<FeatureVector> {
    let raw = scatter(counts, space)?;
    let total: u64 = raw.iter().sum();
    if total == 0 {
        return Err(Error::ZeroTotal);
    }
    let total = total as f64;
    Ok(raw.into_iter().map(|c| c as f64 / total).collect::<Vec<_>>().into())
}

fn absolute_counts(counts: &BTreeMap<CategoryPath, u64>, space: &FeatureSpace) -> Result<FeatureVector> {
    Ok(scatter(counts, space)?.into_iter().map(|c| c as f64).collect::<Vec<_>>().into())
}

pub fn vectorize(
    counts: &BTreeMap<CategoryPath, u64>,
    space: &FeatureSpace,
    mode: FeatureMode,
) -> Result<FeatureVector> {
    match mode {
        FeatureMode::Relative => normalize_counts(counts, space),
        FeatureMode::Absolute => absolute_counts(counts, space),
    }
}

/// Feature row for an unseen user: categories outside the space are dropped
/// and the rest renormalized.
pub fn vectorize_for_prediction(
    counts: &BTreeMap<CategoryPath, u64>,
    space: &FeatureSpace,
    mode: FeatureMode,
) -> Result<FeatureVector> {
    let known: BTreeMap<CategoryPath, u64> =
        counts.iter().filter(|(p, &c)| c > 0 && space.contains(p)).map(|(p, &c)| (p.clone(), c)).collect();
    if known.is_empty() {
        return Err(Error::ZeroTotal);
    }
    vectorize(&known, space, mode)
}

/// Filters by `threshold`, then vectorizes every remaining user.
pub fn build_matrix(
    dataset: &Dataset,
    space: &FeatureSpace,
    threshold: u64,
    mode: FeatureMode,
) -> Result<FeatureMatrix> {
    let rows = filter_min_likes(dataset, threshold)
        .users()
        .map(|u| {
            Ok(MatrixRow {
                user_id: u.user_id.clone(),
                features: vectorize(&u.like_counts, space, mode)?,
                scores: u.scores,
                total_likes: u.total_likes(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureMatrix { space: space.clone(), mode, rows })
}
