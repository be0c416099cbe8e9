//! Shared domain types.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub const SCORE_MIN: f64 = 1.0;
pub const SCORE_MAX: f64 = 5.0;

/// One of the five personality traits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trait {
    Ope,
    Con,
    Ext,
    Agr,
    Neu,
}

impl Trait {
    pub const ALL: [Trait; 5] = [Trait::Ope, Trait::Con, Trait::Ext, Trait::Agr, Trait::Neu];

    pub fn name(self) -> &'static str {
        match self {
            Trait::Ope => "ope",
            Trait::Con => "con",
            Trait::Ext => "ext",
            Trait::Agr => "agr",
            Trait::Neu => "neu",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Trait {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Trait {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Trait::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown trait {s:?}")))
    }
}

/// Five trait scores on the closed `[1, 5]` scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Big5Scores {
    pub ope: f64,
    pub con: f64,
    pub ext: f64,
    pub agr: f64,
    pub neu: f64,
}

impl Big5Scores {
    /// Validates five raw values in trait order. Values are kept as given;
    /// nothing is clamped.
    pub fn validate(raw: [f64; 5]) -> Result<Self> {
        for (t, &v) in Trait::ALL.iter().zip(raw.iter()) {
            if !v.is_finite() {
                return Err(Error::NonFinite { name: t.name() });
            }
            if !(SCORE_MIN..=SCORE_MAX).contains(&v) {
                return Err(Error::OutOfRange { name: t.name(), value: v });
            }
        }
        let [ope, con, ext, agr, neu] = raw;
        Ok(Self { ope, con, ext, agr, neu })
    }

    pub fn get(&self, t: Trait) -> f64 {
        self.to_array()[t.index()]
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.ope, self.con, self.ext, self.agr, self.neu]
    }
}

/// Clamps a raw prediction into the legal trait range.
pub fn clamp_score(raw: f64) -> f64 {
    raw.clamp(SCORE_MIN, SCORE_MAX)
}

/// A page category with an optional subcategory.
///
/// Ordering is lexicographic by category, then subcategory (`None` first).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CategoryPath {
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subcategory: Option<String>,
}

impl CategoryPath {
    pub fn new(category: impl Into<String>, subcategory: Option<String>) -> Result<Self> {
        let category = category.into();
        if category.trim().is_empty() {
            return Err(Error::InvalidCategory("category must be non-empty".into()));
        }
        Ok(Self { category, subcategory })
    }

    pub fn top(category: impl Into<String>) -> Result<Self> {
        Self::new(category, None)
    }

    pub fn with_sub(category: impl Into<String>, sub: impl Into<String>) -> Result<Self> {
        Self::new(category, Some(sub.into()))
    }
}

impl fmt::Display for CategoryPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.subcategory {
            Some(sub) => write!(f, "{}/{}", self.category, sub),
            None => f.write_str(&self.category),
        }
    }
}

/// A scored user with per-category like counts.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRecord {
    pub user_id: String,
    pub scores: Big5Scores,
    pub like_counts: BTreeMap<CategoryPath, u64>,
}

impl UserRecord {
    pub fn total_likes(&self) -> u64 {
        self.like_counts.values().sum()
    }
}

/// Joined users keyed (and therefore ordered) by user id.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    users: BTreeMap<String, UserRecord>,
}

impl Dataset {
    pub fn new(records: impl IntoIterator<Item = UserRecord>) -> Result<Self> {
        let mut users = BTreeMap::new();
        for r in records {
            if users.contains_key(&r.user_id) {
                return Err(Error::DuplicateUser(r.user_id));
            }
            users.insert(r.user_id.clone(), r);
        }
        Ok(Self { users })
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn get(&self, user_id: &str) -> Option<&UserRecord> {
        self.users.get(user_id)
    }

    /// Users in lexicographic user-id order.
    pub fn users(&self) -> impl Iterator<Item = &UserRecord> {
        self.users.values()
    }

    pub(crate) fn from_sorted(users: BTreeMap<String, UserRecord>) -> Self {
        Self { users }
    }
}

/// Ordered, duplicate-free list of category dimensions.
#[derive(Debug, Clone)]
pub struct FeatureSpace {
    paths: Vec<CategoryPath>,
    index: HashMap<CategoryPath, usize>,
}

impl FeatureSpace {
    /// Builds a space from any collection of paths; duplicates collapse and
    /// the result is sorted.
    pub fn from_paths(paths: impl IntoIterator<Item = CategoryPath>) -> Self {
        let mut paths: Vec<CategoryPath> = paths.into_iter().collect();
        paths.sort();
        paths.dedup();
        let index = paths.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        Self { paths, index }
    }

    pub fn dim(&self) -> usize {
        self.paths.len()
    }

    pub fn paths(&self) -> &[CategoryPath] {
        &self.paths
    }

    pub fn position(&self, path: &CategoryPath) -> Option<usize> {
        self.index.get(path).copied()
    }

    pub fn contains(&self, path: &CategoryPath) -> bool {
        self.index.contains_key(path)
    }
}

impl PartialEq for FeatureSpace {
    fn eq(&self, other: &Self) -> bool {
        self.paths == other.paths
    }
}

impl Eq for FeatureSpace {}

impl Serialize for FeatureSpace {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.paths.serialize(s)
    }
}

impl<'de> Deserialize<'de> for FeatureSpace {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let paths = Vec::<CategoryPath>::deserialize(d)?;
        let space = FeatureSpace::from_paths(paths.iter().cloned());
        if space.paths != paths {
            return Err(serde::de::Error::custom("feature space must be sorted and duplicate-free"));
        }
        Ok(space)
    }
}

/// Dense per-user feature row aligned with a [`FeatureSpace`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Dimensions with a strictly positive value.
    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(i, _)| i).collect()
    }
}

impl From<Vec<f64>> for FeatureVector {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}
