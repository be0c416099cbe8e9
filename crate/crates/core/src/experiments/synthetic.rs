//! Seeded synthetic users with planted category effects.
//!
//! Each user draws a preference simplex over the categories (normalized
//! Gamma draws, i.e. a symmetric Dirichlet), a like total from a log-uniform
//! distribution, and multinomial like counts. Every trait score is a planted
//! affine function of the user's category mix plus Gaussian noise, clamped to
//! `[1, 5]`.

use std::collections::BTreeMap;

use rand::Rng as _;
use rand_distr::{Binomial, Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::LikeCategoryMap;
use crate::rng::{self, RNG_ID};
use crate::types::{clamp_score, Big5Scores, CategoryPath, Dataset, Trait, UserRecord, SCORE_MAX, SCORE_MIN};

/// Which category mix the planted scores are computed from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreBasis {
    /// The realized like proportions (count / total), i.e. exactly the
    /// relative feature vector a model sees.
    #[default]
    Observed,
    /// The latent preference simplex, before count quantization.
    Preference,
}

/// Intercept plus one coefficient per category, in category order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl PlantedModel {
    pub fn raw(&self, mix: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(mix).map(|(c, p)| c * p).sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_users: usize,
    pub n_categories: usize,
    pub likes_min: u64,
    pub likes_max: u64,
    /// Symmetric Dirichlet concentration of the preference simplex.
    pub concentration: f64,
    /// When set, every user shares this preference simplex.
    pub fixed_preference: Option<Vec<f64>>,
    /// Planted models in trait order; drawn from the seed when absent.
    pub coefficients: Option<Vec<PlantedModel>>,
    /// Range of the drawn per-category trait levels.
    pub category_level_range: (f64, f64),
    pub noise_sigma: f64,
    /// Per-user noise is `noise_sigma * (likes_min / total) ^ exponent`.
    pub noise_volume_exponent: f64,
    pub score_basis: ScoreBasis,
    /// Subcategories per parent category in the generated taxonomy.
    pub categories_per_group: usize,
    /// Distinct like ids generated per category.
    pub pages_per_category: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            n_users: 1000,
            n_categories: 20,
            likes_min: 10,
            likes_max: 500,
            concentration: 0.3,
            fixed_preference: None,
            coefficients: None,
            category_level_range: (1.8, 4.2),
            noise_sigma: 0.2,
            noise_volume_exponent: 0.0,
            score_basis: ScoreBasis::Observed,
            categories_per_group: 4,
            pages_per_category: 5,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidSpec(m));
        if self.n_users < 2 {
            return fail(format!("n_users must be at least 2, got {}", self.n_users));
        }
        if self.n_categories < 1 {
            return fail("n_categories must be at least 1".into());
        }
        if self.likes_min < 1 || self.likes_min > self.likes_max {
            return fail(format!("need 1 <= likes_min <= likes_max, got {}..{}", self.likes_min, self.likes_max));
        }
        if !(self.concentration > 0.0 && self.concentration.is_finite()) {
            return fail("concentration must be positive".into());
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return fail("noise_sigma must be a non-negative number".into());
        }
        if !self.noise_volume_exponent.is_finite() {
            return fail("noise_volume_exponent must be finite".into());
        }
        let (lo, hi) = self.category_level_range;
        if !(SCORE_MIN..=SCORE_MAX).contains(&lo) || !(SCORE_MIN..=SCORE_MAX).contains(&hi) || lo > hi {
            return fail("category_level_range must lie within [1, 5]".into());
        }
        if self.categories_per_group == 0 || self.pages_per_category == 0 {
            return fail("categories_per_group and pages_per_category must be at least 1".into());
        }
        if let Some(p) = &self.fixed_preference {
            let s: f64 = p.iter().sum();
            if p.len() != self.n_categories || p.iter().any(|v| v.is_nan() || *v < 0.0) || s.is_nan() || s <= 0.0 {
                return fail("fixed_preference needs one non-negative weight per category".into());
            }
        }
        if let Some(c) = &self.coefficients {
            if c.len() != 5 || c.iter().any(|m| m.coefficients.len() != self.n_categories) {
                return fail("coefficients need five planted models with one entry per category".into());
            }
        }
        Ok(())
    }

    pub fn category_path(&self, c: usize) -> CategoryPath {
        CategoryPath {
            category: format!("group{:02}", c / self.categories_per_group),
            subcategory: Some(format!("topic{c:03}")),
        }
    }

    pub fn like_id(&self, c: usize, page: usize) -> String {
        format!("L{c:03}p{page:02}")
    }
}

/// Planted models and the error of predicting with them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub seed: u64,
    pub rng: String,
    pub score_basis: ScoreBasis,
    pub categories: Vec<CategoryPath>,
    /// Planted model per trait, in trait order.
    pub models: Vec<PlantedModel>,
    /// RMSE of the clipped planted model against the generated scores.
    pub oracle_rmse: BTreeMap<Trait, f64>,
    /// Delta-method standard error of `oracle_rmse`.
    pub oracle_rmse_se: BTreeMap<Trait, f64>,
}

impl GroundTruth {
    pub fn model(&self, t: Trait) -> &PlantedModel {
        &self.models[t.index()]
    }

    /// Clipped planted prediction for a feature row aligned with
    /// `categories` (Observed basis only).
    pub fn oracle_predict(&self, t: Trait, mix: &[f64]) -> f64 {
        clamp_score(self.model(t).raw(mix))
    }
}

pub struct SyntheticData {
    pub dataset: Dataset,
    pub truth: GroundTruth,
    /// Like id to category for every generated page.
    pub catalog: LikeCategoryMap,
    spec: SyntheticSpec,
}

impl SyntheticData {
    /// One `(user, like)` row per like, users in id order. Likes of a
    /// category cycle through that category's pages.
    pub fn like_rows(&self) -> Vec<(String, String)> {
        let mut rows = Vec::new();
        for u in self.dataset.users() {
            for (path, &n) in &u.like_counts {
                let c = self.category_index(path);
                for k in 0..n as usize {
                    rows.push((u.user_id.clone(), self.spec.like_id(c, k % self.spec.pages_per_category)));
                }
            }
        }
        rows
    }

    fn category_index(&self, path: &CategoryPath) -> usize {
        self.truth.categories.binary_search(path).expect("generated path")
    }
}

fn draw_models(spec: &SyntheticSpec, r: &mut rng::Rng) -> Vec<PlantedModel> {
    let (lo, hi) = spec.category_level_range;
    let centre = (lo + hi) / 2.0;
    Trait::ALL
        .iter()
        .map(|_| PlantedModel {
            intercept: centre,
            coefficients: (0..spec.n_categories)
                .map(|_| if hi > lo { r.random_range(lo..hi) } else { lo } - centre)
                .collect(),
        })
        .collect()
}

fn draw_preference(spec: &SyntheticSpec, gamma: &Gamma<f64>, r: &mut rng::Rng) -> Vec<f64> {
    if let Some(p) = &spec.fixed_preference {
        let s: f64 = p.iter().sum();
        return p.iter().map(|v| v / s).collect();
    }
    let mut p: Vec<f64> = (0..spec.n_categories).map(|_| gamma.sample(r)).collect();
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        p.iter_mut().for_each(|v| *v /= s);
    } else {
        p.iter_mut().for_each(|v| *v = 1.0 / spec.n_categories as f64);
    }
    p
}

fn draw_counts(total: u64, p: &[f64], r: &mut rng::Rng) -> Vec<u64> {
    let mut counts = vec![0; p.len()];
    let mut remaining = total;
    let mut mass = 1.0;
    for (i, &pi) in p.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == p.len() {
            counts[i] = remaining;
            break;
        }
        let q = if mass > 0.0 { (pi / mass).clamp(0.0, 1.0) } else { 0.0 };
        let n = Binomial::new(remaining, q).expect("valid binomial").sample(r);
        counts[i] = n;
        remaining -= n;
        mass -= pi;
    }
    counts
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut r = rng::seeded(spec.seed);
    let models = match &spec.coefficients {
        Some(m) => m.clone(),
        None => draw_models(spec, &mut r),
    };
    let gamma = Gamma::new(spec.concentration, 1.0).map_err(|e| Error::InvalidSpec(e.to_string()))?;
    let standard = Normal::new(0.0, 1.0).expect("unit normal");
    let (ln_lo, ln_hi) = ((spec.likes_min as f64).ln(), (spec.likes_max as f64).ln());
    let paths: Vec<CategoryPath> = (0..spec.n_categories).map(|c| spec.category_path(c)).collect();
    let width = spec.n_users.to_string().len();

    let mut users = Vec::with_capacity(spec.n_users);
    let mut sq_err: Vec<Vec<f64>> = (0..5).map(|_| Vec::with_capacity(spec.n_users)).collect();
    for u in 0..spec.n_users {
        let total = if ln_hi > ln_lo { r.random_range(ln_lo..=ln_hi).exp().round() as u64 } else { spec.likes_min }
            .clamp(spec.likes_min, spec.likes_max);
        let pref = draw_preference(spec, &gamma, &mut r);
        let counts = draw_counts(total, &pref, &mut r);
        let observed: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
        let mix = match spec.score_basis {
            ScoreBasis::Observed => &observed,
            ScoreBasis::Preference => &pref,
        };
        let sigma = spec.noise_sigma * (spec.likes_min as f64 / total as f64).powf(spec.noise_volume_exponent);
        let mut raw = [0.0; 5];
        for (t, slot) in raw.iter_mut().enumerate() {
            let clean = models[t].raw(mix);
            let noise = if sigma > 0.0 { sigma * standard.sample(&mut r) } else { 0.0 };
            *slot = clamp_score(clean + noise);
            let e = clamp_score(clean) - *slot;
            sq_err[t].push(e * e);
        }
        users.push(UserRecord {
            user_id: format!("u{u:0width$}"),
            scores: Big5Scores::validate(raw)?,
            like_counts: paths.iter().cloned().zip(counts).filter(|(_, c)| *c > 0).collect(),
        });
    }

    let mut oracle_rmse = BTreeMap::new();
    let mut oracle_rmse_se = BTreeMap::new();
    for t in Trait::ALL {
        let e = &sq_err[t.index()];
        let n = e.len() as f64;
        let mse = e.iter().sum::<f64>() / n;
        let var = e.iter().map(|v| (v - mse).powi(2)).sum::<f64>() / (n - 1.0);
        let rmse = mse.sqrt();
        oracle_rmse.insert(t, rmse);
        oracle_rmse_se.insert(t, if rmse > 0.0 { (var / n).sqrt() / (2.0 * rmse) } else { 0.0 });
    }

    let mut catalog = LikeCategoryMap::new();
    for (c, p) in paths.iter().enumerate() {
        for page in 0..spec.pages_per_category {
            catalog.insert(spec.like_id(c, page), p.clone());
        }
    }
    let mut categories = paths;
    categories.sort();
    // models are indexed by generation order, which is already sorted
    debug_assert!(categories.iter().enumerate().all(|(i, p)| *p == spec.category_path(i)));

    Ok(SyntheticData {
        dataset: Dataset::new(users)?,
        truth: GroundTruth {
            seed: spec.seed,
            rng: RNG_ID.to_string(),
            score_basis: spec.score_basis,
            categories,
            models,
            oracle_rmse,
            oracle_rmse_se,
        },
        catalog,
        spec: spec.clone(),
    })
}
