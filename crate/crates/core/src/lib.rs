//! Big Five personality regression from page-like categories.
//!
//! The pipeline mirrors how the features are produced in practice:
//!
//! 1. [`ingest`] parses the score and like tables, resolves each like id to a
//!    page category and joins everything into a [`Dataset`].
//! 2. [`features`] turns per-user category counts into relative proportions
//!    over a fixed [`FeatureSpace`] and applies the minimum-likes filter.
//! 3. [`sampling`] splits users into train and test sets (random or
//!    stratified by trait score).
//! 4. [`models`] fits one of four regressors (linear, boosted trees, kNN with
//!    a category-mismatch penalty, MLP) or the random-forest class baseline.
//! 5. [`eval`] scores clipped predictions with MSE/RMSE.
//! 6. [`experiments`] holds the synthetic data generator and the comparison
//!    and minimum-likes sweep protocols.

pub mod error;
pub mod eval;
pub mod experiments;
pub mod features;
pub mod ingest;
pub mod models;
pub mod rng;
pub mod sampling;
pub mod types;

pub use error::{Error, Result};
pub use types::{Big5Scores, CategoryPath, Dataset, FeatureSpace, FeatureVector, Trait, UserRecord};
