//! Random-forest classifier over discretized trait scores.
//!
//! Targets are binned into `n_classes` equal-width classes over `[1, 5]`.
//! Trees are grown with Gini splits on bootstrap resamples, drawing a random
//! feature subset at every node.

use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, Rng};
use crate::sampling::bucket_of;
use crate::types::{SCORE_MAX, SCORE_MIN};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub n_classes: usize,
    pub max_depth: usize,
    pub seed: u64,
    pub bootstrap: bool,
    /// Features tried per split; `None` means `floor(sqrt(dim))`, at least 1.
    pub max_features: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 50, n_classes: 5, max_depth: 8, seed: 0, bootstrap: true, max_features: None }
    }
}

/// Class index of a score under `n_classes` equal-width bins of `[1, 5]`.
pub fn class_of(score: f64, n_classes: usize) -> usize {
    bucket_of(score, n_classes)
}

/// Midpoint of a class bin, used as the class's score.
pub fn class_midpoint(class: usize, n_classes: usize) -> f64 {
    let width = (SCORE_MAX - SCORE_MIN) / n_classes as f64;
    SCORE_MIN + (class as f64 + 0.5) * width
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassNode {
    Leaf { class: usize },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTree {
    pub nodes: Vec<ClassNode>,
}

impl ClassTree {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                ClassNode::Leaf { class } => return class,
                ClassNode::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestClassifier {
    pub n_classes: usize,
    pub trees: Vec<ClassTree>,
}

impl ForestClassifier {
    /// Majority vote; ties go to the lowest class index.
    pub fn predict_class(&self, x: &[f64]) -> usize {
        let mut votes = vec![0usize; self.n_classes];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        argmax_lowest(&votes)
    }

    pub fn predict_raw(&self, x: &[f64]) -> f64 {
        class_midpoint(self.predict_class(x), self.n_classes)
    }

    pub(crate) fn validate(&self, dim: usize) -> bool {
        self.n_classes >= 1
            && !self.trees.is_empty()
            && self.trees.iter().all(|t| {
                !t.nodes.is_empty()
                    && t.nodes.iter().enumerate().all(|(i, n)| match *n {
                        ClassNode::Leaf { class } => class < self.n_classes,
                        ClassNode::Split { feature, threshold, left, right } => {
                            feature < dim
                                && threshold.is_finite()
                                && left > i
                                && right > i
                                && left < t.nodes.len()
                                && right < t.nodes.len()
                        }
                    })
            })
    }
}

fn argmax_lowest(counts: &[usize]) -> usize {
    let mut best = 0;
    for (i, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = i;
        }
    }
    best
}

struct Grower<'a> {
    rows: &'a [&'a [f64]],
    labels: &'a [usize],
    n_classes: usize,
    max_depth: usize,
    mtry: usize,
    dim: usize,
    rng: Rng,
    nodes: Vec<ClassNode>,
}

impl Grower<'_> {
    fn counts(&self, samples: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &s in samples {
            c[self.labels[s]] += 1;
        }
        c
    }

    fn grow(&mut self, samples: &[usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let counts = self.counts(samples);
        self.nodes.push(ClassNode::Leaf { class: argmax_lowest(&counts) });
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        if pure || depth >= self.max_depth {
            return id;
        }
        let Some((feature, threshold)) = self.best_split(samples, &counts) else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = samples.iter().partition(|&&s| self.rows[s][feature] <= threshold);
        let left = self.grow(&l, depth + 1);
        let right = self.grow(&r, depth + 1);
        self.nodes[id] = ClassNode::Split { feature, threshold, left, right };
        id
    }

    fn best_split(&mut self, samples: &[usize], counts: &[usize]) -> Option<(usize, f64)> {
        let mut features: Vec<usize> = if self.mtry >= self.dim {
            (0..self.dim).collect()
        } else {
            index::sample(&mut self.rng, self.dim, self.mtry).into_vec()
        };
        features.sort_unstable();

        let n = samples.len();
        let score = |c: &[usize], m: usize| c.iter().map(|&k| (k * k) as f64).sum::<f64>() / m as f64;
        let parent = score(counts, n);
        let mut best: Option<(usize, f64, f64)> = None;
        let mut sorted = samples.to_vec();
        let mut left = vec![0usize; self.n_classes];
        let mut right = vec![0usize; self.n_classes];
        for f in features {
            sorted.sort_by(|&a, &b| self.rows[a][f].total_cmp(&self.rows[b][f]));
            left.iter_mut().for_each(|c| *c = 0);
            right.copy_from_slice(counts);
            for k in 0..n - 1 {
                let lab = self.labels[sorted[k]];
                left[lab] += 1;
                right[lab] -= 1;
                let (v, next) = (self.rows[sorted[k]][f], self.rows[sorted[k + 1]][f]);
                if v == next {
                    continue;
                }
                let gain = score(&left, k + 1) + score(&right, n - k - 1) - parent;
                if gain > best.map_or(1e-12, |b| b.2) {
                    best = Some((f, v + (next - v) / 2.0, gain));
                }
            }
        }
        best.map(|(f, t, _)| (f, t))
    }
}

pub fn fit_forest_classifier(
    rows: &[&[f64]],
    y: &[f64],
    dim: usize,
    config: &ForestConfig,
) -> Result<ForestClassifier> {
    if rows.is_empty() {
        return Err(Error::DegenerateInput("no training rows".into()));
    }
    if config.n_trees == 0 || config.n_classes == 0 {
        return Err(Error::InvalidHyperparameter("n_trees and n_classes must be at least 1".into()));
    }
    let labels: Vec<usize> = y.iter().map(|&s| class_of(s, config.n_classes)).collect();
    let mtry = config.max_features.unwrap_or_else(|| (dim as f64).sqrt().floor() as usize).clamp(1, dim.max(1));
    let n = rows.len();

    let trees = (0..config.n_trees)
        .map(|t| {
            let mut r = rng::seeded(rng::derive_seed(config.seed, t as u64));
            let mut samples: Vec<usize> =
                if config.bootstrap { (0..n).map(|_| r.random_range(0..n)).collect() } else { (0..n).collect() };
            samples.shuffle(&mut r);
            let mut g = Grower {
                rows,
                labels: &labels,
                n_classes: config.n_classes,
                max_depth: config.max_depth,
                mtry,
                dim,
                rng: r,
                nodes: Vec::new(),
            };
            g.grow(&samples, 0);
            ClassTree { nodes: g.nodes }
        })
        .collect();
    Ok(ForestClassifier { n_classes: config.n_classes, trees })
}
