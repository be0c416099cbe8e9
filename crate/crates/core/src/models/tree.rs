//! Depth-limited CART regression tree used as the boosting weak learner.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// Flat node list; node 0 is the root. `x[feature] <= threshold` goes left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

/// Per-feature row orderings, computed once and reused by every tree fit on
/// the same rows.
pub struct Presorted {
    order: Vec<Vec<usize>>,
}

impl Presorted {
    pub fn new(rows: &[&[f64]], dim: usize) -> Self {
        let order = (0..dim)
            .map(|f| {
                let mut idx: Vec<usize> = (0..rows.len()).collect();
                idx.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]).then(a.cmp(&b)));
                idx
            })
            .collect();
        Self { order }
    }
}

pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
}

struct Builder<'a> {
    rows: &'a [&'a [f64]],
    targets: &'a [f64],
    presorted: &'a Presorted,
    params: &'a TreeParams,
    in_node: Vec<bool>,
    nodes: Vec<TreeNode>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl RegressionTree {
    /// Fits a tree to `targets` (the current residuals when boosting).
    pub fn fit(rows: &[&[f64]], targets: &[f64], presorted: &Presorted, params: &TreeParams) -> Self {
        let mut b = Builder { rows, targets, presorted, params, in_node: vec![false; rows.len()], nodes: Vec::new() };
        let all: Vec<usize> = (0..rows.len()).collect();
        b.build(&all, 0);
        RegressionTree { nodes: b.nodes }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                TreeNode::Leaf { value } => return value,
                TreeNode::Split { feature, threshold, left, right } => {
                    i = if x[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[TreeNode], i: usize) -> usize {
            match nodes[i] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn is_stump_leaf(&self) -> bool {
        self.nodes.len() == 1
    }

    /// Structural check used when loading documents.
    pub(crate) fn validate(&self, dim: usize) -> bool {
        if self.nodes.is_empty() {
            return false;
        }
        self.nodes.iter().enumerate().all(|(i, n)| match *n {
            TreeNode::Leaf { value } => value.is_finite(),
            TreeNode::Split { feature, threshold, left, right } => {
                feature < dim
                    && threshold.is_finite()
                    && left > i
                    && right > i
                    && left < self.nodes.len()
                    && right < self.nodes.len()
            }
        }) && self.acyclic_depth_ok()
    }

    fn acyclic_depth_ok(&self) -> bool {
        // children always have larger indices, so recursion terminates
        self.depth() < self.nodes.len()
    }
}

impl Builder<'_> {
    fn build(&mut self, members: &[usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let mean = members.iter().map(|&i| self.targets[i]).sum::<f64>() / members.len() as f64;
        self.nodes.push(TreeNode::Leaf { value: mean });

        if depth >= self.params.max_depth || members.len() < 2 * self.params.min_leaf.max(1) {
            return id;
        }
        let Some(best) = self.best_split(members) else {
            return id;
        };
        let (left, right): (Vec<usize>, Vec<usize>) =
            members.iter().partition(|&&i| self.rows[i][best.feature] <= best.threshold);
        let l = self.build(&left, depth + 1);
        let r = self.build(&right, depth + 1);
        self.nodes[id] = TreeNode::Split { feature: best.feature, threshold: best.threshold, left: l, right: r };
        id
    }

    /// Largest SSE reduction; ties keep the lowest feature, then the lowest
    /// threshold, because candidates are scanned in that order.
    fn best_split(&mut self, members: &[usize]) -> Option<BestSplit> {
        for &i in members {
            self.in_node[i] = true;
        }
        let n = members.len();
        let total: f64 = members.iter().map(|&i| self.targets[i]).sum();
        let parent = total * total / n as f64;
        let min_leaf = self.params.min_leaf.max(1);
        let mut best: Option<BestSplit> = None;
        let mut sorted = Vec::with_capacity(n);

        for (f, order) in self.presorted.order.iter().enumerate() {
            sorted.clear();
            sorted.extend(order.iter().copied().filter(|&i| self.in_node[i]));
            let mut left_sum = 0.0;
            for k in 0..n - 1 {
                left_sum += self.targets[sorted[k]];
                let (nl, nr) = (k + 1, n - k - 1);
                if nl < min_leaf || nr < min_leaf {
                    continue;
                }
                let (v, next) = (self.rows[sorted[k]][f], self.rows[sorted[k + 1]][f]);
                if v == next {
                    continue;
                }
                let right_sum = total - left_sum;
                let gain = left_sum * left_sum / nl as f64 + right_sum * right_sum / nr as f64 - parent;
                if gain > best.as_ref().map_or(0.0, |b| b.gain) {
                    best = Some(BestSplit { feature: f, threshold: v + (next - v) / 2.0, gain });
                }
            }
        }
        for &i in members {
            self.in_node[i] = false;
        }
        best
    }
}
