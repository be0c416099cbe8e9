//! One-hidden-layer perceptron network (ReLU hidden units, linear output)
//! trained by seeded mini-batch gradient descent on squared loss.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MlpConfig {
    pub hidden_width: usize,
    pub epochs: usize,
    pub step: f64,
    pub batch: usize,
    pub seed: u64,
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self { hidden_width: 16, epochs: 200, step: 0.01, batch: 32, seed: 0 }
    }
}

/// Parameters are stored flat as
/// `[hidden weights (width x dim, row-major), hidden biases (width),
///   output weights (width), output bias]`.
/// Inputs are standardized with the stored offset and scale before the
/// first layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub dim: usize,
    pub hidden_width: usize,
    pub input_offset: Vec<f64>,
    pub input_scale: Vec<f64>,
    pub params: Vec<f64>,
}

pub fn param_count(dim: usize, width: usize) -> usize {
    width * dim + 2 * width + 1
}

impl MlpModel {
    /// Glorot-uniform weights, zero hidden biases, output bias at `bias`.
    pub fn init(dim: usize, width: usize, offset: Vec<f64>, scale: Vec<f64>, bias: f64, seed: u64) -> Self {
        let mut r = rng::seeded(seed);
        let mut params = Vec::with_capacity(param_count(dim, width));
        let limit1 = (6.0 / (dim + width) as f64).sqrt();
        params.extend((0..width * dim).map(|_| r.random_range(-limit1..=limit1)));
        params.extend(std::iter::repeat_n(0.0, width));
        let limit2 = (6.0 / (width + 1) as f64).sqrt();
        params.extend((0..width).map(|_| r.random_range(-limit2..=limit2)));
        params.push(bias);
        Self { dim, hidden_width: width, input_offset: offset, input_scale: scale, params }
    }

    pub(crate) fn validate(&self) -> bool {
        self.params.len() == param_count(self.dim, self.hidden_width)
            && self.input_offset.len() == self.dim
            && self.input_scale.len() == self.dim
            && self.params.iter().chain(&self.input_offset).chain(&self.input_scale).all(|v| v.is_finite())
            && self.input_scale.iter().all(|&s| s > 0.0)
    }

    fn standardize(&self, x: &[f64], out: &mut [f64]) {
        for ((o, v), (m, s)) in out.iter_mut().zip(x).zip(self.input_offset.iter().zip(&self.input_scale)) {
            *o = (v - m) / s;
        }
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], f64) {
        let (w, d) = (self.hidden_width, self.dim);
        let (w1, rest) = self.params.split_at(w * d);
        let (b1, rest) = rest.split_at(w);
        let (w2, rest) = rest.split_at(w);
        (w1, b1, w2, rest[0])
    }

    fn forward(&self, xs: &[f64], hidden: &mut [f64]) -> f64 {
        let (w1, b1, w2, b2) = self.split();
        let mut out = b2;
        for (j, h) in hidden.iter_mut().enumerate() {
            let row = &w1[j * self.dim..(j + 1) * self.dim];
            let z = b1[j] + row.iter().zip(xs).map(|(a, b)| a * b).sum::<f64>();
            *h = z.max(0.0);
            out += w2[j] * *h;
        }
        out
    }

    pub fn predict_raw(&self, x: &[f64]) -> f64 {
        let mut xs = vec![0.0; self.dim];
        let mut hidden = vec![0.0; self.hidden_width];
        self.standardize(x, &mut xs);
        self.forward(&xs, &mut hidden)
    }

    /// `(1 / 2m) * sum (prediction - target)^2` over the given rows.
    pub fn loss(&self, rows: &[&[f64]], y: &[f64]) -> f64 {
        let sq: f64 = rows.iter().zip(y).map(|(r, t)| (self.predict_raw(r) - t).powi(2)).sum();
        sq / (2.0 * rows.len() as f64)
    }

    /// Loss and its gradient with respect to `params`, by backpropagation.
    pub fn loss_and_gradient(&self, rows: &[&[f64]], y: &[f64]) -> (f64, Vec<f64>) {
        let (w, d) = (self.hidden_width, self.dim);
        let (_, _, w2, _) = self.split();
        let m = rows.len() as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut xs = vec![0.0; d];
        let mut hidden = vec![0.0; w];
        let mut loss = 0.0;
        for (r, &t) in rows.iter().zip(y) {
            self.standardize(r, &mut xs);
            let err = self.forward(&xs, &mut hidden) - t;
            loss += err * err;
            let e = err / m;
            let (g1, rest) = grad.split_at_mut(w * d);
            let (gb1, rest) = rest.split_at_mut(w);
            let (gw2, gb2) = rest.split_at_mut(w);
            gb2[0] += e;
            for j in 0..w {
                gw2[j] += e * hidden[j];
                if hidden[j] > 0.0 {
                    let dz = e * w2[j];
                    gb1[j] += dz;
                    for (g, x) in g1[j * d..(j + 1) * d].iter_mut().zip(&xs) {
                        *g += dz * x;
                    }
                }
            }
        }
        (loss / (2.0 * m), grad)
    }
}

pub struct MlpFit {
    pub model: MlpModel,
    /// Full-data training loss at initialization and after each epoch.
    pub train_loss: Vec<f64>,
}

fn standardization(rows: &[&[f64]], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..dim).map(|f| rows.iter().map(|r| r[f]).sum::<f64>() / n).collect();
    let scale = (0..dim)
        .map(|f| {
            let var = rows.iter().map(|r| (r[f] - mean[f]).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

/// Trains and returns the parameters with the lowest full-data training loss
/// seen at any epoch boundary, so the result is never worse than the
/// initialization.
pub fn fit_mlp(rows: &[&[f64]], y: &[f64], dim: usize, config: &MlpConfig) -> Result<MlpFit> {
    if rows.is_empty() {
        return Err(Error::DegenerateInput("no training rows".into()));
    }
    if config.hidden_width == 0 || config.batch == 0 {
        return Err(Error::InvalidHyperparameter("hidden_width and batch must be at least 1".into()));
    }
    if !(config.step > 0.0 && config.step.is_finite()) {
        return Err(Error::InvalidHyperparameter(format!("step {} must be positive", config.step)));
    }
    let (offset, scale) = standardization(rows, dim);
    let mean_y = y.iter().sum::<f64>() / y.len() as f64;
    let mut model = MlpModel::init(dim, config.hidden_width, offset, scale, mean_y, config.seed);

    let mut shuffle_rng = rng::seeded(rng::derive_seed(config.seed, 1));
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut batch_rows: Vec<&[f64]> = Vec::with_capacity(config.batch);
    let mut batch_y = Vec::with_capacity(config.batch);

    let initial = model.loss(rows, y);
    let mut train_loss = vec![initial];
    let mut best = (initial, model.params.clone());
    for _ in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        for chunk in order.chunks(config.batch) {
            batch_rows.clear();
            batch_y.clear();
            batch_rows.extend(chunk.iter().map(|&i| rows[i]));
            batch_y.extend(chunk.iter().map(|&i| y[i]));
            let (_, grad) = model.loss_and_gradient(&batch_rows, &batch_y);
            for (p, g) in model.params.iter_mut().zip(&grad) {
                *p -= config.step * g;
            }
        }
        let loss = model.loss(rows, y);
        train_loss.push(loss);
        if !loss.is_finite() {
            break;
        }
        if loss < best.0 {
            best = (loss, model.params.clone());
        }
    }
    model.params = best.1;
    Ok(MlpFit { model, train_loss })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data() -> (Vec<Vec<f64>>, Vec<f64>) {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![(i % 7) as f64 / 7.0, (i % 3) as f64 / 3.0]).collect();
        let y = rows.iter().map(|r| 1.5 + 2.0 * r[0] - r[1]).collect();
        (rows, y)
    }

    #[test]
    fn zero_epochs_keeps_the_initialization() {
        let (rows, y) = data();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let cfg = MlpConfig { epochs: 0, seed: 5, ..Default::default() };
        let fit = fit_mlp(&refs, &y, 2, &cfg).unwrap();
        let (off, sc) = standardization(&refs, 2);
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        assert_eq!(fit.model, MlpModel::init(2, 16, off, sc, mean, 5));
    }

    #[test]
    fn init_respects_glorot_bounds() {
        let m = MlpModel::init(10, 6, vec![0.0; 10], vec![1.0; 10], 3.0, 1);
        let lim1 = (6.0f64 / 16.0).sqrt();
        let lim2 = (6.0f64 / 7.0).sqrt();
        let (w1, b1, w2, b2) = m.split();
        assert!(w1.iter().all(|w| w.abs() <= lim1));
        assert!(b1.iter().all(|&b| b == 0.0));
        assert!(w2.iter().all(|w| w.abs() <= lim2));
        assert_eq!(b2, 3.0);
    }

    #[test]
    fn training_reduces_loss() {
        let (rows, y) = data();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let fit = fit_mlp(&refs, &y, 2, &MlpConfig::default()).unwrap();
        let final_loss = fit.model.loss(&refs, &y);
        assert!(final_loss <= fit.train_loss[0]);
        assert!(final_loss < 0.5 * fit.train_loss[0]);
    }

    #[test]
    fn rejects_bad_config() {
        let refs = [&[1.0][..]];
        assert!(fit_mlp(&refs, &[1.0], 1, &MlpConfig { batch: 0, ..Default::default() }).is_err());
        assert!(fit_mlp(&refs, &[1.0], 1, &MlpConfig { step: -1.0, ..Default::default() }).is_err());
        assert!(fit_mlp(&[], &[], 1, &MlpConfig::default()).is_err());
    }
}
