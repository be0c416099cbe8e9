//! Least-squares linear model solved through the normal equations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Diagonal damping applied when the Gram matrix is singular.
pub const TIKHONOV_DAMPING: f64 = 1e-8;

// Pivot ratio below which the Gram matrix is treated as singular. Relative
// features always sum to one, which makes them collinear with the intercept.
const SINGULAR_PIVOT_RATIO: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    /// Whether the damped system had to be used.
    pub damped: bool,
}

impl LinearModel {
    pub fn predict_raw(&self, x: &[f64]) -> f64 {
        self.intercept + self.coefficients.iter().zip(x).map(|(c, v)| c * v).sum::<f64>()
    }

    pub fn dim(&self) -> usize {
        self.coefficients.len()
    }
}

fn gram(rows: &[&[f64]], y: &[f64], dim: usize) -> (DMatrix<f64>, DVector<f64>) {
    let p = dim + 1;
    let mut g = DMatrix::<f64>::zeros(p, p);
    let mut b = DVector::<f64>::zeros(p);
    let mut z = vec![0.0; p];
    for (row, &t) in rows.iter().zip(y) {
        z[0] = 1.0;
        z[1..].copy_from_slice(row);
        for i in 0..p {
            b[i] += z[i] * t;
            for j in 0..=i {
                g[(i, j)] += z[i] * z[j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            g[(j, i)] = g[(i, j)];
        }
    }
    (g, b)
}

fn well_conditioned(chol: &nalgebra::Cholesky<f64, nalgebra::Dyn>, g: &DMatrix<f64>) -> bool {
    let l = chol.l_dirty();
    let max_diag = g.diagonal().iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    let min_pivot = (0..l.nrows()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
    max_diag > 0.0 && min_pivot / max_diag > SINGULAR_PIVOT_RATIO
}

/// Minimizes the sum of squared residuals of `intercept + coefficients . x`.
pub fn fit_linear(rows: &[&[f64]], y: &[f64], dim: usize) -> Result<LinearModel> {
    if rows.is_empty() {
        return Err(Error::DegenerateInput("no training rows".into()));
    }
    let (mut g, b) = gram(rows, y, dim);
    let (solution, damped) = match g.clone().cholesky() {
        Some(chol) if well_conditioned(&chol, &g) => (chol.solve(&b), false),
        _ => {
            for i in 0..g.nrows() {
                g[(i, i)] += TIKHONOV_DAMPING;
            }
            let chol = g
                .cholesky()
                .ok_or_else(|| Error::DegenerateInput("damped Gram matrix is not positive definite".into()))?;
            (chol.solve(&b), true)
        }
    };
    if solution.iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateInput("non-finite coefficients".into()));
    }
    Ok(LinearModel { intercept: solution[0], coefficients: solution.as_slice()[1..].to_vec(), damped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn refs(rows: &[Vec<f64>]) -> Vec<&[f64]> {
        rows.iter().map(|r| r.as_slice()).collect()
    }

    #[test]
    fn exact_line() {
        let rows = vec![vec![0.0], vec![1.0], vec![2.0]];
        let m = fit_linear(&refs(&rows), &[1.0, 3.0, 5.0], 1).unwrap();
        approx::assert_abs_diff_eq!(m.intercept, 1.0, epsilon = 1e-12);
        approx::assert_abs_diff_eq!(m.coefficients[0], 2.0, epsilon = 1e-12);
        assert!(!m.damped);
        for (r, y) in rows.iter().zip([1.0, 3.0, 5.0]) {
            approx::assert_abs_diff_eq!(m.predict_raw(r), y, epsilon = 1e-12);
        }
    }

    #[test]
    fn constant_target_gives_mean_solution() {
        let rows = vec![vec![0.0, 1.0], vec![1.0, 0.5], vec![2.0, 3.0], vec![3.0, 1.0]];
        let m = fit_linear(&refs(&rows), &[2.5; 4], 2).unwrap();
        approx::assert_abs_diff_eq!(m.intercept, 2.5, epsilon = 1e-10);
        for c in &m.coefficients {
            approx::assert_abs_diff_eq!(*c, 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn simplex_rows_trigger_damping_but_predict_exactly() {
        // rows sum to one, so the intercept column is a linear combination
        let rows = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.5, 0.5], vec![0.25, 0.75]];
        let y: Vec<f64> = rows.iter().map(|r| 2.0 * r[0] + 4.0 * r[1]).collect();
        let m = fit_linear(&refs(&rows), &y, 2).unwrap();
        assert!(m.damped);
        for (r, t) in rows.iter().zip(&y) {
            approx::assert_abs_diff_eq!(m.predict_raw(r), *t, epsilon = 1e-7);
        }
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(fit_linear(&[], &[], 3), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn single_row_is_damped() {
        let m = fit_linear(&[&[2.0][..]], &[3.0], 1).unwrap();
        assert!(m.damped);
        approx::assert_abs_diff_eq!(m.predict_raw(&[2.0]), 3.0, epsilon = 1e-6);
    }
}
