//! Regression and classification metrics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::models::forest::class_of;
use crate::models::{Algorithm, Model, TrainedModel};
use crate::types::{Trait, SCORE_MAX, SCORE_MIN};

pub const REPORT_CSV_HEADER: &str = "trait,algorithm,n_test,mse,rmse,mae_pct";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionMetrics {
    pub n: usize,
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
}

/// `mse = (1/n) sum (predicted - actual)^2`, `rmse = sqrt(mse)`.
pub fn compute_regression_metrics(predicted: &[f64], actual: &[f64]) -> Result<RegressionMetrics> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch(predicted.len(), actual.len()));
    }
    if predicted.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = predicted.len() as f64;
    let (sq, abs) = predicted.iter().zip(actual).fold((0.0, 0.0), |(sq, abs), (p, a)| {
        let e = p - a;
        (sq + e * e, abs + e.abs())
    });
    let mse = sq / n;
    Ok(RegressionMetrics { n: predicted.len(), mse, rmse: mse.sqrt(), mae: abs / n })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    #[serde(rename = "trait")]
    pub target: Trait,
    pub algorithm: Algorithm,
    pub n_test: usize,
    pub mse: f64,
    pub rmse: f64,
    pub mae: f64,
    /// Mean absolute error as a fraction of the 4-point trait range.
    pub mean_abs_pct_of_range: f64,
}

impl RegressionReport {
    pub fn from_metrics(target: Trait, algorithm: Algorithm, m: &RegressionMetrics) -> Self {
        Self {
            target,
            algorithm,
            n_test: m.n,
            mse: m.mse,
            rmse: m.rmse,
            mae: m.mae,
            mean_abs_pct_of_range: m.mae / (SCORE_MAX - SCORE_MIN),
        }
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.target, self.algorithm, self.n_test, self.mse, self.rmse, self.mean_abs_pct_of_range
        )
    }
}

pub fn reports_to_csv(reports: &[RegressionReport]) -> String {
    let mut out = format!("{REPORT_CSV_HEADER}\n");
    for r in reports {
        let _ = writeln!(out, "{}", r.csv_row());
    }
    out
}

/// Clipped predictions of `model` for every row of `test`.
pub fn predict_matrix(model: &TrainedModel, test: &FeatureMatrix) -> Result<Vec<f64>> {
    if model.feature_space != test.space || model.features.mode != test.mode {
        return Err(Error::FeatureSpaceMismatch);
    }
    test.features().map(|x| model.predict_slice(x)).collect()
}

/// Clipped predictions over `test` scored against the model's trait.
pub fn evaluate(model: &TrainedModel, test: &FeatureMatrix) -> Result<RegressionReport> {
    let pred = predict_matrix(model, test)?;
    let m = compute_regression_metrics(&pred, &test.targets(model.target))?;
    Ok(RegressionReport::from_metrics(model.target, model.algorithm(), &m))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub n_classes: usize,
    /// `confusion[actual][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub support: Vec<usize>,
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    /// Classes never predicted; their precision is reported as 0.
    pub undefined_precision: Vec<usize>,
    pub macro_precision: f64,
    pub macro_recall: f64,
}

pub fn compute_classification_metrics(
    predicted: &[usize],
    actual: &[usize],
    n_classes: usize,
) -> Result<ClassificationReport> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch(predicted.len(), actual.len()));
    }
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&p, &a) in predicted.iter().zip(actual) {
        for label in [p, a] {
            if label >= n_classes {
                return Err(Error::LabelOutOfRange { label, n_classes });
            }
        }
        confusion[a][p] += 1;
    }
    let support: Vec<usize> = confusion.iter().map(|row| row.iter().sum()).collect();
    let predicted_count: Vec<usize> = (0..n_classes).map(|c| confusion.iter().map(|row| row[c]).sum()).collect();
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision: Vec<f64> = (0..n_classes).map(|c| ratio(confusion[c][c], predicted_count[c])).collect();
    let recall: Vec<f64> = (0..n_classes).map(|c| ratio(confusion[c][c], support[c])).collect();
    let undefined_precision = (0..n_classes).filter(|&c| predicted_count[c] == 0).collect();

    let present: Vec<usize> = (0..n_classes).filter(|&c| support[c] > 0).collect();
    let mean = |v: &[f64]| {
        if present.is_empty() {
            0.0
        } else {
            present.iter().map(|&c| v[c]).sum::<f64>() / present.len() as f64
        }
    };
    Ok(ClassificationReport {
        n_classes,
        macro_precision: mean(&precision),
        macro_recall: mean(&recall),
        confusion,
        support,
        precision,
        recall,
        undefined_precision,
    })
}

/// Precision/recall of a forest classifier on `test`.
pub fn evaluate_classifier(model: &TrainedModel, test: &FeatureMatrix) -> Result<ClassificationReport> {
    let Model::Forest(forest) = &model.model else {
        return Err(Error::InvalidConfig("classification metrics need a forest model".into()));
    };
    if model.feature_space != test.space || model.features.mode != test.mode {
        return Err(Error::FeatureSpaceMismatch);
    }
    let predicted: Vec<usize> = test.features().map(|x| forest.predict_class(x)).collect();
    let actual: Vec<usize> = test.targets(model.target).iter().map(|&s| class_of(s, forest.n_classes)).collect();
    compute_classification_metrics(&predicted, &actual, forest.n_classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn perfect_prediction() {
        let m = compute_regression_metrics(&[1.0, 2.5, 4.0], &[1.0, 2.5, 4.0]).unwrap();
        assert_eq!((m.mse, m.rmse), (0.0, 0.0));
    }

    #[test]
    fn single_pair() {
        let m = compute_regression_metrics(&[3.0], &[1.0]).unwrap();
        assert_eq!((m.mse, m.rmse), (4.0, 2.0));
    }

    #[test]
    fn three_pairs_hand_computed() {
        // squared errors 1, 1, 0
        let m = compute_regression_metrics(&[2.0, 4.0, 3.0], &[1.0, 5.0, 3.0]).unwrap();
        assert_abs_diff_eq!(m.mse, 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(m.rmse, 0.81650, epsilon = 1e-5);
        assert_abs_diff_eq!(m.mae, 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn regression_errors() {
        assert!(matches!(compute_regression_metrics(&[1.0], &[1.0, 2.0]), Err(Error::LengthMismatch(1, 2))));
        assert!(matches!(compute_regression_metrics(&[], &[]), Err(Error::EmptyInput)));
    }

    #[test]
    fn report_csv() {
        let m = compute_regression_metrics(&[3.0], &[1.0]).unwrap();
        let r = RegressionReport::from_metrics(Trait::Ope, Algorithm::Linear, &m);
        assert_eq!(r.mean_abs_pct_of_range, 0.5);
        assert_eq!(reports_to_csv(&[r]), "trait,algorithm,n_test,mse,rmse,mae_pct\nope,linear,1,4,2,0.5\n");
    }

    #[test]
    fn classification_all_correct() {
        let r = compute_classification_metrics(&[0, 1, 2, 2], &[0, 1, 2, 2], 3).unwrap();
        assert_eq!((r.macro_precision, r.macro_recall), (1.0, 1.0));
    }

    #[test]
    fn classification_all_wrong() {
        let r = compute_classification_metrics(&[1, 0, 1], &[0, 1, 0], 2).unwrap();
        assert_eq!((r.macro_precision, r.macro_recall), (0.0, 0.0));
    }

    #[test]
    fn classification_hand_counted_confusion() {
        // class 1: TP 2, FP 1, FN 1; class 0: TN for class 1 is the single (0, 0)
        let actual = [1, 1, 1, 0, 0];
        let predicted = [1, 1, 0, 1, 0];
        let r = compute_classification_metrics(&predicted, &actual, 2).unwrap();
        assert_abs_diff_eq!(r.precision[1], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.recall[1], 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(r.confusion, vec![vec![1, 1], vec![1, 2]]);
        assert_eq!(r.support, vec![2, 3]);
    }

    #[test]
    fn classification_flags_and_errors() {
        let r = compute_classification_metrics(&[0, 0], &[0, 1], 3).unwrap();
        assert_eq!(r.undefined_precision, vec![1, 2]);
        // class 2 has no support and is left out of the macro average
        assert_abs_diff_eq!(r.macro_recall, 0.5, epsilon = 1e-15);
        assert!(matches!(
            compute_classification_metrics(&[3], &[0], 3),
            Err(Error::LabelOutOfRange { label: 3, n_classes: 3 })
        ));
        assert!(compute_classification_metrics(&[0], &[0, 1], 3).is_err());
    }
}
