//! Classification and regression metrics.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("empty input")]
    EmptyInput,
    #[error("length mismatch: {preds} predictions vs {golds} gold labels")]
    LengthMismatch { preds: usize, golds: usize },
    #[error("label {label} outside 0..{classes}")]
    LabelOutOfRange { label: usize, classes: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    pub macro_f1: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub accuracy: f64,
    /// F1 of the designated positive class (e.g. "fake").
    pub positive_f1: f64,
    pub per_class: Vec<ClassScores>,
    /// Row = gold class, column = predicted class.
    pub confusion: Vec<Vec<usize>>,
    /// Classes with no gold instance; their recall and F1 are 0.
    pub absent_classes: Vec<usize>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Macro-averaged scores over `classes` labels. Undefined ratios count as 0.
pub fn classification_metrics(
    preds: &[usize],
    golds: &[usize],
    classes: usize,
    positive_class: usize,
) -> Result<ClassificationReport, MetricError> {
    if preds.len() != golds.len() {
        return Err(MetricError::LengthMismatch {
            preds: preds.len(),
            golds: golds.len(),
        });
    }
    if preds.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    for &label in preds.iter().chain(golds).chain([&positive_class]) {
        if label >= classes {
            return Err(MetricError::LabelOutOfRange { label, classes });
        }
    }
    let mut confusion = vec![vec![0usize; classes]; classes];
    for (&p, &g) in preds.iter().zip(golds) {
        confusion[g][p] += 1;
    }
    let mut per_class = Vec::with_capacity(classes);
    let mut absent_classes = Vec::new();
    for c in 0..classes {
        let tp = confusion[c][c];
        let gold_c: usize = confusion[c].iter().sum();
        let pred_c: usize = confusion.iter().map(|row| row[c]).sum();
        if gold_c == 0 {
            absent_classes.push(c);
        }
        let precision = ratio(tp, pred_c);
        let recall = ratio(tp, gold_c);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        per_class.push(ClassScores {
            precision,
            recall,
            f1,
            support: gold_c,
        });
    }
    let mean = |f: fn(&ClassScores) -> f64| per_class.iter().map(f).sum::<f64>() / classes as f64;
    let correct: usize = (0..classes).map(|c| confusion[c][c]).sum();
    Ok(ClassificationReport {
        macro_f1: mean(|s| s.f1),
        macro_precision: mean(|s| s.precision),
        macro_recall: mean(|s| s.recall),
        accuracy: ratio(correct, preds.len()),
        positive_f1: per_class[positive_class].f1,
        per_class,
        confusion,
        absent_classes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegressionReport {
    pub rmse: f64,
    pub median_ae: f64,
    pub mae: f64,
}

pub fn regression_metrics(preds: &[f64], golds: &[f64]) -> Result<RegressionReport, MetricError> {
    if preds.len() != golds.len() {
        return Err(MetricError::LengthMismatch {
            preds: preds.len(),
            golds: golds.len(),
        });
    }
    if preds.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let n = preds.len() as f64;
    let mut abs: Vec<f64> = preds.iter().zip(golds).map(|(p, g)| (p - g).abs()).collect();
    let mae = abs.iter().sum::<f64>() / n;
    let rmse = (abs.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
    abs.sort_by(|a, b| a.total_cmp(b));
    let mid = abs.len() / 2;
    let median_ae = if abs.len() % 2 == 1 {
        abs[mid]
    } else {
        0.5 * (abs[mid - 1] + abs[mid])
    };
    Ok(RegressionReport {
        rmse,
        median_ae,
        mae,
    })
}

/// Index of the largest score; the first one wins ties.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions() {
        let y = [0, 1, 2, 1, 0];
        let r = classification_metrics(&y, &y, 3, 1).unwrap();
        assert_eq!((r.macro_f1, r.macro_precision, r.macro_recall, r.accuracy), (1.0, 1.0, 1.0, 1.0));
        assert!(r.absent_classes.is_empty());
    }

    #[test]
    fn balanced_binary_confusion() {
        // TP, FP, FN, TN with class 1 positive.
        let preds = [1, 1, 0, 0];
        let golds = [1, 0, 1, 0];
        let r = classification_metrics(&preds, &golds, 2, 1).unwrap();
        assert_eq!(r.macro_f1, 0.5);
        assert_eq!(r.accuracy, 0.5);
        assert_eq!(r.positive_f1, 0.5);
        assert_eq!(r.confusion, vec![vec![1, 1], vec![1, 1]]);
    }

    #[test]
    fn absent_class_scores_zero() {
        let r = classification_metrics(&[0, 0, 1], &[0, 0, 1], 3, 0).unwrap();
        assert_eq!(r.absent_classes, vec![2]);
        assert_eq!(r.per_class[2].f1, 0.0);
        assert!((r.macro_f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert_eq!(classification_metrics(&[], &[], 2, 0).unwrap_err(), MetricError::EmptyInput);
        assert!(matches!(
            classification_metrics(&[0], &[0, 1], 2, 0),
            Err(MetricError::LengthMismatch { .. })
        ));
        assert_eq!(regression_metrics(&[], &[]).unwrap_err(), MetricError::EmptyInput);
    }

    #[test]
    fn regression_worked_cases() {
        let r = regression_metrics(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!((r.rmse, r.median_ae, r.mae), (0.0, 0.0, 0.0));
        let r = regression_metrics(&[1.0, -1.0, 2.0], &[0.0, 0.0, 0.0]).unwrap();
        assert!((r.mae - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.median_ae, 1.0);
        assert!((r.rmse - 2f64.sqrt()).abs() < 1e-15);
        let r = regression_metrics(&[3.0], &[0.0]).unwrap();
        assert_eq!((r.rmse, r.median_ae, r.mae), (3.0, 3.0, 3.0));
    }
}
