//! Confusion matrices and the one-vs-rest classification metrics.

use crate::error::{FdaError, Result};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Summary of a prediction run: counts are stored with predicted labels on
/// the rows and target labels on the columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub classes: usize,
    /// `confusion[(predicted, target)]` counts.
    pub confusion: DMatrix<usize>,
    pub per_class: Vec<ClassMetrics>,
    /// Fraction of all points classified correctly.
    pub overall_accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    /// Per-class mean own-class weight, when weights were supplied.
    pub success_rates: Option<Vec<f64>>,
    /// Per-class fraction classified correctly (the confusion diagonal).
    pub accuracy_rates: Vec<f64>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Per-class one-vs-rest metrics plus macro averages.
pub fn evaluate(predictions: &[usize], targets: &[usize], classes: usize) -> Result<MetricsReport> {
    if predictions.len() != targets.len() {
        return Err(FdaError::Config(format!(
            "{} predictions vs {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    let total = targets.len();
    let mut confusion = DMatrix::<usize>::zeros(classes, classes);
    for (&p, &t) in predictions.iter().zip(targets) {
        if p >= classes {
            return Err(FdaError::LabelOutOfRange { label: p, classes });
        }
        if t >= classes {
            return Err(FdaError::LabelOutOfRange { label: t, classes });
        }
        confusion[(p, t)] += 1;
    }
    let mut per_class = Vec::with_capacity(classes);
    for c in 0..classes {
        let tp = confusion[(c, c)];
        let fp = (0..classes)
            .filter(|&t| t != c)
            .map(|t| confusion[(c, t)])
            .sum();
        let fn_ = (0..classes)
            .filter(|&p| p != c)
            .map(|p| confusion[(p, c)])
            .sum();
        let tn = total - tp - fp - fn_;
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class.push(ClassMetrics {
            tp,
            fp,
            fn_,
            tn,
            accuracy: ratio(tp + tn, total),
            precision,
            recall,
            f1,
        });
    }
    let correct: usize = (0..classes).map(|c| confusion[(c, c)]).sum();
    let mean =
        |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / classes.max(1) as f64;
    Ok(MetricsReport {
        classes,
        accuracy_rates: per_class.iter().map(|m| m.recall).collect(),
        overall_accuracy: ratio(correct, total),
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        per_class,
        confusion,
        success_rates: None,
    })
}

/// Like [`evaluate`], additionally averaging each point's own-class weight
/// into the per-class success rates.
pub fn evaluate_with_weights(
    predictions: &[usize],
    targets: &[usize],
    weights: &[Vec<f64>],
    classes: usize,
) -> Result<MetricsReport> {
    let mut report = evaluate(predictions, targets, classes)?;
    if weights.len() != targets.len() {
        return Err(FdaError::Config(format!(
            "{} weight rows vs {} targets",
            weights.len(),
            targets.len()
        )));
    }
    let mut sums = vec![0.0f64; classes];
    let mut counts = vec![0usize; classes];
    for (&t, w) in targets.iter().zip(weights) {
        sums[t] += w[t];
        counts[t] += 1;
    }
    report.success_rates = Some(
        sums.iter()
            .zip(&counts)
            .map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
            .collect(),
    );
    Ok(report)
}

impl MetricsReport {
    /// Confusion matrix with every target column normalized to percentages.
    pub fn confusion_percent(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.classes, self.classes);
        for t in 0..self.classes {
            let col_total: usize = (0..self.classes).map(|p| self.confusion[(p, t)]).sum();
            if col_total > 0 {
                for p in 0..self.classes {
                    out[(p, t)] = 100.0 * self.confusion[(p, t)] as f64 / col_total as f64;
                }
            }
        }
        out
    }
}
