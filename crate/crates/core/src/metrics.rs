//! Evaluation metrics: mean squared error, support-weighted F1 and accuracy.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Mean of squared differences.
pub fn mse<T: Scalar>(preds: &[T], labels: &[T]) -> Result<T> {
    if preds.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::Validation("mse of an empty set".into()));
    }
    let sum: T = preds.iter().zip(labels).map(|(&p, &l)| (p - l) * (p - l)).sum();
    Ok(sum / T::from_usize(preds.len()).unwrap())
}

/// Turns a regressed length into a class: nearest integer, ties away from
/// zero, never below 1.
pub fn round_to_class(pred: f64) -> u32 {
    // NaN falls through `max` to 1
    let r = pred.round().max(1.0);
    if r >= u32::MAX as f64 {
        u32::MAX
    } else {
        r as u32
    }
}

/// Per-class confusion counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl ClassCounts {
    pub fn support(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall, computed from counts so a
    /// perfect class scores exactly 1.
    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

fn check_pair<C>(preds: &[C], labels: &[C]) -> Result<()> {
    if preds.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} labels",
            preds.len(),
            labels.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::Validation("metric of an empty set".into()));
    }
    Ok(())
}

/// Confusion counts for every class in `labels ∪ preds`.
pub fn class_counts<C: Ord + Copy>(preds: &[C], labels: &[C]) -> Result<BTreeMap<C, ClassCounts>> {
    check_pair(preds, labels)?;
    let mut counts: BTreeMap<C, ClassCounts> = BTreeMap::new();
    for (&p, &l) in preds.iter().zip(labels) {
        if p == l {
            counts.entry(l).or_default().tp += 1;
        } else {
            counts.entry(p).or_default().fp += 1;
            counts.entry(l).or_default().fn_ += 1;
        }
    }
    Ok(counts)
}

/// F1 averaged over classes with weights proportional to true-label support.
pub fn weighted_f1<C: Ord + Copy>(preds: &[C], labels: &[C]) -> Result<f64> {
    let counts = class_counts(preds, labels)?;
    let total = labels.len() as f64;
    Ok(counts
        .values()
        .map(|c| c.support() as f64 * c.f1())
        .sum::<f64>()
        / total)
}

pub fn accuracy<C: PartialEq>(preds: &[C], labels: &[C]) -> Result<f64> {
    check_pair(preds, labels)?;
    let hits = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / preds.len() as f64)
}

/// Accuracy of always predicting the most frequent label.
pub fn majority_baseline<C: Ord + Copy>(labels: &[C]) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::Validation("baseline of an empty set".into()));
    }
    let mut freq: BTreeMap<C, usize> = BTreeMap::new();
    for &l in labels {
        *freq.entry(l).or_default() += 1;
    }
    Ok(*freq.values().max().unwrap() as f64 / labels.len() as f64)
}

/// Population variance, the MSE of the best constant predictor.
pub fn variance(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::Validation("variance of an empty set".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Ok(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n)
}

/// Scores of one metric across folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub per_fold: Vec<f64>,
    pub mean: f64,
}

impl MetricSummary {
    pub fn from_folds(per_fold: Vec<f64>) -> Self {
        let mean = if per_fold.is_empty() {
            f64::NAN
        } else {
            per_fold.iter().sum::<f64>() / per_fold.len() as f64
        };
        MetricSummary { per_fold, mean }
    }
}

/// What happened in one cross-validation fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub train_size: usize,
    pub eval_size: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub skipped: Option<String>,
    pub final_train_loss: Option<f64>,
    pub metrics: BTreeMap<String, f64>,
}

/// Aggregate over held-out examples sharing a key (true length, class...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakdownRow {
    pub key: String,
    pub count: usize,
    pub accuracy: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mean_prediction: Option<f64>,
}

/// Cross-validated results of one probe task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub task: String,
    pub metrics: BTreeMap<String, MetricSummary>,
    pub folds: Vec<FoldRecord>,
    /// Held-out examples per true class, summed over folds.
    pub class_support: BTreeMap<String, usize>,
    pub breakdown: Vec<BreakdownRow>,
    pub dropped: usize,
    /// Reference scores of trivial predictors on the same held-out data.
    pub baselines: BTreeMap<String, f64>,
    /// `(true, predicted)` pairs of the length probe, for plotting.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub length_predictions: Vec<(u32, f64)>,
    pub notes: Vec<String>,
}

impl MetricsReport {
    pub fn new(task: impl Into<String>) -> Self {
        MetricsReport {
            task: task.into(),
            metrics: BTreeMap::new(),
            folds: Vec::new(),
            class_support: BTreeMap::new(),
            breakdown: Vec::new(),
            dropped: 0,
            baselines: BTreeMap::new(),
            length_predictions: Vec::new(),
            notes: Vec::new(),
        }
    }

    /// Fills `metrics` from the non-skipped fold records.
    pub fn aggregate(&mut self) {
        let mut by_name: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for f in self.folds.iter().filter(|f| f.skipped.is_none()) {
            for (k, &v) in &f.metrics {
                by_name.entry(k.clone()).or_default().push(v);
            }
        }
        self.metrics = by_name
            .into_iter()
            .map(|(k, v)| (k, MetricSummary::from_folds(v)))
            .collect();
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.metrics.get(metric).map(|m| m.mean)
    }

    pub fn eval_size(&self) -> usize {
        self.folds.iter().filter(|f| f.skipped.is_none()).map(|f| f.eval_size).sum()
    }
}

/// Formats a fraction as a percentage with two decimals.
pub fn percent(v: f64) -> String {
    format!("{:.2}", v * 100.0)
}
