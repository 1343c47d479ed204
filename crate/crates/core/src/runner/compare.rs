use std::collections::BTreeSet;

use serde::Serialize;

use super::run::RunReport;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricDelta {
    pub task: String,
    pub metric: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
}

impl MetricDelta {
    pub fn delta(&self) -> Option<f64> {
        Some(self.b? - self.a?)
    }
}

/// Differences between two run reports. Empty when the reports agree.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ReportDiff {
    /// Differences in inputs and shape (config, embeddings, folds, failures).
    pub structural: Vec<String>,
    /// Mean metrics that differ, including ones present on one side only.
    pub metrics: Vec<MetricDelta>,
    /// Per-fold values that differ, as `task/metric/fold` keys.
    pub fold_values: Vec<String>,
}

impl ReportDiff {
    pub fn is_empty(&self) -> bool {
        self.structural.is_empty() && self.metrics.is_empty() && self.fold_values.is_empty()
    }
}

fn same(a: f64, b: f64) -> bool {
    a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan())
}

pub fn compare_reports(a: &RunReport, b: &RunReport) -> ReportDiff {
    let mut diff = ReportDiff::default();
    let mut note = |what: &str, differs: bool| {
        if differs {
            diff.structural.push(format!("{what} differs"));
        }
    };
    note("version", a.version != b.version);
    note("config", a.config != b.config);
    note("embedding_sha256", a.embedding_sha256 != b.embedding_sha256);
    note("vocabulary size", a.n_tokens != b.n_tokens);
    note("dimension", a.dim != b.dim);
    note("fold sizes", a.fold_sizes != b.fold_sizes);
    note("failures", a.failures != b.failures);

    let tasks: BTreeSet<&str> = a
        .reports
        .iter()
        .chain(&b.reports)
        .map(|r| r.task.as_str())
        .collect();
    for task in tasks {
        let (ra, rb) = (a.report(task), b.report(task));
        let names: BTreeSet<&String> = ra
            .iter()
            .chain(rb.iter())
            .flat_map(|r| r.metrics.keys())
            .collect();
        for name in names {
            let ma = ra.and_then(|r| r.metrics.get(name));
            let mb = rb.and_then(|r| r.metrics.get(name));
            let va = ma.map(|m| m.mean);
            let vb = mb.map(|m| m.mean);
            let differs = match (va, vb) {
                (Some(x), Some(y)) => !same(x, y),
                _ => true,
            };
            if differs {
                diff.metrics.push(MetricDelta {
                    task: task.to_string(),
                    metric: name.clone(),
                    a: va,
                    b: vb,
                });
            }
            if let (Some(ma), Some(mb)) = (ma, mb) {
                let n = ma.per_fold.len().max(mb.per_fold.len());
                for i in 0..n {
                    let eq = match (ma.per_fold.get(i), mb.per_fold.get(i)) {
                        (Some(&x), Some(&y)) => same(x, y),
                        _ => false,
                    };
                    if !eq {
                        diff.fold_values.push(format!("{task}/{name}/{i}"));
                    }
                }
            }
        }
    }
    diff
}
