use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

use super::run::RunReport;

/// Writes the plot inputs for a finished run:
///
/// * `length_predictions.csv`: `true_length,predicted_length`, one row per
///   held-out token (raw regression output).
/// * `constitution_accuracy.csv`: `n,direction,accuracy` (accuracy in percent).
///
/// A file is only written when its task is present. Errors when neither is.
pub fn export_figure_data(report: &RunReport, dir: &Path) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    if let Some(length) = report.report("length") {
        if length.length_predictions.is_empty() {
            return Err(Error::Validation("length report has no predictions".into()));
        }
        let path = dir.join("length_predictions.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["true_length", "predicted_length"])?;
        for (t, p) in &length.length_predictions {
            w.write_record([t.to_string(), p.to_string()])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }

    let mut rows = Vec::new();
    for r in &report.reports {
        let mut parts = r.task.split('/');
        if parts.next() != Some("constitution") {
            continue;
        }
        let (Some(direction), Some(n)) = (parts.next(), parts.next()) else {
            continue;
        };
        let Some(acc) = r.mean("accuracy") else {
            continue;
        };
        let n: usize = n
            .parse()
            .map_err(|_| Error::Validation(format!("malformed task tag {:?}", r.task)))?;
        rows.push((direction.to_string(), n, acc));
    }
    if !rows.is_empty() {
        rows.sort_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
        let path = dir.join("constitution_accuracy.csv");
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(["n", "direction", "accuracy"])?;
        for (direction, n, acc) in rows {
            w.write_record([n.to_string(), direction, format!("{:.2}", acc * 100.0)])?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        written.push(path);
    }

    if written.is_empty() {
        return Err(Error::Validation(
            "report has neither length nor constitution results".into(),
        ));
    }
    Ok(written)
}
