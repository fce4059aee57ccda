use std::path::Path;

use serde::{Deserialize, Serialize};

use super::experiment::RunReport;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GanttRow {
    pub task_id: usize,
    pub procs: usize,
    pub predicted_seconds: f64,
}

/// One row per task of a single copy of the selected variant.
pub fn gantt_rows(report: &RunReport) -> Result<Vec<GanttRow>> {
    let v = report.variants.get(report.selected).ok_or(Error::EmptyAssignment)?;
    let a = v.plan.assignment.as_ref().ok_or(Error::EmptyAssignment)?;
    if a.tasks.is_empty() || v.predicted_times.len() != a.tasks.len() {
        return Err(Error::EmptyAssignment);
    }
    Ok(a.tasks
        .iter()
        .zip(&a.procs)
        .zip(&v.predicted_times)
        .map(|((&task_id, &procs), &predicted_seconds)| GanttRow {
            task_id,
            procs,
            predicted_seconds,
        })
        .collect())
}

/// CSV with columns `task_id,procs,predicted_seconds`.
pub fn emit_gantt(report: &RunReport, path: impl AsRef<Path>) -> Result<()> {
    let rows = gantt_rows(report)?;
    let mut w = csv::Writer::from_path(path.as_ref())?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path.as_ref(), e))
}
