use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown task id {0}")]
    UnknownTask(usize),

    #[error("invalid timing curve for task {task_id}: {reason}")]
    InvalidCurve { task_id: usize, reason: String },

    #[error("invalid timing model: {0}")]
    InvalidModel(String),

    #[error("process count {p} outside the queryable range 1..={max}")]
    ProcsOutOfRange { p: usize, max: usize },

    #[error("infeasible distribution: {procs} processes for {tasks} tasks")]
    Infeasible { procs: usize, tasks: usize },

    #[error("brute-force instance too large ({size} candidate distributions)")]
    InstanceTooLarge { size: u128 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("singular tridiagonal system (zero pivot at row {row})")]
    Singular { row: usize },

    #[error("time step {step}: {source}")]
    Step {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("calibration of task {task_id} at p={p} failed: {source}")]
    Calibration {
        task_id: usize,
        p: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("worker pool exhausted: requested {requested}, {available} of {capacity} free")]
    PoolExhausted {
        requested: usize,
        available: usize,
        capacity: usize,
    },

    #[error("empty assignment")]
    EmptyAssignment,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable name of the variant, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnknownTask(_) => "unknown_task",
            Error::InvalidCurve { .. } => "invalid_curve",
            Error::InvalidModel(_) => "invalid_model",
            Error::ProcsOutOfRange { .. } => "procs_out_of_range",
            Error::Infeasible { .. } => "infeasible",
            Error::InstanceTooLarge { .. } => "instance_too_large",
            Error::Parameter(_) => "parameter",
            Error::Singular { .. } => "singular",
            Error::Step { .. } => "solver_step",
            Error::Calibration { .. } => "calibration",
            Error::PoolExhausted { .. } => "pool_exhausted",
            Error::EmptyAssignment => "empty_assignment",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
            Error::Csv(_) => "csv",
            Error::Json(_) => "json",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
