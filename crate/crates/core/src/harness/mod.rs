//! Experiment driver: configuration, calibration, simulated and real runs,
//! boundary-parameter optimisation and report output.
//!
//! Reports are JSON ([`RunReport`]); timing models, Gantt data and
//! optimiser benchmarks are CSV.

mod bench;
mod calibrate;
mod config;
mod experiment;
mod gantt;

pub use bench::{nm_bench, write_bench_csv, BenchRow, BenchVariant};
pub use calibrate::{benchmark_abc, busy_work, calibrate, calibrate_loaded, solver_mode_for};
pub use config::{
    AbcStart, BenchmarkTask, CalibrationConfig, CurveSpec, ExperimentConfig, Mode, OutputPaths, SuiteConfig,
    VariantSpec,
};
pub use experiment::{
    optimize_abc, optimize_abc_sequential, optimize_abc_with, run_experiment, start_point, variant_reports, AbcReport,
    Measurement, PoolObjective, RunReport, VariantReport, WorkerGroups,
};
pub use gantt::{emit_gantt, gantt_rows, GanttRow};
