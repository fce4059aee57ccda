use std::hint::black_box;
use std::time::Instant;

use super::config::BenchmarkTask;
use crate::error::{Error, Result};
use crate::pool::{Lease, WorkerPool};
use crate::schrodinger::{integrate, AbcParams, Boundary, PdeProblem, SolverMode};
use crate::timing_model::{TimingCurve, TimingModel};

const UNIT_ITERATIONS: u32 = 10_000;

/// Burns a fixed amount of CPU time.
pub fn busy_work(units: u64) -> f64 {
    let mut x = black_box(1.0f64);
    for _ in 0..units {
        for _ in 0..UNIT_ITERATIONS {
            x = black_box(x * 1.000_000_1 + 1e-9);
        }
    }
    x
}

/// Parameters used for PDE benchmark runs; timing does not depend on them.
pub fn benchmark_abc() -> AbcParams {
    AbcParams { a: [1.0; 4], d: [1.0; 3] }
}

/// Partition used for a problem solved on `p` workers: one block per
/// worker, limited by the two-rows-per-block minimum.
pub fn solver_mode_for(problem: &PdeProblem, p: usize) -> SolverMode {
    let blocks = p.min(problem.nodes() / 2).max(1);
    if blocks == 1 {
        SolverMode::Thomas
    } else {
        SolverMode::Team { blocks, workers: blocks }
    }
}

fn run_task(task: &BenchmarkTask, lease: &Lease) -> Result<()> {
    match task {
        BenchmarkTask::Pde { problem } => {
            integrate(problem, &Boundary::Abc(benchmark_abc()), solver_mode_for(problem, lease.size()))?;
        }
        BenchmarkTask::SerialWork { units } => {
            busy_work(*units);
        }
        BenchmarkTask::SplitWork { units, parts } => {
            if *parts == 0 {
                return Err(Error::Parameter("split work needs at least one part".into()));
            }
            let chunk = units / *parts as u64;
            lease.run_team(|ctx| {
                for _ in (ctx.rank..*parts).step_by(ctx.size) {
                    busy_work(chunk);
                }
            });
        }
    }
    Ok(())
}

/// Measures every task on every process count and keeps the minimum over
/// `repetitions`. For each `p` all tasks run at the same time, each on its
/// own group of `p` workers. Task `i` of `tasks` becomes task id `i + 1`.
pub fn calibrate(tasks: &[BenchmarkTask], process_counts: &[usize], repetitions: usize) -> Result<TimingModel> {
    calibrate_loaded(tasks, process_counts, repetitions, 0)
}

/// [`calibrate`] with the machine loaded as in production: for each `p`,
/// `max(1, capacity / (M p))` copies of the task set run at once and a
/// task's time is the mean over its copies.
pub fn calibrate_loaded(
    tasks: &[BenchmarkTask],
    process_counts: &[usize],
    repetitions: usize,
    capacity: usize,
) -> Result<TimingModel> {
    if tasks.is_empty() {
        return Err(Error::Parameter("calibration needs at least one task".into()));
    }
    if repetitions == 0 {
        return Err(Error::Parameter("calibration needs at least one repetition".into()));
    }
    let mut counts = process_counts.to_vec();
    counts.sort_unstable();
    counts.dedup();
    if counts.first() != Some(&1) {
        return Err(Error::Parameter("calibration process counts must include 1".into()));
    }
    let m = tasks.len();
    let mut best = vec![vec![f64::INFINITY; counts.len()]; m];
    for (ci, &p) in counts.iter().enumerate() {
        let copies = (capacity / (m * p)).max(1);
        let pool = WorkerPool::new(copies * m * p)?;
        for _ in 0..repetitions {
            let times: Vec<Result<f64>> = std::thread::scope(|s| {
                let handles: Vec<_> = (0..copies)
                    .flat_map(|_| tasks.iter())
                    .map(|task| {
                        let pool = &pool;
                        s.spawn(move || {
                            let lease = pool.lease(p)?;
                            let start = Instant::now();
                            run_task(task, &lease)?;
                            Ok(start.elapsed().as_secs_f64())
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().unwrap_or_else(|_| Err(Error::Parameter("benchmark task panicked".into()))))
                    .collect()
            });
            let mut sum = vec![0.0; m];
            for (i, t) in times.into_iter().enumerate() {
                let t = t.map_err(|e| Error::Calibration {
                    task_id: i % m + 1,
                    p,
                    source: Box::new(e),
                })?;
                sum[i % m] += t;
            }
            for (row, s) in best.iter_mut().zip(sum) {
                row[ci] = row[ci].min(s / copies as f64);
            }
        }
    }
    let curves = best
        .into_iter()
        .enumerate()
        .map(|(i, row)| TimingCurve::new(i + 1, counts.iter().copied().zip(row)))
        .collect::<Result<Vec<_>>>()?;
    TimingModel::new(curves, *counts.last().unwrap())
}
