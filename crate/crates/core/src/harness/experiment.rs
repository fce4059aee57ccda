use std::path::Path;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::calibrate::{calibrate_loaded, solver_mode_for};
use super::config::{AbcStart, BenchmarkTask, ExperimentConfig, Mode};
use super::gantt::emit_gantt;
use crate::error::{Error, Result};
use crate::neldermead::{minimize, BatchObjective, EvalStats, Progress, Variant};
use crate::pool::WorkerPool;
use crate::scheduler::{select_with_model, Selection, TaskSet, VariantPlan};
use crate::schrodinger::{integrate, AbcParams, Boundary, PdeProblem, SolverMode};
use crate::timing_model::TimingModel;

/// One variant's schedule with the per-task predictions of one copy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantReport {
    #[serde(flatten)]
    pub plan: VariantPlan,
    /// Empty when the variant has no feasible assignment.
    pub predicted_times: Vec<f64>,
    /// Sum of one-process times over the block divided by the useful-point
    /// time; only when every curve has a `p = 1` sample.
    pub speedup: Option<f64>,
    /// `speedup / active_procs`.
    pub efficiency: Option<f64>,
}

/// Wall-clock results of executing one block of the selected variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    /// Per copy, per task.
    pub task_seconds: Vec<Vec<f64>>,
    /// Wall time of the whole concurrent block.
    pub makespan: f64,
    pub predicted_makespan: f64,
    /// `makespan / (gamma * k)`.
    pub useful_point_time: f64,
    /// The same tasks solved one after another with the sequential solver.
    pub sequential_seconds: f64,
    /// `sequential_seconds / useful_point_time`.
    pub speedup: f64,
    /// Most workers leased at once.
    pub peak_workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbcReport {
    pub variant: usize,
    pub start: Vec<f64>,
    pub initial_value: f64,
    pub best_value: f64,
    pub best: AbcParams,
    pub iterations: usize,
    pub stats: EvalStats,
    pub progress: Vec<Progress>,
    pub peak_workers: usize,
    /// Best point of the sequential reference run, when requested.
    pub sequential_best: Option<AbcParams>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub mode: Mode,
    pub procs: usize,
    pub e_min: f64,
    pub seed: u64,
    pub num_tasks: usize,
    /// Sum over the block of the one-process times, when known.
    pub sequential_time: Option<f64>,
    pub variants: Vec<VariantReport>,
    /// Index into `variants`.
    pub selected: usize,
    /// Predicted makespan of one block of the selected variant.
    pub model_makespan: f64,
    pub useful_point_time: f64,
    pub measured: Option<Measurement>,
    pub optimization: Option<AbcReport>,
}

impl RunReport {
    pub fn selected_variant(&self) -> &VariantReport {
        &self.variants[self.selected]
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn sequential_time(model: &TimingModel, tasks: &TaskSet) -> Option<f64> {
    tasks
        .tasks()
        .iter()
        .map(|&t| {
            let c = model.curve(t).ok()?;
            (c.samples().first()?.procs == 1).then(|| c.at(1))
        })
        .sum()
}

pub fn variant_reports(model: &TimingModel, tasks: &TaskSet, selection: &Selection) -> Result<Vec<VariantReport>> {
    let t1 = sequential_time(model, tasks);
    selection
        .plans
        .iter()
        .map(|plan| {
            let predicted_times = match &plan.assignment {
                Some(a) => a.predicted_times(model)?,
                None => Vec::new(),
            };
            let speedup = t1.zip(plan.useful_point_time).map(|(s, u)| s / u);
            let efficiency = speedup
                .filter(|_| plan.active_procs > 0)
                .map(|s| s / plan.active_procs as f64);
            Ok(VariantReport {
                plan: plan.clone(),
                predicted_times,
                speedup,
                efficiency,
            })
        })
        .collect()
}

struct Prepared {
    problems: Vec<PdeProblem>,
    model: TimingModel,
    tasks: TaskSet,
    selection: Selection,
}

fn prepare(config: &ExperimentConfig) -> Result<Prepared> {
    config.validate()?;
    let problems = config.problems()?;
    let model = match config.timing_model()? {
        Some(m) => m,
        None => {
            let cal = config.calibration.as_ref().ok_or_else(|| {
                Error::Config("no timing model: give `model`, `timing_table` or `calibration`".into())
            })?;
            let tasks = if cal.tasks.is_empty() {
                problems
                    .iter()
                    .map(|p| BenchmarkTask::Pde { problem: p.clone() })
                    .collect()
            } else {
                cal.tasks.clone()
            };
            let m = calibrate_loaded(&tasks, &cal.process_counts, cal.repetitions, config.procs)?;
            let m = m.with_max_procs(config.procs)?;
            if let Some(path) = &config.outputs.model {
                m.save(path)?;
            }
            m
        }
    };
    if config.mode == Mode::Real && model.num_tasks() != problems.len() {
        return Err(Error::Config(format!(
            "timing model has {} tasks but the suite has {} problems",
            model.num_tasks(),
            problems.len()
        )));
    }
    let tasks = TaskSet::all(&model);
    let selection = select_with_model(
        &config.profiles()?,
        &model,
        &tasks,
        config.procs,
        config.distribute_options(),
    )?;
    Ok(Prepared {
        problems,
        model,
        tasks,
        selection,
    })
}

/// Schedules the configured block and, in real mode, executes it (and
/// optionally the boundary-parameter optimisation). Writes the configured
/// outputs.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    let prep = prepare(config)?;
    let variants = variant_reports(&prep.model, &prep.tasks, &prep.selection)?;
    let plan = prep.selection.selected_plan();
    let (Some(makespan), Some(useful)) = (plan.makespan, plan.useful_point_time) else {
        return Err(Error::EmptyAssignment);
    };
    let mut report = RunReport {
        mode: config.mode,
        procs: config.procs,
        e_min: config.e_min,
        seed: config.seed,
        num_tasks: prep.model.num_tasks(),
        sequential_time: sequential_time(&prep.model, &prep.tasks),
        variants,
        selected: prep.selection.selected,
        model_makespan: makespan,
        useful_point_time: useful,
        measured: None,
        optimization: None,
    };
    if config.mode == Mode::Real {
        let procs = plan.assignment.as_ref().map(|a| a.procs.clone()).unwrap_or_default();
        let pool = WorkerPool::new(config.procs)?;
        report.measured = Some(measure_block(&prep.problems, &procs, plan, &pool)?);
        if config.optimize {
            report.optimization = Some(optimize_selected(config, &prep, &pool)?);
        }
    }
    if let Some(path) = &config.outputs.report {
        report.save(path)?;
    }
    if let Some(path) = &config.outputs.gantt {
        emit_gantt(&report, path)?;
    }
    Ok(report)
}

/// Real-mode boundary-parameter optimisation with the variant and worker
/// groups chosen by the scheduler.
pub fn optimize_abc(config: &ExperimentConfig) -> Result<AbcReport> {
    if config.mode != Mode::Real {
        return Err(Error::Config("boundary-parameter optimisation runs in real mode only".into()));
    }
    let prep = prepare(config)?;
    let pool = WorkerPool::new(config.procs)?;
    optimize_selected(config, &prep, &pool)
}

fn optimize_selected(config: &ExperimentConfig, prep: &Prepared, pool: &WorkerPool) -> Result<AbcReport> {
    let plan = prep.selection.selected_plan();
    let variant = Variant::from_k(plan.profile.parallel_degree)?;
    let procs = plan.assignment.as_ref().ok_or(Error::EmptyAssignment)?.procs.clone();
    let start = start_point(&config.abc_start, config.seed)?;
    let groups = WorkerGroups::fixed(&prep.problems, config.procs, procs);
    let mut report = optimize_abc_with(
        &prep.problems,
        &groups,
        variant,
        pool,
        &start,
        config.nm_iterations,
        config.nm_tolerance,
    )?;
    let seq = optimize_abc_sequential(&prep.problems, &groups, &start, config.nm_iterations, config.nm_tolerance)?;
    report.sequential_best = Some(seq.best);
    Ok(report)
}

pub fn start_point(start: &AbcStart, seed: u64) -> Result<Vec<f64>> {
    match start {
        AbcStart::Ones => Ok(vec![1.0; AbcParams::DIM]),
        AbcStart::Random { low, high } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..AbcParams::DIM).map(|_| rng.gen_range(*low..=*high)).collect())
        }
        AbcStart::Given { values } => Ok(AbcParams::from_slice(values)?.to_vec()),
    }
}

fn measure_block(problems: &[PdeProblem], procs: &[usize], plan: &VariantPlan, pool: &WorkerPool) -> Result<Measurement> {
    if procs.len() != problems.len() {
        return Err(Error::EmptyAssignment);
    }
    let abc = Boundary::Abc(super::calibrate::benchmark_abc());
    let start = Instant::now();
    let mut sequential = Vec::with_capacity(problems.len());
    for p in problems {
        integrate(p, &abc, SolverMode::Thomas)?;
        sequential.push(start.elapsed().as_secs_f64());
    }
    let sequential_seconds = start.elapsed().as_secs_f64();

    pool.reset_peak();
    let copies = plan.copies;
    let start = Instant::now();
    let results: Vec<Result<f64>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..copies)
            .flat_map(|_| problems.iter().zip(procs))
            .map(|(problem, &p)| {
                let abc = &abc;
                s.spawn(move || {
                    let lease = pool.lease(p)?;
                    let t = Instant::now();
                    integrate(problem, abc, solver_mode_for(problem, lease.size()))?;
                    Ok(t.elapsed().as_secs_f64())
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Parameter("task panicked".into()))))
            .collect()
    });
    let makespan = start.elapsed().as_secs_f64();
    let times = results.into_iter().collect::<Result<Vec<_>>>()?;
    let useful = makespan / (plan.profile.gamma * plan.profile.parallel_degree as f64);
    Ok(Measurement {
        task_seconds: times.chunks(problems.len()).map(<[f64]>::to_vec).collect(),
        makespan,
        predicted_makespan: plan.makespan.unwrap_or(f64::NAN),
        useful_point_time: useful,
        sequential_seconds,
        speedup: sequential_seconds / useful,
        peak_workers: pool.peak(),
    })
}

/// Worker group size and partition of every problem. The partition is
/// fixed independently of the group size, so every way of running the
/// objective does the same arithmetic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkerGroups {
    pub procs: Vec<usize>,
    pub blocks: Vec<usize>,
}

impl WorkerGroups {
    /// Partitions each problem into `min(max_blocks, nodes / 2)` blocks.
    pub fn fixed(problems: &[PdeProblem], max_blocks: usize, procs: Vec<usize>) -> Self {
        let blocks = problems.iter().map(|p| max_blocks.min(p.nodes() / 2).max(1)).collect();
        Self { procs, blocks }
    }

    fn mode(&self, m: usize, workers: usize) -> SolverMode {
        let blocks = self.blocks[m];
        SolverMode::Team {
            blocks,
            workers: workers.clamp(1, blocks),
        }
    }
}

/// Objective over a problem set where each point of a batch is one copy of
/// the task block and every task runs on its own leased worker group.
pub struct PoolObjective<'a> {
    problems: &'a [PdeProblem],
    groups: &'a WorkerGroups,
    /// `None` runs everything on the calling thread.
    pool: Option<&'a WorkerPool>,
    copies: usize,
    first: Option<f64>,
    error: Option<Error>,
}

impl<'a> PoolObjective<'a> {
    pub fn new(problems: &'a [PdeProblem], groups: &'a WorkerGroups, pool: &'a WorkerPool, copies: usize) -> Self {
        Self {
            problems,
            groups,
            pool: Some(pool),
            copies: copies.max(1),
            first: None,
            error: None,
        }
    }

    pub fn sequential(problems: &'a [PdeProblem], groups: &'a WorkerGroups) -> Self {
        Self {
            problems,
            groups,
            pool: None,
            copies: 1,
            first: None,
            error: None,
        }
    }

    /// Value of the first point ever evaluated.
    pub fn first_value(&self) -> Option<f64> {
        self.first
    }

    /// The first non-numerical failure, if any evaluation hit one.
    pub fn take_error(&mut self) -> Option<Error> {
        self.error.take()
    }

    fn solve(&self, m: usize, abc: &AbcParams, workers: usize) -> Result<f64> {
        match integrate(&self.problems[m], &Boundary::Abc(*abc), self.groups.mode(m, workers)) {
            Ok(out) => Ok(out.max_error),
            Err(Error::Step { .. }) => Ok(f64::INFINITY),
            Err(e) => Err(e),
        }
    }

    fn point(&self, x: &[f64]) -> Result<f64> {
        let abc = AbcParams::from_slice(x)?;
        let mut worst = 0.0f64;
        for m in 0..self.problems.len() {
            worst = max_err(worst, self.solve(m, &abc, 1)?);
        }
        Ok(worst)
    }

    fn batch(&self, pool: &WorkerPool, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        let abcs = points.iter().map(|x| AbcParams::from_slice(x)).collect::<Result<Vec<_>>>()?;
        let m = self.problems.len();
        let values: Vec<Result<f64>> = std::thread::scope(|s| {
            let handles: Vec<_> = abcs
                .iter()
                .flat_map(|abc| (0..m).map(move |i| (abc, i)))
                .map(|(abc, i)| {
                    s.spawn(move || {
                        let lease = pool.lease(self.groups.procs[i])?;
                        self.solve(i, abc, lease.size())
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(Error::Parameter("objective task panicked".into()))))
                .collect()
        });
        let values = values.into_iter().collect::<Result<Vec<_>>>()?;
        Ok(values.chunks(m).map(|c| c.iter().fold(0.0, |a, &v| max_err(a, v))).collect())
    }
}

fn max_err(acc: f64, v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        acc.max(v)
    }
}

impl BatchObjective for PoolObjective<'_> {
    fn evaluate(&mut self, points: &[Vec<f64>]) -> Vec<f64> {
        let mut out = Vec::with_capacity(points.len());
        for chunk in points.chunks(self.copies) {
            let vals = match self.pool {
                Some(pool) => self.batch(pool, chunk),
                None => chunk.iter().map(|x| self.point(x)).collect(),
            };
            match vals {
                Ok(v) => out.extend(v),
                Err(e) => {
                    self.error.get_or_insert(e);
                    out.extend(std::iter::repeat_n(f64::INFINITY, chunk.len()));
                }
            }
        }
        if self.first.is_none() {
            self.first = out.first().copied();
        }
        out
    }
}

fn finish(
    variant: usize,
    start: &[f64],
    obj: &mut PoolObjective<'_>,
    result: crate::neldermead::OptimizeResult,
    peak_workers: usize,
) -> Result<AbcReport> {
    if let Some(e) = obj.take_error() {
        return Err(e);
    }
    Ok(AbcReport {
        variant,
        start: start.to_vec(),
        initial_value: obj.first_value().unwrap_or(f64::INFINITY),
        best_value: result.best_f,
        best: AbcParams::from_slice(&result.best_x)?,
        iterations: result.iterations,
        stats: result.stats,
        progress: result.progress,
        peak_workers,
        sequential_best: None,
    })
}

/// Minimises the boundary-condition objective with a speculative variant,
/// running the `k` trial points of a round as concurrent copies of the
/// task block on the pool.
pub fn optimize_abc_with(
    problems: &[PdeProblem],
    groups: &WorkerGroups,
    variant: Variant,
    pool: &WorkerPool,
    start: &[f64],
    iterations: usize,
    tolerance: f64,
) -> Result<AbcReport> {
    let needed = variant.k() * groups.procs.iter().sum::<usize>();
    if needed > pool.capacity() {
        return Err(Error::PoolExhausted {
            requested: needed,
            available: pool.capacity(),
            capacity: pool.capacity(),
        });
    }
    pool.reset_peak();
    let mut obj = PoolObjective::new(problems, groups, pool, variant.k());
    let result = minimize(&mut obj, start, variant, iterations, tolerance)?;
    let peak = pool.peak();
    finish(variant.k(), start, &mut obj, result, peak)
}

/// The sequential method on the calling thread with the same partitions.
pub fn optimize_abc_sequential(
    problems: &[PdeProblem],
    groups: &WorkerGroups,
    start: &[f64],
    iterations: usize,
    tolerance: f64,
) -> Result<AbcReport> {
    let mut obj = PoolObjective::sequential(problems, groups);
    let result = minimize(&mut obj, start, Variant::A1, iterations, tolerance)?;
    finish(1, start, &mut obj, result, 1)
}
