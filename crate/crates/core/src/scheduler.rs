//! Model-based distribution of processes over a block of independent tasks.
//!
//! [`distribute`] is the greedy heuristic: start every task on one process
//! and repeatedly hand one more process to the task with the largest
//! predicted time. The loop stops as soon as that task already sits at its
//! effective cap (saturation point or efficiency floor), even if other tasks
//! could still absorb processes; `continue_past_cap` relaxes this by retiring
//! the capped task instead.
//!
//! [`select_algorithm`] compares level-1 variants that evaluate `k` trial
//! points concurrently. Each variant runs `k` copies of the task block, every
//! copy on `floor(P / k)` processes, and is scored by its useful-point time
//! `makespan / (gamma * k)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timing_model::TimingModel;

/// Upper bound on the candidate count [`brute_force_distribute`] will enumerate.
pub const BRUTE_FORCE_LIMIT: u128 = 10_000_000;

/// A block of independent tasks, repeated `block_repetitions` times in sequence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSet {
    tasks: Vec<usize>,
    block_repetitions: usize,
}

impl TaskSet {
    pub fn new(tasks: Vec<usize>, block_repetitions: usize) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::Parameter("task set is empty".into()));
        }
        let mut sorted = tasks.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Parameter("task ids must be distinct".into()));
        }
        Ok(Self {
            tasks,
            block_repetitions,
        })
    }

    /// Every task of `model`, one block.
    pub fn all(model: &TimingModel) -> Self {
        Self {
            tasks: (1..=model.num_tasks()).collect(),
            block_repetitions: 1,
        }
    }

    pub fn tasks(&self) -> &[usize] {
        &self.tasks
    }

    pub fn len(&self) -> usize {
        self.tasks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tasks.is_empty()
    }

    pub fn block_repetitions(&self) -> usize {
        self.block_repetitions
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct DistributeOptions {
    /// Efficiency floor in `[0, 1]`; `0` disables the efficiency cap.
    pub e_min: f64,
    /// Retire a capped argmax task instead of stopping the whole loop.
    pub continue_past_cap: bool,
}

impl DistributeOptions {
    pub fn with_e_min(e_min: f64) -> Self {
        Self {
            e_min,
            continue_past_cap: false,
        }
    }
}

/// Processes per task (in [`TaskSet`] order) and the predicted makespan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub tasks: Vec<usize>,
    pub procs: Vec<usize>,
    pub predicted_makespan: f64,
    pub used: usize,
    /// True when the loop ended on a capped argmax task rather than on an
    /// exhausted pool.
    pub cap_stop: bool,
}

impl Assignment {
    pub fn predicted_times(&self, model: &TimingModel) -> Result<Vec<f64>> {
        self.tasks
            .iter()
            .zip(&self.procs)
            .map(|(&t, &p)| model.predict_time(t, p))
            .collect()
    }
}

fn argmax_lowest(times: &[f64], eligible: impl Fn(usize) -> bool) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &t) in times.iter().enumerate() {
        if !eligible(i) {
            continue;
        }
        match best {
            Some(b) if times[b] >= t => {}
            _ => best = Some(i),
        }
    }
    best
}

pub fn distribute(model: &TimingModel, tasks: &TaskSet, procs: usize, opts: DistributeOptions) -> Result<Assignment> {
    let m = tasks.len();
    if procs < m {
        return Err(Error::Infeasible { procs, tasks: m });
    }
    let caps = tasks
        .tasks()
        .iter()
        .map(|&t| model.effective_cap(t, opts.e_min))
        .collect::<Result<Vec<_>>>()?;
    let mut p = vec![1usize; m];
    let mut times = tasks
        .tasks()
        .iter()
        .map(|&t| model.predict_time(t, 1))
        .collect::<Result<Vec<_>>>()?;
    let mut remaining = procs - m;
    let mut retired = vec![false; m];
    let mut cap_stop = false;
    while remaining > 0 {
        let Some(j) = argmax_lowest(&times, |i| !retired[i]) else {
            break;
        };
        if p[j] >= caps[j] {
            cap_stop = true;
            if opts.continue_past_cap {
                retired[j] = true;
                continue;
            }
            break;
        }
        p[j] += 1;
        remaining -= 1;
        times[j] = model.predict_time(tasks.tasks()[j], p[j])?;
    }
    Ok(Assignment {
        tasks: tasks.tasks().to_vec(),
        used: p.iter().sum(),
        predicted_makespan: times.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        procs: p,
        cap_stop,
    })
}

pub fn predicted_makespan(model: &TimingModel, assignment: &Assignment) -> Result<f64> {
    if assignment.procs.is_empty() {
        return Err(Error::EmptyAssignment);
    }
    Ok(assignment
        .predicted_times(model)?
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Exhaustive minimax over every feasible distribution respecting the caps.
///
/// Ties go to fewer total processes, then to the lexicographically smallest
/// vector. Intended as a test oracle for small instances.
pub fn brute_force_distribute(
    model: &TimingModel,
    tasks: &TaskSet,
    procs: usize,
    opts: DistributeOptions,
) -> Result<Assignment> {
    let m = tasks.len();
    if procs < m {
        return Err(Error::Infeasible { procs, tasks: m });
    }
    let caps = tasks
        .tasks()
        .iter()
        .map(|&t| Ok(model.effective_cap(t, opts.e_min)?.min(procs - (m - 1))))
        .collect::<Result<Vec<_>>>()?;
    let size = caps.iter().map(|&c| c as u128).product::<u128>();
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::InstanceTooLarge { size });
    }
    let table = tasks
        .tasks()
        .iter()
        .zip(&caps)
        .map(|(&t, &c)| (1..=c).map(|p| model.predict_time(t, p)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;

    let mut best: Option<(f64, usize, Vec<usize>)> = None;
    let mut cur = vec![1usize; m];
    loop {
        let used: usize = cur.iter().sum();
        if used <= procs {
            let span = cur
                .iter()
                .enumerate()
                .map(|(i, &p)| table[i][p - 1])
                .fold(f64::NEG_INFINITY, f64::max);
            let better = match &best {
                None => true,
                Some((s, u, v)) => span < *s || (span == *s && (used < *u || (used == *u && cur < *v))),
            };
            if better {
                best = Some((span, used, cur.clone()));
            }
        }
        // odometer increment, last index fastest
        let mut i = m;
        loop {
            if i == 0 {
                let (span, used, p) = best.expect("the all-ones distribution is always feasible");
                return Ok(Assignment {
                    tasks: tasks.tasks().to_vec(),
                    procs: p,
                    predicted_makespan: span,
                    used,
                    cap_stop: false,
                });
            }
            i -= 1;
            if cur[i] < caps[i] {
                cur[i] += 1;
                break;
            }
            cur[i] = 1;
        }
    }
}

/// A level-1 algorithm variant evaluating `parallel_degree` points per round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantProfile {
    pub variant_id: usize,
    pub parallel_degree: usize,
    pub gamma: f64,
}

impl VariantProfile {
    /// Speculative Nelder-Mead family with the nominal efficiencies
    /// `gamma = 1, 0.75, 2/3` for `k = 1, 2, 3`.
    pub fn nominal(k: usize) -> Result<Self> {
        let gamma = match k {
            1 => 1.0,
            2 => 0.75,
            3 => 2.0 / 3.0,
            _ => return Err(Error::Parameter(format!("no nominal gamma for k={k}"))),
        };
        Ok(Self {
            variant_id: k,
            parallel_degree: k,
            gamma,
        })
    }

    fn validate(&self) -> Result<()> {
        if self.parallel_degree == 0 {
            return Err(Error::Parameter(format!("variant {}: parallel degree 0", self.variant_id)));
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return Err(Error::Parameter(format!(
                "variant {}: gamma {} outside (0, 1]",
                self.variant_id, self.gamma
            )));
        }
        Ok(())
    }
}

/// Schedule of one variant: `copies` identical task blocks on
/// `procs_per_copy` processes each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantPlan {
    pub profile: VariantProfile,
    pub copies: usize,
    pub procs_per_copy: usize,
    /// `None` when `procs_per_copy` is smaller than the block size.
    pub assignment: Option<Assignment>,
    pub active_procs: usize,
    pub makespan: Option<f64>,
    /// `makespan / (gamma * k)`.
    pub useful_point_time: Option<f64>,
    /// Useful-point time times the number of sequential blocks.
    pub total_time: Option<f64>,
}

pub fn plan_variant(
    profile: VariantProfile,
    model: &TimingModel,
    tasks: &TaskSet,
    procs: usize,
    opts: DistributeOptions,
) -> Result<VariantPlan> {
    profile.validate()?;
    let k = profile.parallel_degree;
    let per_copy = procs / k;
    let assignment = if per_copy >= tasks.len() {
        Some(distribute(model, tasks, per_copy, opts)?)
    } else {
        None
    };
    let makespan = assignment.as_ref().map(|a| a.predicted_makespan);
    let useful = makespan.map(|t| t / (profile.gamma * k as f64));
    Ok(VariantPlan {
        profile,
        copies: k,
        procs_per_copy: per_copy,
        active_procs: assignment.as_ref().map(|a| a.used * k).unwrap_or(0),
        makespan,
        useful_point_time: useful,
        total_time: useful.map(|u| u * tasks.block_repetitions().max(1) as f64),
        assignment,
    })
}

/// One candidate for [`select_algorithm`]: a variant with its own task block.
#[derive(Debug, Clone, Copy)]
pub struct VariantInput<'a> {
    pub profile: VariantProfile,
    pub model: &'a TimingModel,
    pub tasks: &'a TaskSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    pub plans: Vec<VariantPlan>,
    /// Index into `plans`.
    pub selected: usize,
}

impl Selection {
    pub fn selected_plan(&self) -> &VariantPlan {
        &self.plans[self.selected]
    }
}

/// Picks the variant with the smallest useful-point time; ties go to the
/// smaller parallel degree.
pub fn select_algorithm(variants: &[VariantInput<'_>], procs: usize, opts: DistributeOptions) -> Result<Selection> {
    let plans = variants
        .iter()
        .map(|v| plan_variant(v.profile, v.model, v.tasks, procs, opts))
        .collect::<Result<Vec<_>>>()?;
    let mut selected: Option<usize> = None;
    for (i, plan) in plans.iter().enumerate() {
        let Some(t) = plan.useful_point_time else { continue };
        let better = match selected {
            None => true,
            Some(s) => {
                let cur = &plans[s];
                let ct = cur.useful_point_time.unwrap_or(f64::INFINITY);
                t < ct || (t == ct && plan.profile.parallel_degree < cur.profile.parallel_degree)
            }
        };
        if better {
            selected = Some(i);
        }
    }
    match selected {
        Some(selected) => Ok(Selection { plans, selected }),
        None => Err(Error::Infeasible {
            procs,
            tasks: variants.iter().map(|v| v.tasks.len() * v.profile.parallel_degree).min().unwrap_or(0),
        }),
    }
}

/// [`select_algorithm`] with one model and task block shared by all variants.
pub fn select_with_model(
    profiles: &[VariantProfile],
    model: &TimingModel,
    tasks: &TaskSet,
    procs: usize,
    opts: DistributeOptions,
) -> Result<Selection> {
    let inputs: Vec<_> = profiles
        .iter()
        .map(|&profile| VariantInput { profile, model, tasks })
        .collect();
    select_algorithm(&inputs, procs, opts)
}
