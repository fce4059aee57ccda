use std::io::Write;
use std::path::Path;
use std::sync::{Mutex, RwLock};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::scheme::{Boundary, Coeffs, PdeState};
use super::{AbcParams, PdeProblem};
use crate::error::{Error, Result};
use crate::pool::run_team;
use crate::tridiag::{
    back_substitute, eliminate_block, solve_reduced, solve_thomas, solve_wang, BoundarySummary, TridiagSystem,
    WangPlan,
};

const ZERO: C64 = C64::new(0.0, 0.0);

/// How the tridiagonal system of every time step is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SolverMode {
    Thomas,
    /// Partitioned solve with `blocks` blocks on the calling thread.
    Wang { blocks: usize },
    /// Partitioned solve with `blocks` blocks on a team of `workers` threads.
    /// Results are bit-identical to `Wang` with the same block count.
    Team { blocks: usize, workers: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegrateOutcome {
    /// Max over all nodes and time levels of `|u(x_j, t^n) - U_j^n|`;
    /// infinite if the discrete solution stopped being finite.
    pub max_error: f64,
    pub state: PdeState,
}

/// Per-node magnitudes at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub t: f64,
    pub numeric: Vec<f64>,
    pub exact: Vec<f64>,
}

fn worse(acc: f64, e: f64) -> f64 {
    if e.is_nan() {
        f64::INFINITY
    } else {
        acc.max(e)
    }
}

fn level_error(problem: &PdeProblem, u: &[C64], range: std::ops::Range<usize>, t: f64) -> f64 {
    range
        .zip(u)
        .fold(0.0, |acc, (j, v)| worse(acc, (v - problem.solution.eval(problem.x(j), t)).norm()))
}

fn step_error(step: usize, e: Error) -> Error {
    Error::Step {
        step,
        source: Box::new(e),
    }
}

/// Marches all `N` steps from the exact initial data and returns the
/// max-norm error against the closed-form solution.
pub fn integrate(problem: &PdeProblem, boundary: &Boundary, mode: SolverMode) -> Result<IntegrateOutcome> {
    match mode {
        SolverMode::Team { blocks, workers } if blocks > 1 => integrate_team(problem, boundary, blocks, workers),
        _ => integrate_sequential(problem, boundary, mode, &mut |_, _| {}),
    }
}

/// [`integrate`] recording `|U|` and `|u|` every `every` steps (and at the
/// final step). Team mode is replaced by the bit-identical single-thread
/// partitioned solve.
pub fn integrate_with_snapshots(
    problem: &PdeProblem,
    boundary: &Boundary,
    mode: SolverMode,
    every: usize,
) -> Result<(IntegrateOutcome, Vec<Snapshot>)> {
    let every = every.max(1);
    let mode = match mode {
        SolverMode::Team { blocks, .. } => SolverMode::Wang { blocks },
        m => m,
    };
    let mut snaps = Vec::new();
    let out = integrate_sequential(problem, boundary, mode, &mut |step, u| {
        if step % every == 0 || step == problem.n {
            let t = problem.t(step);
            snaps.push(Snapshot {
                step,
                t,
                numeric: u.iter().map(|v| v.norm()).collect(),
                exact: (0..u.len()).map(|j| problem.solution.eval(problem.x(j), t).norm()).collect(),
            });
        }
    })?;
    Ok((out, snaps))
}

fn integrate_sequential(
    problem: &PdeProblem,
    boundary: &Boundary,
    mode: SolverMode,
    observe: &mut dyn FnMut(usize, &[C64]),
) -> Result<IntegrateOutcome> {
    problem.validate()?;
    let nodes = problem.nodes();
    if let SolverMode::Wang { blocks } = mode {
        WangPlan::new(nodes, blocks)?;
    }
    let coeffs = Coeffs::new(problem, boundary);
    let mut state = PdeState::initial(problem);
    observe(0, &state.u);
    let mut max_error = 0.0;
    let mut bands = [vec![ZERO; nodes], vec![ZERO; nodes], vec![ZERO; nodes], vec![ZERO; nodes]];
    for step in 1..=problem.n {
        let t = problem.t(step);
        {
            let [lo, di, up, rh] = &mut bands;
            coeffs.fill_rows(
                problem,
                &state.u,
                &state.phi_left,
                &state.phi_right,
                t,
                0..nodes,
                [lo, di, up, rh],
            );
        }
        let [lo, di, up, rh] = bands;
        let system = TridiagSystem::from_padded(lo, di, up, rh)?;
        let solved = match mode {
            SolverMode::Thomas => solve_thomas(&system),
            SolverMode::Wang { blocks } | SolverMode::Team { blocks, .. } => solve_wang(&system, blocks),
        };
        bands = system.into_bands();
        let u_new = solved.map_err(|e| step_error(step, e))?;
        coeffs.advance_phi(&mut state.phi_left, state.u[0], u_new[0]);
        coeffs.advance_phi(&mut state.phi_right, state.u[nodes - 1], u_new[nodes - 1]);
        state.u = u_new;
        state.step = step;
        observe(step, &state.u);
        max_error = worse(max_error, level_error(problem, &state.u, 0..nodes, t));
    }
    Ok(IntegrateOutcome { max_error, state })
}

struct TeamShared {
    u: RwLock<Vec<C64>>,
    summaries: Vec<Mutex<Option<BoundarySummary>>>,
    reduced: RwLock<Vec<C64>>,
    failure: Mutex<Option<Error>>,
}

impl TeamShared {
    fn fail(&self, e: Error) {
        self.failure.lock().unwrap().get_or_insert(e);
    }

    fn failed(&self) -> bool {
        self.failure.lock().unwrap().is_some()
    }
}

/// Every worker owns a contiguous run of blocks: it builds those rows,
/// eliminates them, back-substitutes and checks the error on them. Rank 0
/// solves the reduced system between barriers. The owner of the first
/// (last) block also advances the left (right) auxiliary fields.
fn integrate_team(problem: &PdeProblem, boundary: &Boundary, blocks: usize, workers: usize) -> Result<IntegrateOutcome> {
    problem.validate()?;
    let nodes = problem.nodes();
    let plan = WangPlan::new(nodes, blocks)?;
    if workers == 0 || workers > blocks {
        return Err(Error::Parameter(format!("team size {workers} outside 1..={blocks}")));
    }
    let coeffs = Coeffs::new(problem, boundary);
    let initial = PdeState::initial(problem);
    let shared = TeamShared {
        u: RwLock::new(initial.u),
        summaries: (0..blocks).map(|_| Mutex::new(None)).collect(),
        reduced: RwLock::new(vec![ZERO; blocks]),
        failure: Mutex::new(None),
    };

    let parts = run_team(workers, |ctx| {
        let owned = plan.owned_blocks(ctx.size, ctx.rank);
        let span = plan.block(owned.start).start..plan.block(owned.end - 1).end;
        let first = owned.start == 0;
        let last = owned.end == blocks;
        let mut phi_left = [ZERO; 3];
        let mut phi_right = [ZERO; 3];
        let mut bands = [
            vec![ZERO; span.len()],
            vec![ZERO; span.len()],
            vec![ZERO; span.len()],
            vec![ZERO; span.len()],
        ];
        let mut elims = Vec::with_capacity(owned.len());
        let mut u_new = vec![ZERO; span.len()];
        let mut max_error = 0.0;
        for step in 1..=problem.n {
            let t = problem.t(step);
            let (old_left, old_right) = {
                let u = shared.u.read().unwrap();
                let [lo, di, up, rh] = &mut bands;
                coeffs.fill_rows(problem, &u, &phi_left, &phi_right, t, span.clone(), [lo, di, up, rh]);
                (u[0], u[nodes - 1])
            };
            elims.clear();
            for k in owned.clone() {
                let r = plan.block(k);
                let local = r.start - span.start..r.end - span.start;
                let [lo, di, up, rh] = &bands;
                match eliminate_block(r.start, &lo[local.clone()], &di[local.clone()], &up[local.clone()], &rh[local]) {
                    Ok(e) => {
                        *shared.summaries[k].lock().unwrap() = Some(e.summary());
                        elims.push(e);
                    }
                    Err(e) => {
                        shared.fail(step_error(step, e));
                        break;
                    }
                }
            }
            ctx.barrier();
            if shared.failed() {
                break;
            }
            if ctx.is_leader() {
                let s: Vec<_> = shared.summaries.iter().map(|m| m.lock().unwrap().unwrap()).collect();
                match solve_reduced(&s) {
                    Ok(z) => *shared.reduced.write().unwrap() = z,
                    Err(e) => shared.fail(step_error(step, e)),
                }
            }
            ctx.barrier();
            if shared.failed() {
                break;
            }
            {
                let z = shared.reduced.read().unwrap();
                for (k, e) in owned.clone().zip(&elims) {
                    let r = plan.block(k);
                    let z_prev = if k > 0 { z[k - 1] } else { ZERO };
                    back_substitute(e, z_prev, z[k], &mut u_new[r.start - span.start..r.end - span.start]);
                }
            }
            if first {
                coeffs.advance_phi(&mut phi_left, old_left, u_new[0]);
            }
            if last {
                coeffs.advance_phi(&mut phi_right, old_right, u_new[span.len() - 1]);
            }
            max_error = worse(max_error, level_error(problem, &u_new, span.clone(), t));
            shared.u.write().unwrap()[span.clone()].copy_from_slice(&u_new);
            ctx.barrier();
        }
        (max_error, first.then_some(phi_left), last.then_some(phi_right))
    });

    if let Some(e) = shared.failure.into_inner().unwrap() {
        return Err(e);
    }
    let mut state = PdeState::from_values(shared.u.into_inner().unwrap());
    state.step = problem.n;
    let mut max_error = 0.0;
    for (e, l, r) in parts {
        max_error = worse(max_error, e);
        if let Some(l) = l {
            state.phi_left = l;
        }
        if let Some(r) = r {
            state.phi_right = r;
        }
    }
    Ok(IntegrateOutcome { max_error, state })
}

/// Max over `problems` of the max-norm error obtained with boundary
/// parameters `abc`. Numerical breakdown (singular steps, non-finite
/// values) yields `+inf`; invalid solver settings are errors.
pub fn objective(abc: &AbcParams, problems: &[PdeProblem], mode: SolverMode) -> Result<f64> {
    if problems.is_empty() {
        return Err(Error::Parameter("objective needs at least one problem".into()));
    }
    let boundary = Boundary::Abc(*abc);
    let mut worst = 0.0;
    for p in problems {
        let v = match integrate(p, &boundary, mode) {
            Ok(out) => out.max_error,
            Err(Error::Step { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        worst = worse(worst, v);
    }
    Ok(worst)
}

/// CSV with columns `step,t,x,abs_numeric,abs_exact`.
pub fn write_snapshots_csv(problem: &PdeProblem, snapshots: &[Snapshot], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "step,t,x,abs_numeric,abs_exact").map_err(io)?;
    for s in snapshots {
        for (j, (a, b)) in s.numeric.iter().zip(&s.exact).enumerate() {
            writeln!(w, "{},{},{},{},{}", s.step, s.t, problem.x(j), a, b).map_err(io)?;
        }
    }
    w.flush().map_err(io)
}
