use serde::{Deserialize, Serialize};

use super::{
    affine, minimize, sanitize, BatchObjective, EvalStats, FnObjective, OptimizeResult, Progress, Scenario,
    SimplexState, StepStats, Variant, Vertex, CONTRACT, EXPAND, REFLECT, SHRINK,
};
use crate::error::{Error, Result};

enum Follow {
    Expand,
    Contract,
}

/// Updates the `k` worst vertices simultaneously.
///
/// Round 1 reflects each of them through the centroid of the `m + 1 - k`
/// best vertices. Each reflected point is then treated like a classical
/// step against that centroid, with the worst retained vertex playing the
/// role of the second-worst: better than the best triggers an expansion,
/// better than the threshold is accepted, anything else triggers an inside
/// contraction. Round 2 evaluates all expansions and contractions together.
/// If no vertex improved, the simplex shrinks towards the best vertex in
/// batches of `k`.
pub fn nm_step_generalized<F: BatchObjective + ?Sized>(
    state: &mut SimplexState,
    f: &mut F,
    k: usize,
) -> Result<StepStats> {
    let m = state.dim();
    if k == 0 || k >= m {
        return Err(Error::Parameter(format!("generalized degree k={k} outside 1..={}", m - 1)));
    }
    let keep = m + 1 - k;
    let c = state.centroid(keep);
    let f_best = state.vertices()[0].f;
    let threshold = state.vertices()[keep - 1].f;
    let worst: Vec<Vertex> = state.vertices()[keep..].to_vec();

    let reflected: Vec<Vec<f64>> = worst.iter().map(|v| affine(&c, &v.x, REFLECT)).collect();
    let fr: Vec<f64> = f.evaluate(&reflected).into_iter().map(sanitize).collect();
    let mut evaluations = k;
    let mut rounds = 1;

    let follow: Vec<Option<Follow>> = fr
        .iter()
        .map(|&v| {
            if v < f_best {
                Some(Follow::Expand)
            } else if v < threshold {
                None
            } else {
                Some(Follow::Contract)
            }
        })
        .collect();
    let second: Vec<(usize, Vec<f64>)> = follow
        .iter()
        .enumerate()
        .filter_map(|(i, fo)| {
            fo.as_ref().map(|fo| {
                let t = match fo {
                    Follow::Expand => EXPAND,
                    Follow::Contract => -CONTRACT,
                };
                (i, affine(&c, &worst[i].x, t))
            })
        })
        .collect();
    let mut f2 = vec![None; k];
    if !second.is_empty() {
        let pts: Vec<Vec<f64>> = second.iter().map(|(_, p)| p.clone()).collect();
        for ((i, _), v) in second.iter().zip(f.evaluate(&pts)) {
            f2[*i] = Some(sanitize(v));
        }
        evaluations += second.len();
        rounds += 1;
    }
    let mut second_points: Vec<Option<Vec<f64>>> = vec![None; k];
    for (i, p) in second {
        second_points[i] = Some(p);
    }

    let mut replaced = false;
    let mut expanded = false;
    for i in 0..k {
        let new = match follow[i] {
            None => Some((reflected[i].clone(), fr[i])),
            Some(Follow::Expand) => {
                expanded = true;
                let fe = f2[i].unwrap();
                if fe < fr[i] {
                    Some((second_points[i].take().unwrap(), fe))
                } else {
                    Some((reflected[i].clone(), fr[i]))
                }
            }
            Some(Follow::Contract) => {
                let fc = f2[i].unwrap();
                if fc < fr[i].min(worst[i].f) {
                    Some((second_points[i].take().unwrap(), fc))
                } else if fr[i] < worst[i].f {
                    Some((reflected[i].clone(), fr[i]))
                } else {
                    None
                }
            }
        };
        if let Some((x, fx)) = new {
            state.vertices_mut()[keep + i] = Vertex { x, f: fx };
            replaced = true;
        }
    }

    let scenario = if !replaced {
        let best = state.vertices()[0].x.clone();
        let moved: Vec<Vec<f64>> = state.vertices()[1..]
            .iter()
            .map(|v| affine(&best, &v.x, -SHRINK))
            .collect();
        let mut vals = Vec::with_capacity(m);
        for chunk in moved.chunks(k) {
            vals.extend(f.evaluate(chunk).into_iter().map(sanitize));
            rounds += 1;
        }
        evaluations += m;
        for (v, (x, fx)) in state.vertices_mut()[1..].iter_mut().zip(moved.into_iter().zip(vals)) {
            *v = Vertex { x, f: fx };
        }
        Scenario::Shrink
    } else if expanded {
        Scenario::Expansion
    } else if rounds == 2 {
        Scenario::Contraction
    } else {
        Scenario::Reflection
    };
    state.sort();
    state.bump();
    Ok(StepStats {
        scenario,
        useful_evals: evaluations,
        rounds,
        evaluations,
    })
}

/// [`minimize`] driven by [`nm_step_generalized`]. `stats.useful_evals`
/// counts every evaluation performed; usefulness relative to the
/// sequential method is measured by [`generalized_gamma`].
pub fn minimize_generalized<F: BatchObjective + ?Sized>(
    f: &mut F,
    x0: &[f64],
    k: usize,
    max_iterations: usize,
    tolerance: f64,
) -> Result<OptimizeResult> {
    let mut state = SimplexState::initial(x0, f)?;
    if k == 0 || k >= state.dim() {
        return Err(Error::Parameter(format!(
            "generalized degree k={k} outside 1..={}",
            state.dim() - 1
        )));
    }
    let mut stats = EvalStats::new(k);
    let mut scenarios = Vec::new();
    let mut progress = Vec::new();
    let mut trace = Vec::new();
    while state.iteration() < max_iterations && state.diameter() >= tolerance {
        let s = nm_step_generalized(&mut state, f, k)?;
        stats.record(&s);
        scenarios.push(s.scenario);
        progress.push(Progress {
            useful_evals: stats.useful_evals,
            best: state.best().f,
        });
        trace.push(state.vertices().to_vec());
    }
    Ok(OptimizeResult {
        best_x: state.best().x.clone(),
        best_f: state.best().f,
        iterations: state.iteration(),
        stats,
        scenarios,
        progress,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizedGamma {
    pub k: usize,
    pub best: f64,
    pub iterations: usize,
    pub parallel_steps: usize,
    pub evaluations: usize,
    /// Evaluations the sequential method needed to reach `best`; `None` if
    /// it did not get there within its budget.
    pub sequential_evals: Option<usize>,
    /// `sequential_evals / (k * parallel_steps)`; when the sequential run
    /// fell short, its whole budget is used, giving an upper bound.
    pub gamma: f64,
}

/// Runs the generalized variant, then the sequential method from the same
/// start for up to `sequential_budget` iterations, and compares the
/// evaluations the sequential method needed to match the generalized best
/// value with the slots the generalized run occupied.
pub fn generalized_gamma<F: FnMut(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    k: usize,
    max_iterations: usize,
    tolerance: f64,
    sequential_budget: usize,
) -> Result<GeneralizedGamma> {
    let mut obj = FnObjective(f);
    let g = minimize_generalized(&mut obj, x0, k, max_iterations, tolerance)?;
    if g.stats.parallel_steps == 0 {
        return Err(Error::Parameter("generalized run performed no steps".into()));
    }
    let seq = minimize(&mut obj, x0, Variant::A1, sequential_budget, 0.0)?;
    let reached = seq.progress.iter().find(|p| p.best <= g.best_f).map(|p| p.useful_evals);
    let evals = reached.unwrap_or(seq.stats.useful_evals);
    Ok(GeneralizedGamma {
        k,
        best: g.best_f,
        iterations: g.iterations,
        parallel_steps: g.stats.parallel_steps,
        evaluations: g.stats.evaluations,
        sequential_evals: reached,
        gamma: evals as f64 / (k * g.stats.parallel_steps) as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neldermead::{rosenbrock, rosenbrock_start};

    #[test]
    fn degree_one_is_the_classical_step() {
        let x0 = rosenbrock_start(5);
        let a1 = minimize(&mut FnObjective(rosenbrock), &x0, Variant::A1, 400, 0.0).unwrap();
        let g1 = minimize_generalized(&mut FnObjective(rosenbrock), &x0, 1, 400, 0.0).unwrap();
        assert_eq!(g1.trace, a1.trace);
        assert_eq!(g1.stats.parallel_steps, a1.stats.parallel_steps);
    }

    #[test]
    fn degree_must_leave_a_centroid() {
        let mut f = FnObjective(rosenbrock);
        assert!(matches!(
            minimize_generalized(&mut f, &rosenbrock_start(3), 3, 10, 0.0),
            Err(Error::Parameter(_))
        ));
        assert!(minimize_generalized(&mut f, &rosenbrock_start(3), 0, 10, 0.0).is_err());
        assert!(minimize_generalized(&mut f, &rosenbrock_start(3), 2, 10, 0.0).is_ok());
    }

    #[test]
    fn rounds_and_bounds() {
        let r = minimize_generalized(&mut FnObjective(rosenbrock), &rosenbrock_start(7), 3, 300, 0.0).unwrap();
        assert!(r.stats.evaluations <= 3 * r.stats.parallel_steps);
        for s in &r.trace {
            assert!(s.windows(2).all(|w| w[0].f <= w[1].f));
        }
        let g = generalized_gamma(rosenbrock, &rosenbrock_start(7), 2, 300, 1e-8, 20_000).unwrap();
        assert!(g.gamma > 0.0 && g.gamma.is_finite(), "{g:?}");
    }

    #[test]
    fn usefulness_drops_with_degree() {
        let x0 = rosenbrock_start(7);
        let g: Vec<f64> = (2..=6)
            .map(|k| generalized_gamma(rosenbrock, &x0, k, 1000, 1e-8, 20_000).unwrap().gamma)
            .collect();
        assert!(g[2] < 0.3, "{g:?}");
        assert!(g.windows(2).all(|w| w[1] <= w[0]), "{g:?}");
    }
}
