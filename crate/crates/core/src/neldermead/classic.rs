use super::{
    affine, sanitize, BatchObjective, EvalStats, OptimizeResult, Progress, Scenario, SimplexState, StepStats, Variant,
    Vertex, CONTRACT, EXPAND, REFLECT, SHRINK,
};
use crate::error::Result;

/// Trial values, evaluated lazily for A1 and speculatively for A2/A3.
struct Trials<'a, F: ?Sized> {
    f: &'a mut F,
    points: [Vec<f64>; 3],
    values: [Option<f64>; 3],
    evaluations: usize,
}

const R: usize = 0;
const E: usize = 1;
const C: usize = 2;

impl<F: BatchObjective + ?Sized> Trials<'_, F> {
    fn fetch(&mut self, which: &[usize]) {
        let todo: Vec<usize> = which.iter().copied().filter(|&i| self.values[i].is_none()).collect();
        if todo.is_empty() {
            return;
        }
        let batch: Vec<Vec<f64>> = todo.iter().map(|&i| self.points[i].clone()).collect();
        let vals = self.f.evaluate(&batch);
        self.evaluations += todo.len();
        for (i, v) in todo.into_iter().zip(vals) {
            self.values[i] = Some(sanitize(v));
        }
    }

    fn get(&mut self, i: usize) -> f64 {
        self.fetch(&[i]);
        self.values[i].unwrap()
    }
}

/// One iteration. The speculative variants request their points up front;
/// the decisions below only read values, so the accepted simplex does not
/// depend on the variant.
pub fn nm_step<F: BatchObjective + ?Sized>(state: &mut SimplexState, f: &mut F, variant: Variant) -> Result<StepStats> {
    let m = state.dim();
    let c = state.centroid(m);
    let worst = state.vertices()[m].clone();
    let (f_best, f_second) = (state.vertices()[0].f, state.vertices()[m - 1].f);
    let mut t = Trials {
        f,
        points: [
            affine(&c, &worst.x, REFLECT),
            affine(&c, &worst.x, EXPAND),
            affine(&c, &worst.x, -CONTRACT),
        ],
        values: [None; 3],
        evaluations: 0,
    };
    match variant {
        Variant::A1 => {}
        Variant::A2 => t.fetch(&[R, E]),
        Variant::A3 => t.fetch(&[R, E, C]),
    }

    let fr = t.get(R);
    let (scenario, accepted) = if fr < f_best {
        let fe = t.get(E);
        (Scenario::Expansion, Some(if fe < fr { E } else { R }))
    } else if fr < f_second {
        (Scenario::Reflection, Some(R))
    } else {
        let fc = t.get(C);
        if fc < fr.min(worst.f) {
            (Scenario::Contraction, Some(C))
        } else if fr < worst.f {
            (Scenario::Contraction, Some(R))
        } else {
            (Scenario::Shrink, None)
        }
    };
    let mut evaluations = t.evaluations;
    let Trials { f, points, values, .. } = t;

    match accepted {
        Some(i) => {
            let [xr, xe, xc] = points;
            let x = [xr, xe, xc].into_iter().nth(i).unwrap();
            state.vertices_mut()[m] = Vertex {
                x,
                f: values[i].unwrap(),
            };
        }
        None => {
            let best = state.vertices()[0].x.clone();
            let moved: Vec<Vec<f64>> = state.vertices()[1..]
                .iter()
                .map(|v| affine(&best, &v.x, -SHRINK))
                .collect();
            let mut vals = Vec::with_capacity(m);
            for chunk in moved.chunks(variant.k()) {
                vals.extend(f.evaluate(chunk).into_iter().map(sanitize));
            }
            evaluations += m;
            for (v, (x, fx)) in state.vertices_mut()[1..].iter_mut().zip(moved.into_iter().zip(vals)) {
                *v = Vertex { x, f: fx };
            }
        }
    }
    state.sort();
    state.bump();
    Ok(StepStats {
        scenario,
        useful_evals: scenario.useful_evals(m),
        rounds: scenario.rounds(variant, m),
        evaluations,
    })
}

/// Iterates until `max_iterations` or until the simplex diameter drops
/// below `tolerance`.
pub fn minimize<F: BatchObjective + ?Sized>(
    f: &mut F,
    x0: &[f64],
    variant: Variant,
    max_iterations: usize,
    tolerance: f64,
) -> Result<OptimizeResult> {
    let mut state = SimplexState::initial(x0, f)?;
    let mut stats = EvalStats::new(variant.k());
    let mut scenarios = Vec::new();
    let mut progress = Vec::new();
    let mut trace = Vec::new();
    while state.iteration() < max_iterations && state.diameter() >= tolerance {
        let s = nm_step(&mut state, f, variant)?;
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
