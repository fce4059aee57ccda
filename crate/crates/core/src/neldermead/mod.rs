//! Nelder-Mead minimisation with speculative parallel variants.
//!
//! [`Variant::A2`] evaluates the reflection and expansion points in one
//! round, [`Variant::A3`] also the inside contraction point. The decision
//! tree is replayed in sequential order afterwards, so every variant accepts
//! exactly the same simplex sequence as [`Variant::A1`]; only the number of
//! evaluation rounds changes. [`EvalStats`] counts the evaluations a
//! sequential run needs against the slots the parallel variant occupied.
//!
//! [`minimize_generalized`] is the other family: the `k` worst vertices are
//! updated simultaneously against the centroid of the rest. It changes the
//! trajectory, so its efficiency is measured against a sequential run by
//! [`generalized_gamma`].

mod classic;
mod generalized;

pub use classic::{minimize, nm_step};
pub use generalized::{generalized_gamma, minimize_generalized, nm_step_generalized, GeneralizedGamma};

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const REFLECT: f64 = 1.0;
pub const EXPAND: f64 = 2.0;
pub const CONTRACT: f64 = 0.5;
pub const SHRINK: f64 = 0.5;

/// Evaluates a batch of points that may be computed concurrently. Results
/// are in input order; non-finite values are treated as `+inf` by the
/// optimiser.
pub trait BatchObjective {
    fn evaluate(&mut self, points: &[Vec<f64>]) -> Vec<f64>;
}

/// Adapts a plain function; points of a batch are evaluated one by one.
pub struct FnObjective<F>(pub F);

impl<F: FnMut(&[f64]) -> f64> BatchObjective for FnObjective<F> {
    fn evaluate(&mut self, points: &[Vec<f64>]) -> Vec<f64> {
        points.iter().map(|p| (self.0)(p)).collect()
    }
}

/// Evaluates every point of a batch on its own scoped thread.
pub struct ThreadedObjective<F>(pub F);

impl<F: Fn(&[f64]) -> f64 + Sync> BatchObjective for ThreadedObjective<F> {
    fn evaluate(&mut self, points: &[Vec<f64>]) -> Vec<f64> {
        if points.len() <= 1 {
            return points.iter().map(|p| (self.0)(p)).collect();
        }
        let f = &self.0;
        std::thread::scope(|s| {
            let handles: Vec<_> = points.iter().map(|p| s.spawn(move || f(p))).collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        })
    }
}

pub(crate) fn sanitize(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::INFINITY
    }
}

/// `sum_{i<d-1} 100 (x_{i+1} - x_i^2)^2 + (1 - x_i)^2`.
pub fn rosenbrock(x: &[f64]) -> f64 {
    x.windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
        .sum()
}

/// The customary starting point `(-1.2, 1, -1.2, 1, ...)`.
pub fn rosenbrock_start(d: usize) -> Vec<f64> {
    (0..d).map(|i| if i % 2 == 0 { -1.2 } else { 1.0 }).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vertex {
    pub x: Vec<f64>,
    pub f: f64,
}

/// Simplex of `m + 1` vertices kept sorted by value, best first. Ties keep
/// their previous relative order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimplexState {
    vertices: Vec<Vertex>,
    iteration: usize,
}

impl SimplexState {
    pub fn new(mut vertices: Vec<Vertex>) -> Result<Self> {
        let m = vertices.len().saturating_sub(1);
        if m < 2 {
            return Err(Error::Parameter(format!("simplex dimension {m} < 2")));
        }
        if vertices.iter().any(|v| v.x.len() != m) {
            return Err(Error::Parameter("vertex dimension does not match the simplex".into()));
        }
        for v in &mut vertices {
            v.f = sanitize(v.f);
        }
        let mut s = Self { vertices, iteration: 0 };
        s.sort();
        Ok(s)
    }

    /// `x0` plus one vertex per axis moved by `5%` of the coordinate
    /// (`0.00025` for zero coordinates). Evaluated in a single batch.
    pub fn initial<F: BatchObjective + ?Sized>(x0: &[f64], f: &mut F) -> Result<Self> {
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("starting point must be finite".into()));
        }
        let mut points = vec![x0.to_vec()];
        for i in 0..x0.len() {
            let mut p = x0.to_vec();
            p[i] = if p[i] != 0.0 { p[i] + 0.05 * p[i].abs() } else { 0.00025 };
            points.push(p);
        }
        if x0.len() < 2 {
            return Err(Error::Parameter(format!("simplex dimension {} < 2", x0.len())));
        }
        let values = f.evaluate(&points);
        Self::new(points.into_iter().zip(values).map(|(x, f)| Vertex { x, f }).collect())
    }

    pub(crate) fn sort(&mut self) {
        self.vertices.sort_by(|a, b| a.f.total_cmp(&b.f));
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn best(&self) -> &Vertex {
        &self.vertices[0]
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Largest Euclidean distance from the best vertex.
    pub fn diameter(&self) -> f64 {
        let b = &self.vertices[0].x;
        self.vertices[1..]
            .iter()
            .map(|v| v.x.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    /// Centroid of the first `count` vertices.
    pub(crate) fn centroid(&self, count: usize) -> Vec<f64> {
        let mut c = vec![0.0; self.dim()];
        for v in &self.vertices[..count] {
            for (ci, xi) in c.iter_mut().zip(&v.x) {
                *ci += xi;
            }
        }
        for ci in &mut c {
            *ci /= count as f64;
        }
        c
    }

    pub(crate) fn vertices_mut(&mut self) -> &mut Vec<Vertex> {
        &mut self.vertices
    }

    pub(crate) fn bump(&mut self) {
        self.iteration += 1;
    }
}

/// `c + t (c - x)`.
pub(crate) fn affine(c: &[f64], x: &[f64], t: f64) -> Vec<f64> {
    c.iter().zip(x).map(|(ci, xi)| ci + t * (ci - xi)).collect()
}

/// Speculative parallel degree of the classical method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    A1,
    A2,
    A3,
}

impl Variant {
    pub fn k(self) -> usize {
        match self {
            Variant::A1 => 1,
            Variant::A2 => 2,
            Variant::A3 => 3,
        }
    }

    pub fn from_k(k: usize) -> Result<Self> {
        match k {
            1 => Ok(Variant::A1),
            2 => Ok(Variant::A2),
            3 => Ok(Variant::A3),
            _ => Err(Error::Parameter(format!("no speculative variant with k={k}"))),
        }
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "a1" => Ok(Variant::A1),
            "a2" => Ok(Variant::A2),
            "a3" => Ok(Variant::A3),
            _ => Err(Error::Parameter(format!("unknown variant {s:?}"))),
        }
    }
}

/// Outcome class of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Only the reflection point was needed.
    Reflection,
    Expansion,
    Contraction,
    /// Reflection and contraction failed; all but the best vertex moved.
    Shrink,
}

impl Scenario {
    /// Evaluations the sequential method performs in this scenario.
    pub fn useful_evals(self, m: usize) -> usize {
        match self {
            Scenario::Reflection => 1,
            Scenario::Expansion | Scenario::Contraction => 2,
            Scenario::Shrink => 2 + m,
        }
    }

    /// Synchronised evaluation rounds variant `v` needs in this scenario.
    pub fn rounds(self, v: Variant, m: usize) -> usize {
        let shrink = |k: usize| m.div_ceil(k);
        match (v, self) {
            (Variant::A1, s) => s.useful_evals(m),
            (Variant::A2, Scenario::Reflection | Scenario::Expansion) => 1,
            (Variant::A2, Scenario::Contraction) => 2,
            (Variant::A2, Scenario::Shrink) => 2 + shrink(2),
            (Variant::A3, Scenario::Shrink) => 1 + shrink(3),
            (Variant::A3, _) => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub scenario: Scenario,
    pub useful_evals: usize,
    pub rounds: usize,
    /// Objective evaluations actually performed, including wasted ones.
    pub evaluations: usize,
}

/// Evaluation bookkeeping of a run; the initial simplex is not included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EvalStats {
    pub useful_evals: usize,
    pub parallel_steps: usize,
    pub slots_per_step: usize,
    pub evaluations: usize,
}

impl EvalStats {
    pub fn new(slots_per_step: usize) -> Self {
        Self {
            slots_per_step,
            ..Self::default()
        }
    }

    pub fn record(&mut self, s: &StepStats) {
        self.useful_evals += s.useful_evals;
        self.parallel_steps += s.rounds;
        self.evaluations += s.evaluations;
    }

    /// Adds one iteration of `scenario` as variant `v` would execute it.
    pub fn record_scenario(&mut self, scenario: Scenario, v: Variant, m: usize) {
        self.useful_evals += scenario.useful_evals(m);
        self.parallel_steps += scenario.rounds(v, m);
    }
}

/// `useful_evals / (k * parallel_steps)`.
pub fn gamma_measure(stats: &EvalStats) -> Result<f64> {
    if stats.parallel_steps == 0 || stats.slots_per_step == 0 {
        return Err(Error::Parameter("no parallel steps recorded".into()));
    }
    Ok(stats.useful_evals as f64 / (stats.slots_per_step * stats.parallel_steps) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Progress {
    /// Cumulative useful evaluations after this iteration.
    pub useful_evals: usize,
    pub best: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeResult {
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub iterations: usize,
    pub stats: EvalStats,
    pub scenarios: Vec<Scenario>,
    pub progress: Vec<Progress>,
    /// Accepted simplex after every iteration.
    pub trace: Vec<Vec<Vertex>>,
}
