//! Crank-Nicolson integration of `i u_t + u_xx = 0` on a bounded interval
//! with rational-function artificial boundary conditions.
//!
//! The boundary operator approximates the transparent condition
//! `d_n u + e^{-i pi/4} D_t^{1/2} u = 0` by
//! `d_n u = -e^{-i pi/4} ((a_0 + .. + a_3) u - sum_k a_k d_k phi_k)` with
//! auxiliary fields `phi_k' + d_k phi_k = u` at each end. The seven numbers
//! `(a_0..a_3, d_1..d_3)` are the parameters tuned by the optimiser, and
//! [`objective`] is the max-norm error against the closed-form solution,
//! maximised over a set of benchmark problems.

mod exact;
mod integrate;
mod scheme;

pub use exact::{
    exact_gaussian, exact_wavepacket, wavepacket, ExactSolution, WAVEPACKET_ALPHA, WAVEPACKET_K, WAVEPACKET_X0,
};
pub use integrate::{
    integrate, integrate_with_snapshots, objective, write_snapshots_csv, IntegrateOutcome, Snapshot, SolverMode,
};
pub use scheme::{build_step_system, Boundary, PdeState};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One benchmark: closed-form solution on `[a, b] x [0, horizon]` with `j`
/// space intervals and `n` time steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeProblem {
    pub solution: ExactSolution,
    pub domain: [f64; 2],
    pub horizon: f64,
    pub j: usize,
    pub n: usize,
}

impl PdeProblem {
    pub fn new(solution: ExactSolution, domain: [f64; 2], horizon: f64, j: usize, n: usize) -> Result<Self> {
        let p = Self {
            solution,
            domain,
            horizon,
            j,
            n,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let [a, b] = self.domain;
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::Parameter(format!("empty domain [{a}, {b}]")));
        }
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return Err(Error::Parameter(format!("horizon {} must be positive", self.horizon)));
        }
        if self.j < 4 || self.n < 1 {
            return Err(Error::Parameter(format!(
                "grid {}x{} too small (need J >= 4, N >= 1)",
                self.j, self.n
            )));
        }
        Ok(())
    }

    pub fn h(&self) -> f64 {
        (self.domain[1] - self.domain[0]) / self.j as f64
    }

    pub fn tau(&self) -> f64 {
        self.horizon / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        self.domain[0] + j as f64 * self.h()
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.tau()
    }

    /// Number of grid nodes, `J + 1`.
    pub fn nodes(&self) -> usize {
        self.j + 1
    }

    pub fn with_grid(&self, j: usize, n: usize) -> Result<Self> {
        Self::new(self.solution, self.domain, self.horizon, j, n)
    }

    /// Shrinks both grid sizes by `scale` in `(0, 1]`, rounding to nearest.
    pub fn scaled(&self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(Error::Parameter(format!("grid scale {scale} outside (0, 1]")));
        }
        let s = |v: usize| ((v as f64 * scale).round() as usize).max(1);
        self.with_grid(s(self.j).max(4), s(self.n))
    }

    /// The four benchmark problems with their reference grids.
    pub fn reference(m: usize) -> Result<Self> {
        let (sol, domain, horizon, j, n) = match m {
            1 => (ExactSolution::Gaussian, [-5.0, 5.0], 0.8, 8000, 4000),
            2 => (ExactSolution::wavepacket(), [0.0, 1.5], 0.04, 12000, 4000),
            3 => (ExactSolution::Gaussian, [-10.0, 10.0], 2.0, 16000, 10000),
            4 => (ExactSolution::wavepacket(), [0.0, 2.0], 0.08, 16000, 8000),
            _ => return Err(Error::Parameter(format!("benchmark problem {m} outside 1..=4"))),
        };
        Self::new(sol, domain, horizon, j, n)
    }
}

/// Problems 1-4 on their reference grids.
pub fn reference_suite() -> Vec<PdeProblem> {
    (1..=4).map(|m| PdeProblem::reference(m).unwrap()).collect()
}

/// Grid sizes `(J, N)` of the three scheduling benchmarks.
pub const TABLE1_GRIDS: [[(usize, usize); 4]; 3] = [
    [(8000, 40000), (4000, 20000), (2000, 20000), (2000, 10000)],
    [(8000, 20000), (4000, 20000), (4000, 10000), (2000, 10000)],
    [(8000, 10000), (2000, 20000), (2000, 10000), (1000, 20000)],
];

/// Problems 1-4 on the grids of scheduling benchmark `variant` (1, 2 or 3).
pub fn table1_suite(variant: usize) -> Result<Vec<PdeProblem>> {
    let grids = TABLE1_GRIDS
        .get(variant.wrapping_sub(1))
        .ok_or_else(|| Error::Parameter(format!("benchmark variant {variant} outside 1..=3")))?;
    grids
        .iter()
        .enumerate()
        .map(|(i, &(j, n))| PdeProblem::reference(i + 1)?.with_grid(j, n))
        .collect()
}

pub fn scale_suite(problems: &[PdeProblem], scale: f64) -> Result<Vec<PdeProblem>> {
    problems.iter().map(|p| p.scaled(scale)).collect()
}

/// Rational boundary-condition parameters: `a_0..a_3` and `d_1..d_3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbcParams {
    pub a: [f64; 4],
    pub d: [f64; 3],
}

impl AbcParams {
    pub const DIM: usize = 7;

    /// All coefficients zero, which reduces the boundary rows to a
    /// homogeneous Neumann condition.
    pub fn zero() -> Self {
        Self {
            a: [0.0; 4],
            d: [0.0; 3],
        }
    }

    /// Reads `(a_0, a_1, a_2, a_3, d_1, d_2, d_3)`.
    pub fn from_slice(v: &[f64]) -> Result<Self> {
        if v.len() != Self::DIM {
            return Err(Error::Parameter(format!(
                "expected {} boundary parameters, got {}",
                Self::DIM,
                v.len()
            )));
        }
        Ok(Self {
            a: [v[0], v[1], v[2], v[3]],
            d: [v[4], v[5], v[6]],
        })
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.a.iter().chain(&self.d).copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_problems() {
        let s = reference_suite();
        assert_eq!(s[0].domain, [-5.0, 5.0]);
        assert_eq!((s[1].j, s[1].n), (12000, 4000));
        assert_eq!(s[2].horizon, 2.0);
        assert_eq!(s[3].domain, [0.0, 2.0]);
        assert!(PdeProblem::reference(5).is_err());
        assert!((s[0].h() - 10.0 / 8000.0).abs() < 1e-18);
    }

    #[test]
    fn table1_and_scaling() {
        let b1 = table1_suite(1).unwrap();
        assert_eq!((b1[0].j, b1[0].n), (8000, 40000));
        assert_eq!(b1[1].solution, ExactSolution::wavepacket());
        let small = scale_suite(&b1, 0.05).unwrap();
        assert_eq!((small[0].j, small[0].n), (400, 2000));
        assert_eq!((small[3].j, small[3].n), (100, 500));
        assert!(table1_suite(0).is_err());
        assert!(b1[0].scaled(0.0).is_err());
        assert!(b1[0].scaled(1.5).is_err());
    }

    #[test]
    fn abc_vector_round_trip() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0];
        let p = AbcParams::from_slice(&v).unwrap();
        assert_eq!(p.a, [1.0, 2.0, 3.0, 4.0]);
        assert_eq!(p.to_vec(), v);
        assert!(AbcParams::from_slice(&v[..6]).is_err());
    }

    #[test]
    fn problem_json_round_trip() {
        let p = PdeProblem::reference(2).unwrap();
        let text = serde_json::to_string(&p).unwrap();
        assert!(text.contains("\"kind\":\"wavepacket\""));
        let back: PdeProblem = serde_json::from_str(&text).unwrap();
        assert_eq!(back, p);
    }
}
