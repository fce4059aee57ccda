use std::ops::Range;

use num_complex::Complex64 as C64;

use super::exact::E_MINUS_I_PI_4;
use super::{AbcParams, PdeProblem};
use crate::tridiag::TridiagSystem;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Boundary treatment at both ends of the interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Abc(AbcParams),
    /// Boundary values taken from the exact solution; used to isolate the
    /// interior discretisation error.
    ExactDirichlet,
}

/// Grid values at one time level plus the auxiliary boundary fields.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeState {
    pub u: Vec<C64>,
    pub phi_left: [C64; 3],
    pub phi_right: [C64; 3],
    pub step: usize,
}

impl PdeState {
    /// The exact solution sampled at `t = 0`, auxiliary fields zero.
    pub fn initial(problem: &PdeProblem) -> Self {
        Self::from_values((0..problem.nodes()).map(|j| problem.solution.eval(problem.x(j), 0.0)).collect())
    }

    pub fn from_values(u: Vec<C64>) -> Self {
        Self {
            u,
            phi_left: [ZERO; 3],
            phi_right: [ZERO; 3],
            step: 0,
        }
    }
}

/// Step-independent coefficients of the discrete equations.
#[derive(Debug, Clone)]
pub(crate) struct Coeffs {
    h: f64,
    /// `1 / (2 h^2)`, both off-diagonals of an interior row.
    off: f64,
    /// `i / tau - 1 / h^2`.
    diag: C64,
    /// `i / tau + 1 / h^2`, weight of `U_j^{n-1}` on the right-hand side.
    keep: C64,
    abc: Option<AbcCoeffs>,
}

#[derive(Debug, Clone)]
struct AbcCoeffs {
    /// Trapezoidal update `phi^n = q phi^{n-1} + w (u^n + u^{n-1})`.
    q: [f64; 3],
    w: [f64; 3],
    /// `e^{-i pi/4} / 2 * sum a_k`.
    es_half: C64,
    /// `e^{-i pi/4} / 2 * a_k d_k` for k = 1..3.
    ead_half: [C64; 3],
}

impl Coeffs {
    pub(crate) fn new(problem: &PdeProblem, boundary: &Boundary) -> Self {
        let h = problem.h();
        let tau = problem.tau();
        let abc = match boundary {
            Boundary::ExactDirichlet => None,
            Boundary::Abc(p) => {
                let mut q = [0.0; 3];
                let mut w = [0.0; 3];
                let mut ead_half = [ZERO; 3];
                for k in 0..3 {
                    let r = 1.0 / (1.0 + 0.5 * tau * p.d[k]);
                    q[k] = (1.0 - 0.5 * tau * p.d[k]) * r;
                    w[k] = 0.5 * tau * r;
                    ead_half[k] = E_MINUS_I_PI_4 * (0.5 * p.a[k + 1] * p.d[k]);
                }
                Some(AbcCoeffs {
                    q,
                    w,
                    es_half: E_MINUS_I_PI_4 * (0.5 * p.a.iter().sum::<f64>()),
                    ead_half,
                })
            }
        };
        Self {
            h,
            off: 0.5 / (h * h),
            diag: C64::new(-1.0 / (h * h), 1.0 / tau),
            keep: C64::new(1.0 / (h * h), 1.0 / tau),
            abc,
        }
    }

    /// `(lower, diag, upper, rhs)` of interior row `j`.
    fn interior(&self, u: &[C64], j: usize) -> [C64; 4] {
        let off = C64::new(self.off, 0.0);
        [off, self.diag, off, self.keep * u[j] - self.off * (u[j + 1] + u[j - 1])]
    }

    /// Boundary row in terms of the three nodes nearest the boundary,
    /// `u0` on it. Returns `(coef on u0, coef on u1, rhs)` after the `u2`
    /// term has been folded away with the neighbouring interior row.
    fn abc_row(&self, abc: &AbcCoeffs, u0: C64, u1: C64, u2: C64, phi: &[C64; 3], next: [C64; 4]) -> [C64; 3] {
        let h = self.h;
        let mut c0 = C64::new(0.75 / h, 0.0) + abc.es_half;
        let mut c1 = C64::new(-1.0 / h, 0.0);
        let c2 = 0.25 / h;
        let mut rhs = (4.0 * u1 - 3.0 * u0 - u2) * (0.25 / h) - abc.es_half * u0;
        for k in 0..3 {
            c0 -= abc.ead_half[k] * abc.w[k];
            rhs += abc.ead_half[k] * ((1.0 + abc.q[k]) * phi[k] + abc.w[k] * u0);
        }
        let [a1, b1, cc1, r1] = next;
        let f = c2 / cc1;
        c0 -= f * a1;
        c1 -= f * b1;
        rhs -= f * r1;
        [c0, c1, rhs]
    }

    /// Writes rows `range` of the step system into the band slices, which
    /// are indexed relative to `range.start`.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn fill_rows(
        &self,
        problem: &PdeProblem,
        u: &[C64],
        phi_left: &[C64; 3],
        phi_right: &[C64; 3],
        t_new: f64,
        range: Range<usize>,
        bands: [&mut [C64]; 4],
    ) {
        let [lo, di, up, rh] = bands;
        let last = u.len() - 1;
        for (i, j) in range.enumerate() {
            let row = if j == 0 || j == last {
                let (near, far) = if j == 0 { (0, 1) } else { (last, last - 1) };
                match &self.abc {
                    None => [ZERO, C64::new(1.0, 0.0), ZERO, problem.solution.eval(problem.x(j), t_new)],
                    Some(abc) => {
                        let far2 = if j == 0 { 2 } else { last - 2 };
                        let phi = if j == 0 { phi_left } else { phi_right };
                        let [c0, c1, r] = self.abc_row(abc, u[near], u[far], u[far2], phi, self.interior(u, far));
                        if j == 0 {
                            [ZERO, c0, c1, r]
                        } else {
                            [c1, c0, ZERO, r]
                        }
                    }
                }
            } else {
                self.interior(u, j)
            };
            lo[i] = row[0];
            di[i] = row[1];
            up[i] = row[2];
            rh[i] = row[3];
        }
    }

    /// Advances the auxiliary fields of one boundary from `u_old` to `u_new`.
    pub(crate) fn advance_phi(&self, phi: &mut [C64; 3], u_old: C64, u_new: C64) {
        if let Some(abc) = &self.abc {
            for k in 0..3 {
                phi[k] = abc.q[k] * phi[k] + abc.w[k] * (u_new + u_old);
            }
        }
    }
}

/// The tridiagonal system whose solution is the grid function at the next
/// time level.
pub fn build_step_system(state: &PdeState, problem: &PdeProblem, boundary: &Boundary) -> TridiagSystem {
    let coeffs = Coeffs::new(problem, boundary);
    let n = problem.nodes();
    assert_eq!(state.u.len(), n, "state length does not match the grid");
    let mut bands = [vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]];
    let [lo, di, up, rh] = &mut bands;
    coeffs.fill_rows(
        problem,
        &state.u,
        &state.phi_left,
        &state.phi_right,
        problem.t(state.step + 1),
        0..n,
        [lo, di, up, rh],
    );
    let [lo, di, up, rh] = bands;
    TridiagSystem::from_padded(lo, di, up, rh).expect("grid has at least five nodes")
}
