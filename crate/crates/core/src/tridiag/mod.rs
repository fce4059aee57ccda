//! Complex tridiagonal systems and their solvers.
//!
//! [`solve_thomas`] is the sequential reference. [`solve_wang`] partitions
//! the rows into contiguous blocks, eliminates each block independently,
//! solves a small tridiagonal system on the block-end unknowns and then
//! back-substitutes inside every block. [`solve_wang_team`] runs the same
//! block computations on a worker team and produces bit-identical output.

mod thomas;
mod wang;

pub use thomas::solve_thomas;
pub use wang::{
    back_substitute, eliminate_block, solve_reduced, solve_wang, solve_wang_team, BlockElimination, BoundarySummary,
    WangPlan,
};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Pivots with a smaller magnitude are reported as singular.
pub const PIVOT_EPS: f64 = 1e-300;

/// Tridiagonal system of size `n`.
///
/// Bands are stored padded to length `n`: `lower[i]` multiplies `x[i-1]` and
/// `upper[i]` multiplies `x[i+1]`, so `lower[0]` and `upper[n-1]` are always
/// zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagSystem {
    lower: Vec<C64>,
    diag: Vec<C64>,
    upper: Vec<C64>,
    rhs: Vec<C64>,
}

impl TridiagSystem {
    /// Builds a system from the `n-1` sub-diagonal entries, `n` diagonal
    /// entries, `n-1` super-diagonal entries and the right-hand side.
    pub fn new(lower: Vec<C64>, diag: Vec<C64>, upper: Vec<C64>, rhs: Vec<C64>) -> Result<Self> {
        let n = diag.len();
        if n < 2 {
            return Err(Error::Parameter(format!("system size {n} < 2")));
        }
        if lower.len() != n - 1 || upper.len() != n - 1 || rhs.len() != n {
            return Err(Error::Parameter(format!(
                "band lengths lower={} upper={} rhs={} inconsistent with n={n}",
                lower.len(),
                upper.len(),
                rhs.len()
            )));
        }
        let mut lo = Vec::with_capacity(n);
        lo.push(C64::new(0.0, 0.0));
        lo.extend(lower);
        let mut up = upper;
        up.push(C64::new(0.0, 0.0));
        Ok(Self {
            lower: lo,
            diag,
            upper: up,
            rhs,
        })
    }

    /// Builds a system from bands already padded to length `n`. The unused
    /// corner entries are zeroed.
    pub fn from_padded(mut lower: Vec<C64>, diag: Vec<C64>, mut upper: Vec<C64>, rhs: Vec<C64>) -> Result<Self> {
        let n = diag.len();
        if n < 2 {
            return Err(Error::Parameter(format!("system size {n} < 2")));
        }
        if lower.len() != n || upper.len() != n || rhs.len() != n {
            return Err(Error::Parameter("padded bands must all have length n".into()));
        }
        lower[0] = C64::new(0.0, 0.0);
        upper[n - 1] = C64::new(0.0, 0.0);
        Ok(Self {
            lower,
            diag,
            upper,
            rhs,
        })
    }

    /// Gives back the padded bands `[lower, diag, upper, rhs]`.
    pub fn into_bands(self) -> [Vec<C64>; 4] {
        [self.lower, self.diag, self.upper, self.rhs]
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn lower(&self) -> &[C64] {
        &self.lower
    }

    pub fn diag(&self) -> &[C64] {
        &self.diag
    }

    pub fn upper(&self) -> &[C64] {
        &self.upper
    }

    pub fn rhs(&self) -> &[C64] {
        &self.rhs
    }

    /// Matrix-vector product `A x`.
    pub fn apply(&self, x: &[C64]) -> Vec<C64> {
        let n = self.len();
        assert_eq!(x.len(), n);
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// `max |A x - d| / max |d|` (absolute when `d` is zero).
    pub fn relative_residual(&self, x: &[C64]) -> f64 {
        let ax = self.apply(x);
        let num = ax
            .iter()
            .zip(&self.rhs)
            .map(|(a, d)| (a - d).norm())
            .fold(0.0, f64::max);
        let den = self.rhs.iter().map(|d| d.norm()).fold(0.0, f64::max);
        if den > 0.0 {
            num / den
        } else {
            num
        }
    }
}

/// Operation count `17 J / p + 8 p` of the partitioned solver, without the
/// communication term (zero in-process).
pub fn wang_cost(j: usize, p: usize) -> f64 {
    assert!(p >= 1, "wang_cost needs p >= 1");
    17.0 * j as f64 / p as f64 + 8.0 * p as f64
}

/// Integer `p` minimising [`wang_cost`] for a system of size `j`; ties go to
/// the smaller `p`.
pub fn wang_cost_argmin(j: usize) -> usize {
    let mut best = 1;
    let mut p = 2;
    while 8 * p * p <= 17 * j.max(1) * 4 {
        if wang_cost(j, p) < wang_cost(j, best) {
            best = p;
        }
        p += 1;
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cost_examples() {
        assert_eq!(wang_cost(1600, 16), 1828.0);
        assert_eq!(wang_cost(1000, 1), 17.0 * 1000.0 + 8.0);
        // integer argmin of the formula, brute-forced independently
        let brute = |j: usize| (1..=1000).min_by(|&a, &b| wang_cost(j, a).total_cmp(&wang_cost(j, b))).unwrap();
        assert_eq!(brute(1600), 58);
        assert_eq!(wang_cost_argmin(1600), 58);
        assert_eq!(brute(16000), 184);
        assert_eq!(wang_cost_argmin(16000), 184);
    }

    #[test]
    fn cost_argmin_tracks_square_root() {
        for j in [100, 1000, 10_000, 100_000] {
            let p = wang_cost_argmin(j) as f64;
            let ideal = (17.0 * j as f64 / 8.0).sqrt();
            assert!((p - ideal).abs() <= 1.0, "j={j}: {p} vs {ideal}");
        }
    }

    #[test]
    fn layout_validation() {
        let one = C64::new(1.0, 0.0);
        assert!(TridiagSystem::new(vec![], vec![one], vec![], vec![one]).is_err());
        assert!(TridiagSystem::new(vec![one; 2], vec![one; 2], vec![one], vec![one; 2]).is_err());
        let s = TridiagSystem::new(vec![one], vec![one; 2], vec![one], vec![one; 2]).unwrap();
        assert_eq!(s.lower()[0], C64::new(0.0, 0.0));
        assert_eq!(s.upper()[1], C64::new(0.0, 0.0));
    }
}
