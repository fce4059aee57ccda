use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub const WAVEPACKET_K: f64 = 100.0;
pub const WAVEPACKET_ALPHA: f64 = 1.0 / 120.0;
pub const WAVEPACKET_X0: f64 = 0.8;

/// `e^{-i pi/4}`.
pub(crate) const E_MINUS_I_PI_4: C64 = C64::new(FRAC_1_SQRT_2, -FRAC_1_SQRT_2);

/// Gaussian beam moving left with wave number -6:
/// `u = e^{-i pi/4} / sqrt(4t - i) * exp((i x^2 - 6x - 36t) / (4t - i))`.
pub fn exact_gaussian(x: f64, t: f64) -> C64 {
    let den = C64::new(4.0 * t, -1.0);
    let num = C64::new(-6.0 * x - 36.0 * t, x * x);
    E_MINUS_I_PI_4 / den.sqrt() * (num / den).exp()
}

/// Wave packet with the default parameters `k = 100`, `alpha = 1/120`,
/// `x0 = 0.8`.
pub fn exact_wavepacket(x: f64, t: f64) -> C64 {
    wavepacket(x, t, WAVEPACKET_K, WAVEPACKET_ALPHA, WAVEPACKET_X0)
}

/// `u = (1 + i t / alpha)^{-1/2} * exp(i k (x - x0 - k t) - (x - x0 - 2 k t)^2 / (4 (alpha + i t)))`.
pub fn wavepacket(x: f64, t: f64, k: f64, alpha: f64, x0: f64) -> C64 {
    let amp = C64::new(1.0, t / alpha).sqrt().inv();
    let shift = x - x0 - 2.0 * k * t;
    let phase = C64::new(0.0, k * (x - x0 - k * t)) - shift * shift / (4.0 * C64::new(alpha, t));
    amp * phase.exp()
}

/// Closed-form solution of `i u_t + u_xx = 0` used as a benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExactSolution {
    Gaussian,
    Wavepacket { k: f64, alpha: f64, x0: f64 },
}

impl ExactSolution {
    pub fn wavepacket() -> Self {
        ExactSolution::Wavepacket {
            k: WAVEPACKET_K,
            alpha: WAVEPACKET_ALPHA,
            x0: WAVEPACKET_X0,
        }
    }

    pub fn eval(&self, x: f64, t: f64) -> C64 {
        match *self {
            ExactSolution::Gaussian => exact_gaussian(x, t),
            ExactSolution::Wavepacket { k, alpha, x0 } => wavepacket(x, t, k, alpha, x0),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_at_time_zero() {
        assert!((exact_gaussian(0.0, 0.0).norm() - 1.0).abs() < 1e-14);
        assert!((exact_gaussian(2.0, 0.0).norm() - (-4.0f64).exp()).abs() < 1e-15);
        // reduces to exp(-x^2 - 6 i x)
        for x in [-1.3, 0.4, 2.2] {
            let want = C64::new(-x * x, -6.0 * x).exp();
            assert!((exact_gaussian(x, 0.0) - want).norm() < 1e-13);
        }
    }

    #[test]
    fn wavepacket_at_time_zero() {
        assert!((exact_wavepacket(WAVEPACKET_X0, 0.0) - C64::new(1.0, 0.0)).norm() < 1e-15);
        for dx in [0.05, 0.1, 0.2] {
            let want = (-dx * dx / (4.0 * WAVEPACKET_ALPHA)).exp();
            assert!((exact_wavepacket(WAVEPACKET_X0 + dx, 0.0).norm() - want).abs() < 1e-14);
        }
    }

    #[test]
    fn finite_everywhere() {
        for i in 0..50 {
            let x = -10.0 + 0.4 * i as f64;
            for t in [0.0, 0.01, 0.5, 2.0] {
                assert!(exact_gaussian(x, t).is_finite());
                assert!(exact_wavepacket(x / 5.0, t / 25.0).is_finite());
            }
        }
    }

    /// Fourth-order central differences of the closed forms satisfy the PDE,
    /// with the residual shrinking under refinement.
    #[test]
    fn satisfies_the_equation() {
        fn residual(sol: ExactSolution, x: f64, t: f64, d: f64) -> f64 {
            let f = |x, t| sol.eval(x, t);
            let ut = (-f(x, t + 2.0 * d) + 8.0 * f(x, t + d) - 8.0 * f(x, t - d) + f(x, t - 2.0 * d)) / (12.0 * d);
            let uxx = (-f(x + 2.0 * d, t) + 16.0 * f(x + d, t) - 30.0 * f(x, t) + 16.0 * f(x - d, t)
                - f(x - 2.0 * d, t))
                / (12.0 * d * d);
            (C64::i() * ut + uxx).norm()
        }
        let g = ExactSolution::Gaussian;
        let (r1, r2) = (residual(g, 0.3, 0.2, 1e-2), residual(g, 0.3, 0.2, 5e-3));
        assert!(r2 < r1 / 8.0 && r2 < 1e-3, "{r1} {r2}");
        let w = ExactSolution::wavepacket();
        let (r1, r2) = (residual(w, 0.85, 0.001, 2e-4), residual(w, 0.85, 0.001, 1e-4));
        assert!(r2 < r1 / 8.0, "{r1} {r2}");
    }
}
