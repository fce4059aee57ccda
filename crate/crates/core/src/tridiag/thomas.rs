use num_complex::Complex64 as C64;

use super::{TridiagSystem, PIVOT_EPS};
use crate::error::{Error, Result};

/// Sequential Gaussian elimination without pivoting.
pub fn solve_thomas(system: &TridiagSystem) -> Result<Vec<C64>> {
    thomas_bands(system.lower(), system.diag(), system.upper(), system.rhs())
}

/// Thomas algorithm on padded bands; used for the reduced system as well.
pub(crate) fn thomas_bands(a: &[C64], b: &[C64], c: &[C64], d: &[C64]) -> Result<Vec<C64>> {
    let n = b.len();
    let mut cp = vec![C64::new(0.0, 0.0); n];
    let mut x = vec![C64::new(0.0, 0.0); n];
    let mut piv = b[0];
    if piv.norm() < PIVOT_EPS {
        return Err(Error::Singular { row: 0 });
    }
    cp[0] = c[0] / piv;
    x[0] = d[0] / piv;
    for i in 1..n {
        piv = b[i] - a[i] * cp[i - 1];
        if piv.norm() < PIVOT_EPS {
            return Err(Error::Singular { row: i });
        }
        cp[i] = c[i] / piv;
        x[i] = (d[i] - a[i] * x[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        x[i] = x[i] - cp[i] * x[i + 1];
    }
    Ok(x)
}
