//! Three-level parallel optimisation toolkit.
//!
//! * level 1: [`neldermead`] provides the sequential Nelder-Mead method, the
//!   speculative variants that evaluate two or three trial points per round
//!   without changing the accepted simplex sequence, and a generalised
//!   k-point variant for comparison.
//! * level 2: [`scheduler`] distributes a pool of processes over a block of
//!   unequal tasks using empirical timing curves from [`timing_model`], and
//!   picks the level-1 variant with the cheapest useful evaluation.
//! * level 3: [`tridiag`] solves the complex tridiagonal systems produced by
//!   the Crank-Nicolson integrator in [`schrodinger`], either sequentially or
//!   with the partitioned (Wang) algorithm on a worker group from [`pool`].
//!
//! [`harness`] ties the levels together in a simulated mode (model
//! arithmetic only) and a real threaded mode.

pub mod error;
pub mod harness;
pub mod neldermead;
pub mod pool;
pub mod scheduler;
pub mod schrodinger;
pub mod timing_model;
pub mod tridiag;

pub use error::{Error, Result};
pub use num_complex::Complex64;
