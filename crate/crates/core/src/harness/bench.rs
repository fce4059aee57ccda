use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neldermead::{gamma_measure, generalized_gamma, minimize, rosenbrock, rosenbrock_start, FnObjective, Variant};

/// Iterations the sequential reference may use per generalized iteration.
const SEQUENTIAL_BUDGET_FACTOR: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchVariant {
    Speculative(Variant),
    Generalized(usize),
}

impl FromStr for BenchVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        if let Some(k) = lower.strip_prefix("gen-") {
            let k = k
                .parse()
                .map_err(|_| Error::Parameter(format!("bad generalized degree in `{s}`")))?;
            return Ok(BenchVariant::Generalized(k));
        }
        Ok(BenchVariant::Speculative(lower.parse()?))
    }
}

impl fmt::Display for BenchVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BenchVariant::Speculative(v) => write!(f, "a{}", v.k()),
            BenchVariant::Generalized(k) => write!(f, "gen-{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub run: usize,
    pub variant: String,
    pub dim: usize,
    pub gamma: f64,
    pub iterations: usize,
    pub best_value: f64,
    pub parallel_steps: usize,
    pub evaluations: usize,
}

/// Rosenbrock runs of one variant. Run 0 starts at `(-1.2, 1, .., 1)`;
/// later runs add a uniform `[-0.5, 0.5]` offset per coordinate drawn from
/// `seed`.
pub fn nm_bench(
    dim: usize,
    variant: BenchVariant,
    iterations: usize,
    tolerance: f64,
    runs: usize,
    seed: u64,
) -> Result<Vec<BenchRow>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = rosenbrock_start(dim);
    (0..runs.max(1))
        .map(|run| {
            let x0: Vec<f64> = if run == 0 {
                base.clone()
            } else {
                base.iter().map(|v| v + rng.gen_range(-0.5..=0.5)).collect()
            };
            let row = |gamma, iterations, best_value, parallel_steps, evaluations| BenchRow {
                run,
                variant: variant.to_string(),
                dim,
                gamma,
                iterations,
                best_value,
                parallel_steps,
                evaluations,
            };
            match variant {
                BenchVariant::Speculative(v) => {
                    let r = minimize(&mut FnObjective(rosenbrock), &x0, v, iterations, tolerance)?;
                    Ok(row(
                        gamma_measure(&r.stats)?,
                        r.iterations,
                        r.best_f,
                        r.stats.parallel_steps,
                        r.stats.evaluations,
                    ))
                }
                BenchVariant::Generalized(k) => {
                    let g = generalized_gamma(
                        rosenbrock,
                        &x0,
                        k,
                        iterations,
                        tolerance,
                        SEQUENTIAL_BUDGET_FACTOR * iterations,
                    )?;
                    Ok(row(g.gamma, g.iterations, g.best, g.parallel_steps, g.evaluations))
                }
            }
        })
        .collect()
}

/// CSV with columns `run,variant,dim,gamma,iterations,best_value,parallel_steps,evaluations`.
pub fn write_bench_csv<W: Write>(rows: &[BenchRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_variant_names() {
        assert_eq!("a2".parse::<BenchVariant>().unwrap(), BenchVariant::Speculative(Variant::A2));
        assert_eq!("gen-4".parse::<BenchVariant>().unwrap(), BenchVariant::Generalized(4));
        assert_eq!(BenchVariant::Generalized(4).to_string(), "gen-4");
        assert!("gen-x".parse::<BenchVariant>().is_err());
        assert!("b7".parse::<BenchVariant>().is_err());
    }

    #[test]
    fn runs_are_seeded() {
        let a = nm_bench(3, BenchVariant::Speculative(Variant::A2), 100, 1e-8, 3, 5).unwrap();
        assert_eq!(a, nm_bench(3, BenchVariant::Speculative(Variant::A2), 100, 1e-8, 3, 5).unwrap());
        assert_eq!(a.len(), 3);
        assert_ne!(a[1].best_value, a[2].best_value);
        let b = nm_bench(3, BenchVariant::Speculative(Variant::A2), 100, 1e-8, 3, 6).unwrap();
        assert_eq!(a[0], b[0]);
        assert_ne!(a[1], b[1]);
        let g = nm_bench(4, BenchVariant::Generalized(2), 100, 1e-8, 1, 0).unwrap();
        assert!(g[0].gamma > 0.0);
    }
}
