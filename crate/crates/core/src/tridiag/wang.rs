use std::ops::Range;
use std::sync::Mutex;

use num_complex::Complex64 as C64;

use super::thomas::{solve_thomas, thomas_bands};
use super::{TridiagSystem, PIVOT_EPS};
use crate::error::{Error, Result};
use crate::pool::run_team;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Partition of `n` rows into contiguous blocks whose sizes differ by at
/// most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WangPlan {
    bounds: Vec<usize>,
}

impl WangPlan {
    /// `p = 1` is a single block; otherwise `2 <= p <= n / 2` so that every
    /// block holds at least two rows.
    pub fn new(n: usize, p: usize) -> Result<Self> {
        if p == 0 || (p > 1 && p > n / 2) {
            return Err(Error::Parameter(format!("block count {p} outside 1..={} for n={n}", n / 2)));
        }
        Ok(Self {
            bounds: balanced_bounds(n, p),
        })
    }

    pub fn num_blocks(&self) -> usize {
        self.bounds.len() - 1
    }

    pub fn len(&self) -> usize {
        *self.bounds.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn block(&self, k: usize) -> Range<usize> {
        self.bounds[k]..self.bounds[k + 1]
    }

    pub fn blocks(&self) -> impl Iterator<Item = Range<usize>> + '_ {
        self.bounds.windows(2).map(|w| w[0]..w[1])
    }

    /// Block indices owned by worker `rank` of a team of `workers`.
    pub fn owned_blocks(&self, workers: usize, rank: usize) -> Range<usize> {
        let b = balanced_bounds(self.num_blocks(), workers);
        b[rank]..b[rank + 1]
    }
}

/// `parts + 1` boundaries splitting `0..n` into nearly equal ranges.
fn balanced_bounds(n: usize, parts: usize) -> Vec<usize> {
    let (q, r) = (n / parts, n % parts);
    let mut bounds = Vec::with_capacity(parts + 1);
    let mut s = 0;
    bounds.push(0);
    for k in 0..parts {
        s += q + usize::from(k < r);
        bounds.push(s);
    }
    bounds
}

/// Result of eliminating one block in isolation.
///
/// Every row but the last is expressed as
/// `x_i = y_i - f_i * x_prev_end - h_i * x_this_end`, where `x_prev_end` is
/// the last unknown of the previous block. The last row keeps its coupling
/// to both neighbours and becomes one row of the reduced system.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockElimination {
    start: usize,
    y: Vec<C64>,
    f: Vec<C64>,
    h: Vec<C64>,
    tail: [C64; 4],
}

/// The part of a [`BlockElimination`] the reduced system needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundarySummary {
    end_row: usize,
    head: [C64; 3],
    tail: [C64; 4],
}

impl BlockElimination {
    pub fn start(&self) -> usize {
        self.start
    }

    pub fn len(&self) -> usize {
        self.y.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn summary(&self) -> BoundarySummary {
        BoundarySummary {
            end_row: self.start + self.y.len(),
            head: [self.y[0], self.f[0], self.h[0]],
            tail: self.tail,
        }
    }
}

/// Forward and backward elimination inside one block of at least two rows.
///
/// The slices hold the block's rows of the padded bands; `a[0]` couples to
/// the previous block and `c[last]` to the next one. `start` is the global
/// index of the first row, used for error reporting and back-substitution.
pub fn eliminate_block(start: usize, a: &[C64], b: &[C64], c: &[C64], d: &[C64]) -> Result<BlockElimination> {
    let len = b.len();
    assert!(len >= 2 && a.len() == len && c.len() == len && d.len() == len);
    let mut bb = Vec::with_capacity(len);
    let mut dd = Vec::with_capacity(len);
    let mut ff = Vec::with_capacity(len);
    bb.push(b[0]);
    dd.push(d[0]);
    ff.push(a[0]);
    for i in 1..len {
        if bb[i - 1].norm() < PIVOT_EPS {
            return Err(Error::Singular { row: start + i - 1 });
        }
        let m = a[i] / bb[i - 1];
        bb.push(b[i] - m * c[i - 1]);
        dd.push(d[i] - m * dd[i - 1]);
        ff.push(-m * ff[i - 1]);
    }
    let last = len - 1;
    let mut y = vec![ZERO; last];
    let mut f = vec![ZERO; last];
    let mut h = vec![ZERO; last];
    let k = last - 1;
    y[k] = dd[k] / bb[k];
    f[k] = ff[k] / bb[k];
    h[k] = c[k] / bb[k];
    for i in (0..k).rev() {
        y[i] = (dd[i] - c[i] * y[i + 1]) / bb[i];
        f[i] = (ff[i] - c[i] * f[i + 1]) / bb[i];
        h[i] = -c[i] * h[i + 1] / bb[i];
    }
    Ok(BlockElimination {
        start,
        y,
        f,
        h,
        tail: [ff[last], bb[last], dd[last], c[last]],
    })
}

/// Solves the tridiagonal system on the block-end unknowns. Entry `k` of the
/// result is the last unknown of block `k`.
pub fn solve_reduced(summaries: &[BoundarySummary]) -> Result<Vec<C64>> {
    let p = summaries.len();
    let mut a = vec![ZERO; p];
    let mut b = vec![ZERO; p];
    let mut c = vec![ZERO; p];
    let mut d = vec![ZERO; p];
    for k in 0..p {
        let [fe, be, de, ce] = summaries[k].tail;
        a[k] = if k > 0 { fe } else { ZERO };
        if k + 1 < p {
            let [y0, f0, h0] = summaries[k + 1].head;
            b[k] = be - ce * f0;
            c[k] = -ce * h0;
            d[k] = de - ce * y0;
        } else {
            b[k] = be;
            d[k] = de;
        }
    }
    thomas_bands(&a, &b, &c, &d).map_err(|e| match e {
        Error::Singular { row } => Error::Singular {
            row: summaries[row].end_row,
        },
        other => other,
    })
}

/// Recovers the block's unknowns from the neighbouring block-end values.
/// `out` covers exactly the block's rows.
pub fn back_substitute(block: &BlockElimination, z_prev: C64, z_this: C64, out: &mut [C64]) {
    let last = block.y.len();
    assert_eq!(out.len(), last + 1);
    for i in 0..last {
        out[i] = block.y[i] - block.f[i] * z_prev - block.h[i] * z_this;
    }
    out[last] = z_this;
}

fn block_rows<'a>(system: &'a TridiagSystem, r: &Range<usize>) -> [&'a [C64]; 4] {
    [
        &system.lower()[r.clone()],
        &system.diag()[r.clone()],
        &system.upper()[r.clone()],
        &system.rhs()[r.clone()],
    ]
}

/// Partitioned solve with `p` blocks, computed on the calling thread.
pub fn solve_wang(system: &TridiagSystem, p: usize) -> Result<Vec<C64>> {
    if p == 1 {
        return solve_thomas(system);
    }
    if p < 2 || p > system.len() / 2 {
        return Err(Error::Parameter(format!(
            "block count {p} outside 2..={} for n={}",
            system.len() / 2,
            system.len()
        )));
    }
    let plan = WangPlan::new(system.len(), p)?;
    let elims = plan
        .blocks()
        .map(|r| {
            let [a, b, c, d] = block_rows(system, &r);
            eliminate_block(r.start, a, b, c, d)
        })
        .collect::<Result<Vec<_>>>()?;
    let summaries: Vec<_> = elims.iter().map(BlockElimination::summary).collect();
    let z = solve_reduced(&summaries)?;
    let mut x = vec![ZERO; system.len()];
    for (k, (e, r)) in elims.iter().zip(plan.blocks()).enumerate() {
        let z_prev = if k > 0 { z[k - 1] } else { ZERO };
        back_substitute(e, z_prev, z[k], &mut x[r]);
    }
    Ok(x)
}

/// [`solve_wang`] executed by a team of `workers` threads, each owning a
/// contiguous run of blocks. Rank 0 solves the reduced system between two
/// barriers. Output is bit-identical to [`solve_wang`] with the same `p`.
pub fn solve_wang_team(system: &TridiagSystem, p: usize, workers: usize) -> Result<Vec<C64>> {
    if p == 1 {
        return solve_thomas(system);
    }
    if workers == 0 || workers > p {
        return Err(Error::Parameter(format!("team size {workers} outside 1..={p}")));
    }
    if p > system.len() / 2 {
        return Err(Error::Parameter(format!(
            "block count {p} outside 2..={} for n={}",
            system.len() / 2,
            system.len()
        )));
    }
    let plan = WangPlan::new(system.len(), p)?;
    let summaries: Vec<Mutex<Option<BoundarySummary>>> = (0..p).map(|_| Mutex::new(None)).collect();
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    let reduced: Mutex<Vec<C64>> = Mutex::new(Vec::new());

    let parts = run_team(workers, |ctx| {
        let owned = plan.owned_blocks(ctx.size, ctx.rank);
        let mut elims = Vec::with_capacity(owned.len());
        for k in owned.clone() {
            let r = plan.block(k);
            let [a, b, c, d] = block_rows(system, &r);
            match eliminate_block(r.start, a, b, c, d) {
                Ok(e) => {
                    *summaries[k].lock().unwrap() = Some(e.summary());
                    elims.push(e);
                }
                Err(e) => {
                    failure.lock().unwrap().get_or_insert(e);
                    break;
                }
            }
        }
        ctx.barrier();
        if ctx.is_leader() && failure.lock().unwrap().is_none() {
            let s: Vec<_> = summaries.iter().map(|m| m.lock().unwrap().unwrap()).collect();
            match solve_reduced(&s) {
                Ok(z) => *reduced.lock().unwrap() = z,
                Err(e) => *failure.lock().unwrap() = Some(e),
            }
        }
        ctx.barrier();
        if failure.lock().unwrap().is_some() {
            return None;
        }
        let z = reduced.lock().unwrap().clone();
        let span = plan.block(owned.start).start..plan.block(owned.end - 1).end;
        let mut out = vec![ZERO; span.len()];
        for (k, e) in owned.zip(&elims) {
            let r = plan.block(k);
            let z_prev = if k > 0 { z[k - 1] } else { ZERO };
            back_substitute(e, z_prev, z[k], &mut out[r.start - span.start..r.end - span.start]);
        }
        Some(out)
    });
    if let Some(e) = failure.into_inner().unwrap() {
        return Err(e);
    }
    Ok(parts.into_iter().flatten().flatten().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_dominant(rng: &mut ChaCha8Rng, n: usize) -> TridiagSystem {
        fn z(rng: &mut ChaCha8Rng) -> C64 {
            C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        }
        let lower: Vec<_> = (0..n - 1).map(|_| z(rng)).collect();
        let upper: Vec<_> = (0..n - 1).map(|_| z(rng)).collect();
        let rhs: Vec<_> = (0..n).map(|_| z(rng)).collect();
        let diag: Vec<_> = (0..n)
            .map(|i| {
                let off = if i > 0 { lower[i - 1].norm() } else { 0.0 } + if i + 1 < n { upper[i].norm() } else { 0.0 };
                let phase = z(rng);
                let phase = if phase.norm() > 0.0 { phase / phase.norm() } else { C64::new(1.0, 0.0) };
                phase * (off + 0.5 + rng.gen_range(0.0..1.0))
            })
            .collect();
        TridiagSystem::new(lower, diag, upper, rhs).unwrap()
    }

    fn max_rel_diff(x: &[C64], y: &[C64]) -> f64 {
        let scale = y.iter().map(|v| v.norm()).fold(0.0, f64::max);
        x.iter().zip(y).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max) / scale
    }

    #[test]
    fn plan_partitions_evenly() {
        let plan = WangPlan::new(10, 3).unwrap();
        assert_eq!(plan.blocks().collect::<Vec<_>>(), vec![0..4, 4..7, 7..10]);
        assert_eq!(plan.owned_blocks(2, 0), 0..2);
        assert_eq!(plan.owned_blocks(2, 1), 2..3);
        assert!(WangPlan::new(10, 6).is_err());
        assert!(WangPlan::new(10, 0).is_err());
        assert_eq!(WangPlan::new(10, 5).unwrap().blocks().map(|r| r.len()).min(), Some(2));
    }

    #[test]
    fn identity_any_p() {
        let one = C64::new(1.0, 0.0);
        let d: Vec<_> = (0..40).map(|i| C64::new(i as f64, -(i as f64) / 3.0)).collect();
        let s = TridiagSystem::new(vec![ZERO; 39], vec![one; 40], vec![ZERO; 39], d.clone()).unwrap();
        for p in [2, 3, 7, 20] {
            assert_eq!(solve_wang(&s, p).unwrap(), d);
        }
    }

    #[test]
    fn matches_thomas() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in [100, 1000] {
            let s = random_dominant(&mut rng, n);
            let x = solve_thomas(&s).unwrap();
            assert!(s.relative_residual(&x) <= 1e-12);
            for p in [2, 4, 8, 16, 32, 50] {
                let w = solve_wang(&s, p).unwrap();
                assert!(max_rel_diff(&w, &x) <= 1e-10, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn single_block_is_thomas() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = random_dominant(&mut rng, 257);
        assert_eq!(solve_wang(&s, 1).unwrap(), solve_thomas(&s).unwrap());
    }

    #[test]
    fn team_is_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_dominant(&mut rng, 1001);
        for p in [2, 5, 16] {
            let seq = solve_wang(&s, p).unwrap();
            for w in 1..=p.min(4) {
                assert_eq!(solve_wang_team(&s, p, w).unwrap(), seq, "p={p} w={w}");
            }
        }
        assert!(solve_wang_team(&s, 4, 5).is_err());
    }

    #[test]
    fn rejects_bad_block_counts() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_dominant(&mut rng, 10);
        assert!(matches!(solve_wang(&s, 6), Err(Error::Parameter(_))));
        assert!(matches!(solve_wang(&s, 0), Err(Error::Parameter(_))));
    }

    #[test]
    fn singular_block_reported_by_both_drivers() {
        let one = C64::new(1.0, 0.0);
        let mut diag = vec![C64::new(4.0, 0.0); 12];
        diag[6] = ZERO;
        diag[7] = ZERO;
        let s = TridiagSystem::new(vec![one; 11], diag, vec![one; 11], vec![one; 12]).unwrap();
        assert!(matches!(solve_wang(&s, 2), Err(Error::Singular { .. })));
        assert!(matches!(solve_wang_team(&s, 2, 2), Err(Error::Singular { .. })));
    }
}
