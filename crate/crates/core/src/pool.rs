//! Bounded worker pool with leased groups and barrier-synchronised teams.
//!
//! The pool does not keep threads alive between jobs. A [`Lease`] reserves
//! `n` of the `capacity` worker slots; [`Lease::run_team`] then runs one
//! closure per worker on scoped threads sharing a barrier. Slot accounting
//! is atomic, so the number of active workers can never exceed the capacity,
//! and the pool records the peak it has seen.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Barrier};

use crate::error::{Error, Result};

#[derive(Debug)]
struct Slots {
    capacity: usize,
    active: AtomicUsize,
    peak: AtomicUsize,
}

/// Cheap to clone; clones share the same slots.
#[derive(Debug, Clone)]
pub struct WorkerPool {
    slots: Arc<Slots>,
}

impl WorkerPool {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Parameter("worker pool capacity must be positive".into()));
        }
        Ok(Self {
            slots: Arc::new(Slots {
                capacity,
                active: AtomicUsize::new(0),
                peak: AtomicUsize::new(0),
            }),
        })
    }

    pub fn capacity(&self) -> usize {
        self.slots.capacity
    }

    pub fn active(&self) -> usize {
        self.slots.active.load(Ordering::SeqCst)
    }

    /// Largest number of simultaneously leased workers observed so far.
    pub fn peak(&self) -> usize {
        self.slots.peak.load(Ordering::SeqCst)
    }

    pub fn reset_peak(&self) {
        self.slots.peak.store(self.active(), Ordering::SeqCst);
    }

    /// Reserves `n` workers, failing immediately if they are not free.
    pub fn lease(&self, n: usize) -> Result<Lease> {
        if n == 0 {
            return Err(Error::Parameter("cannot lease an empty worker group".into()));
        }
        let s = &self.slots;
        let mut cur = s.active.load(Ordering::SeqCst);
        loop {
            if cur + n > s.capacity {
                return Err(Error::PoolExhausted {
                    requested: n,
                    available: s.capacity - cur,
                    capacity: s.capacity,
                });
            }
            match s
                .active
                .compare_exchange(cur, cur + n, Ordering::SeqCst, Ordering::SeqCst)
            {
                Ok(_) => break,
                Err(actual) => cur = actual,
            }
        }
        s.peak.fetch_max(cur + n, Ordering::SeqCst);
        Ok(Lease {
            slots: Arc::clone(&self.slots),
            size: n,
        })
    }
}

/// A reserved worker group; the slots are returned on drop.
#[derive(Debug)]
pub struct Lease {
    slots: Arc<Slots>,
    size: usize,
}

impl Lease {
    pub fn size(&self) -> usize {
        self.size
    }

    /// Runs `f` once per worker, each on its own thread, and returns the
    /// results in rank order. A single-worker lease runs on the caller's
    /// thread.
    pub fn run_team<T, F>(&self, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(TeamCtx<'_>) -> T + Sync,
    {
        run_team(self.size, f)
    }
}

impl Drop for Lease {
    fn drop(&mut self) {
        self.slots.active.fetch_sub(self.size, Ordering::SeqCst);
    }
}

/// Per-worker view of a running team.
#[derive(Debug, Clone, Copy)]
pub struct TeamCtx<'a> {
    pub rank: usize,
    pub size: usize,
    barrier: &'a Barrier,
}

impl TeamCtx<'_> {
    /// Blocks until every worker of the team has reached the same point.
    pub fn barrier(&self) {
        if self.size > 1 {
            self.barrier.wait();
        }
    }

    pub fn is_leader(&self) -> bool {
        self.rank == 0
    }
}

/// Runs `f` on `size` scoped threads sharing a barrier, without pool
/// accounting. Rank 0 runs on the calling thread.
pub fn run_team<T, F>(size: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(TeamCtx<'_>) -> T + Sync,
{
    assert!(size > 0, "team size must be positive");
    let barrier = Barrier::new(size);
    if size == 1 {
        return vec![f(TeamCtx {
            rank: 0,
            size,
            barrier: &barrier,
        })];
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = (1..size)
            .map(|rank| {
                let f = &f;
                let barrier = &barrier;
                scope.spawn(move || f(TeamCtx { rank, size, barrier }))
            })
            .collect();
        let mut out = Vec::with_capacity(size);
        out.push(f(TeamCtx {
            rank: 0,
            size,
            barrier: &barrier,
        }));
        for h in handles {
            out.push(h.join().unwrap_or_else(|e| std::panic::resume_unwind(e)));
        }
        out
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    #[test]
    fn lease_accounting() {
        let pool = WorkerPool::new(4).unwrap();
        let a = pool.lease(3).unwrap();
        assert_eq!(pool.active(), 3);
        assert!(matches!(
            pool.lease(2),
            Err(Error::PoolExhausted {
                requested: 2,
                available: 1,
                capacity: 4
            })
        ));
        let b = pool.lease(1).unwrap();
        assert_eq!(pool.peak(), 4);
        drop(a);
        assert_eq!(pool.active(), 1);
        drop(b);
        assert_eq!(pool.active(), 0);
        assert!(pool.lease(0).is_err());
        assert!(WorkerPool::new(0).is_err());
    }

    #[test]
    fn team_runs_every_rank_and_syncs() {
        let pool = WorkerPool::new(4).unwrap();
        let lease = pool.lease(4).unwrap();
        let arrived = AtomicUsize::new(0);
        let seen = lease.run_team(|ctx| {
            arrived.fetch_add(1, Ordering::SeqCst);
            ctx.barrier();
            (ctx.rank, arrived.load(Ordering::SeqCst))
        });
        assert_eq!(seen, vec![(0, 4), (1, 4), (2, 4), (3, 4)]);
    }

    #[test]
    fn concurrent_leases_never_exceed_capacity() {
        let pool = WorkerPool::new(5).unwrap();
        std::thread::scope(|s| {
            for _ in 0..8 {
                let pool = pool.clone();
                s.spawn(move || {
                    for n in [1, 2, 3, 1, 2] {
                        if let Ok(l) = pool.lease(n) {
                            assert!(pool.active() <= 5);
                            l.run_team(|ctx| ctx.barrier());
                        }
                    }
                });
            }
        });
        assert!(pool.peak() <= 5);
        assert_eq!(pool.active(), 0);
    }
}
