//! Empirical per-task timing curves `t_m(p)`.
//!
//! A [`TimingModel`] holds one measured curve per task. Queries between
//! measured process counts interpolate linearly in `1/p`, beyond the largest
//! measured count the last sample is returned unchanged.
//!
//! The on-disk format is a CSV file with header `task_id,p,seconds` and one
//! row per sample. Seconds are written in shortest round-trip form so a
//! saved model reloads bit-exactly.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One measurement: wall time of a task on `procs` processes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub procs: usize,
    pub seconds: f64,
}

/// Measured computation time of one task as a function of process count.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingCurve {
    task_id: usize,
    samples: Vec<Sample>,
}

impl TimingCurve {
    /// Builds a curve from `(p, seconds)` pairs in any order.
    ///
    /// Requires a sample at `p = 1`, distinct process counts and strictly
    /// positive, finite times.
    pub fn new(task_id: usize, samples: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut samples: Vec<Sample> = samples
            .into_iter()
            .map(|(procs, seconds)| Sample { procs, seconds })
            .collect();
        samples.sort_by_key(|s| s.procs);
        let invalid = |reason: String| Error::InvalidCurve { task_id, reason };
        if samples.first().map(|s| s.procs) != Some(1) {
            return Err(invalid("a sample at p=1 is required".into()));
        }
        for pair in samples.windows(2) {
            if pair[0].procs == pair[1].procs {
                return Err(invalid(format!("duplicate sample at p={}", pair[0].procs)));
            }
        }
        if let Some(s) = samples.iter().find(|s| !(s.seconds.is_finite() && s.seconds > 0.0)) {
            return Err(invalid(format!("non-positive time {} at p={}", s.seconds, s.procs)));
        }
        Ok(Self { task_id, samples })
    }

    pub fn task_id(&self) -> usize {
        self.task_id
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn max_measured(&self) -> usize {
        self.samples.last().map(|s| s.procs).unwrap_or(1)
    }

    /// Time at `p >= 1`: exact on samples, linear in `1/p` between them,
    /// clamped to the last sample beyond the measured range.
    pub fn at(&self, p: usize) -> f64 {
        debug_assert!(p >= 1);
        match self.samples.binary_search_by_key(&p, |s| s.procs) {
            Ok(i) => self.samples[i].seconds,
            Err(i) if i >= self.samples.len() => self.samples[self.samples.len() - 1].seconds,
            Err(i) => {
                let lo = self.samples[i - 1];
                let hi = self.samples[i];
                let inv = |q: usize| 1.0 / q as f64;
                let frac = (inv(p) - inv(lo.procs)) / (inv(hi.procs) - inv(lo.procs));
                lo.seconds + (hi.seconds - lo.seconds) * frac
            }
        }
    }
}

/// Per-task saturation point, efficiency cap and their minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CapInfo {
    pub saturation: usize,
    pub eff_cap: usize,
    pub effective: usize,
}

/// Timing curves for tasks `1..=M` plus the system process count `P`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingModel {
    curves: Vec<TimingCurve>,
    max_procs: usize,
}

impl TimingModel {
    /// Task ids must be exactly `1..=M` (in any order).
    pub fn new(mut curves: Vec<TimingCurve>, max_procs: usize) -> Result<Self> {
        if curves.is_empty() {
            return Err(Error::InvalidModel("no timing curves".into()));
        }
        if max_procs == 0 {
            return Err(Error::InvalidModel("max_procs must be at least 1".into()));
        }
        curves.sort_by_key(|c| c.task_id);
        for (i, c) in curves.iter().enumerate() {
            if c.task_id != i + 1 {
                return Err(Error::InvalidModel(format!(
                    "task ids must be 1..={} exactly once, found {} at position {}",
                    curves.len(),
                    c.task_id,
                    i + 1
                )));
            }
        }
        Ok(Self { curves, max_procs })
    }

    /// Uses the largest measured process count as `P`.
    pub fn from_curves(curves: Vec<TimingCurve>) -> Result<Self> {
        let max = curves.iter().map(TimingCurve::max_measured).max().unwrap_or(1);
        Self::new(curves, max)
    }

    pub fn with_max_procs(mut self, max_procs: usize) -> Result<Self> {
        if max_procs == 0 {
            return Err(Error::InvalidModel("max_procs must be at least 1".into()));
        }
        self.max_procs = max_procs;
        Ok(self)
    }

    pub fn num_tasks(&self) -> usize {
        self.curves.len()
    }

    pub fn max_procs(&self) -> usize {
        self.max_procs
    }

    pub fn curves(&self) -> &[TimingCurve] {
        &self.curves
    }

    pub fn curve(&self, task_id: usize) -> Result<&TimingCurve> {
        task_id
            .checked_sub(1)
            .and_then(|i| self.curves.get(i))
            .ok_or(Error::UnknownTask(task_id))
    }

    pub fn predict_time(&self, task_id: usize, p: usize) -> Result<f64> {
        let curve = self.curve(task_id)?;
        if p == 0 || p > self.max_procs {
            return Err(Error::ProcsOutOfRange {
                p,
                max: self.max_procs,
            });
        }
        Ok(curve.at(p))
    }

    /// Smallest measured `p` at which the curve attains its global minimum.
    pub fn saturation_point(&self, task_id: usize) -> Result<usize> {
        let curve = self.curve(task_id)?;
        let best = curve
            .samples
            .iter()
            .filter(|s| s.procs <= self.max_procs)
            .fold(None::<Sample>, |acc, s| match acc {
                Some(a) if a.seconds <= s.seconds => Some(a),
                _ => Some(*s),
            });
        Ok(best.map(|s| s.procs).unwrap_or(1))
    }

    /// Largest `P~` such that every `p <= P~` keeps the parallel efficiency
    /// `t(1) / (p t(p))` at or above `e_min`.
    pub fn efficiency_cap(&self, task_id: usize, e_min: f64) -> Result<usize> {
        if !(0.0..=1.0).contains(&e_min) {
            return Err(Error::Parameter(format!("E_min = {e_min} outside [0, 1]")));
        }
        let curve = self.curve(task_id)?;
        let t1 = curve.at(1);
        let mut cap = 1;
        for p in 2..=self.max_procs {
            if t1 / (p as f64 * curve.at(p)) >= e_min {
                cap = p;
            } else {
                break;
            }
        }
        Ok(cap)
    }

    pub fn effective_cap(&self, task_id: usize, e_min: f64) -> Result<usize> {
        Ok(self.caps(task_id, e_min)?.effective)
    }

    pub fn caps(&self, task_id: usize, e_min: f64) -> Result<CapInfo> {
        let saturation = self.saturation_point(task_id)?;
        let eff_cap = self.efficiency_cap(task_id, e_min)?;
        Ok(CapInfo {
            saturation,
            eff_cap,
            effective: saturation.min(eff_cap),
        })
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            task_id: usize,
            p: usize,
            seconds: f64,
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["task_id", "p", "seconds"] {
            return Err(Error::InvalidModel(format!(
                "expected header task_id,p,seconds, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut by_task: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        for row in rdr.deserialize() {
            let row: Row = row?;
            by_task.entry(row.task_id).or_default().push((row.p, row.seconds));
        }
        let curves = by_task
            .into_iter()
            .map(|(id, s)| TimingCurve::new(id, s))
            .collect::<Result<Vec<_>>>()?;
        Self::from_curves(curves)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["task_id", "p", "seconds"])?;
        for c in &self.curves {
            for s in &c.samples {
                wtr.write_record([c.task_id.to_string(), s.procs.to_string(), format!("{}", s.seconds)])?;
            }
        }
        wtr.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(std::io::BufReader::new(file))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}
