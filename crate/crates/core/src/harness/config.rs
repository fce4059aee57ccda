use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scheduler::{DistributeOptions, VariantProfile};
use crate::schrodinger::{reference_suite, scale_suite, table1_suite, PdeProblem};
use crate::timing_model::{TimingCurve, TimingModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Scheduling arithmetic on the timing model only.
    Simulated,
    /// Executes the schedule on the worker pool.
    Real,
}

/// Which PDE problems make up one task block.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SuiteConfig {
    /// Problems 1-4 on their reference grids.
    #[default]
    Reference,
    /// Problems 1-4 on the grids of scheduling benchmark 1, 2 or 3.
    Table1 { variant: usize },
    Custom { problems: Vec<PdeProblem> },
}

impl SuiteConfig {
    pub fn problems(&self, scale: f64) -> Result<Vec<PdeProblem>> {
        let base = match self {
            SuiteConfig::Reference => reference_suite(),
            SuiteConfig::Table1 { variant } => table1_suite(*variant)?,
            SuiteConfig::Custom { problems } => {
                if problems.is_empty() {
                    return Err(Error::Config("custom suite has no problems".into()));
                }
                problems.clone()
            }
        };
        scale_suite(&base, scale)
    }
}

/// A level-1 variant: `k` points per round with efficiency `gamma`
/// (nominal value for `k <= 3` when omitted).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariantSpec {
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl VariantSpec {
    pub fn profile(&self) -> Result<VariantProfile> {
        match self.gamma {
            Some(gamma) => Ok(VariantProfile {
                variant_id: self.k,
                parallel_degree: self.k,
                gamma,
            }),
            None => VariantProfile::nominal(self.k),
        }
    }
}

/// One calibration benchmark.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BenchmarkTask {
    /// Integrates the problem with the partitioned solver on `p` workers.
    Pde { problem: PdeProblem },
    /// Fixed busy work on one worker regardless of `p`.
    SerialWork { units: u64 },
    /// `parts` equal independent chunks of `units` in total, dealt out
    /// round-robin over the `p` workers.
    SplitWork { units: u64, parts: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    /// Empty means one PDE task per suite problem.
    #[serde(default)]
    pub tasks: Vec<BenchmarkTask>,
    pub process_counts: Vec<usize>,
    #[serde(default = "one_usize")]
    pub repetitions: usize,
}

/// Hand-entered timing curve, `samples` as `[p, seconds]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSpec {
    pub task_id: usize,
    pub samples: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default)]
    pub report: Option<PathBuf>,
    #[serde(default)]
    pub gantt: Option<PathBuf>,
    /// Where a calibrated timing model is written.
    #[serde(default)]
    pub model: Option<PathBuf>,
}

/// Starting point of the boundary-parameter search.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AbcStart {
    #[default]
    Ones,
    /// Uniform in `[low, high]` per coordinate, drawn from the config seed.
    Random { low: f64, high: f64 },
    Given { values: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default)]
    pub suite: SuiteConfig,
    #[serde(default = "one_f64")]
    pub scale: f64,
    pub procs: usize,
    #[serde(default)]
    pub e_min: f64,
    #[serde(default)]
    pub continue_past_cap: bool,
    #[serde(default = "default_variants")]
    pub variants: Vec<VariantSpec>,
    /// Timing-model CSV.
    #[serde(default)]
    pub model: Option<PathBuf>,
    #[serde(default)]
    pub timing_table: Option<Vec<CurveSpec>>,
    #[serde(default)]
    pub calibration: Option<CalibrationConfig>,
    /// Real mode: run the boundary-parameter optimisation after the timed block.
    #[serde(default)]
    pub optimize: bool,
    #[serde(default = "default_iterations")]
    pub nm_iterations: usize,
    #[serde(default)]
    pub nm_tolerance: f64,
    #[serde(default)]
    pub abc_start: AbcStart,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: OutputPaths,
}

fn one_usize() -> usize {
    1
}

fn one_f64() -> f64 {
    1.0
}

fn default_iterations() -> usize {
    200
}

fn default_variants() -> Vec<VariantSpec> {
    (1..=3).map(|k| VariantSpec { k, gamma: None }).collect()
}

impl ExperimentConfig {
    pub fn simulated(procs: usize) -> Self {
        Self {
            mode: Mode::Simulated,
            suite: SuiteConfig::Reference,
            scale: 1.0,
            procs,
            e_min: 0.0,
            continue_past_cap: false,
            variants: default_variants(),
            model: None,
            timing_table: None,
            calibration: None,
            optimize: false,
            nm_iterations: default_iterations(),
            nm_tolerance: 0.0,
            abc_start: AbcStart::Ones,
            seed: 0,
            outputs: OutputPaths::default(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let cfg: Self = serde_json::from_str(&text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(Error::Config(format!("scale {} outside (0, 1]", self.scale)));
        }
        if self.procs == 0 {
            return Err(Error::Config("procs must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.e_min) {
            return Err(Error::Config(format!("e_min {} outside [0, 1]", self.e_min)));
        }
        if self.variants.is_empty() {
            return Err(Error::Config("no variants".into()));
        }
        for v in &self.variants {
            v.profile()?;
        }
        if let AbcStart::Random { low, high } = self.abc_start {
            if !(low.is_finite() && high.is_finite() && low < high) {
                return Err(Error::Config(format!("random start range [{low}, {high}] is empty")));
            }
        }
        if self.mode == Mode::Real {
            let m = self.problems()?.len();
            if self.procs < m {
                return Err(Error::Config(format!(
                    "real mode needs at least one process per task ({} < {m})",
                    self.procs
                )));
            }
        }
        Ok(())
    }

    pub fn problems(&self) -> Result<Vec<PdeProblem>> {
        self.suite.problems(self.scale)
    }

    pub fn profiles(&self) -> Result<Vec<VariantProfile>> {
        self.variants.iter().map(VariantSpec::profile).collect()
    }

    pub fn distribute_options(&self) -> DistributeOptions {
        DistributeOptions {
            e_min: self.e_min,
            continue_past_cap: self.continue_past_cap,
        }
    }

    /// The inline table if present, else the model file. `None` when
    /// neither is given.
    pub fn timing_model(&self) -> Result<Option<TimingModel>> {
        if let Some(table) = &self.timing_table {
            let curves = table
                .iter()
                .map(|c| TimingCurve::new(c.task_id, c.samples.iter().copied()))
                .collect::<Result<Vec<_>>>()?;
            let model = TimingModel::from_curves(curves)?;
            let max = model.max_procs().max(self.procs);
            return Ok(Some(model.with_max_procs(max)?));
        }
        match &self.model {
            Some(path) => {
                let model = TimingModel::load(path)?;
                let max = model.max_procs().max(self.procs);
                Ok(Some(model.with_max_procs(max)?))
            }
            None => Ok(None),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_json_uses_defaults() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"mode":"simulated","procs":16}"#).unwrap();
        assert_eq!(cfg.scale, 1.0);
        assert_eq!(cfg.variants.len(), 3);
        assert_eq!(cfg.nm_iterations, 200);
        assert_eq!(cfg.suite, SuiteConfig::Reference);
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_bad_values() {
        let mut cfg = ExperimentConfig::simulated(16);
        cfg.scale = 0.0;
        assert!(cfg.validate().is_err());
        cfg.scale = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::simulated(16);
        cfg.e_min = 1.2;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::simulated(3);
        cfg.mode = Mode::Real;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        let mut cfg = ExperimentConfig::simulated(16);
        cfg.variants = vec![VariantSpec { k: 5, gamma: None }];
        assert!(cfg.validate().is_err());
        cfg.variants = vec![VariantSpec { k: 5, gamma: Some(0.3) }];
        cfg.validate().unwrap();
    }

    #[test]
    fn suites_scale() {
        let s = SuiteConfig::Table1 { variant: 2 }.problems(0.05).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!((s[0].j, s[0].n), (400, 1000));
        assert!(SuiteConfig::Custom { problems: vec![] }.problems(1.0).is_err());
    }

    #[test]
    fn tagged_json_round_trip() {
        let mut cfg = ExperimentConfig::simulated(8);
        cfg.calibration = Some(CalibrationConfig {
            tasks: vec![
                BenchmarkTask::SerialWork { units: 10 },
                BenchmarkTask::SplitWork { units: 10, parts: 2 },
            ],
            process_counts: vec![1, 2],
            repetitions: 2,
        });
        cfg.abc_start = AbcStart::Random { low: 0.5, high: 1.5 };
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
    }
}
