use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;
use threelevel::harness::{
    calibrate_loaded, emit_gantt, nm_bench, run_experiment, variant_reports, write_bench_csv, BenchVariant,
    CalibrationConfig, ExperimentConfig, Mode, RunReport, VariantSpec,
};
use threelevel::scheduler::{select_with_model, DistributeOptions, TaskSet};
use threelevel::timing_model::TimingModel;
use threelevel::{Error, Result};

#[derive(Parser)]
#[command(name = "threelevel", version, about = "Three-level parallel optimisation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure timing curves and write them as CSV.
    Calibrate {
        /// Calibration JSON: tasks, process_counts, repetitions.
        #[arg(long)]
        config: PathBuf,
        /// Worker pool size to load during the measurements.
        #[arg(long, default_value_t = 0)]
        procs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Distribute processes for every variant and pick the best.
    Schedule {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        procs: usize,
        #[arg(long, default_value_t = 0.0)]
        emin: f64,
        /// Comma-separated `k` or `k:gamma` entries.
        #[arg(long, default_value = "1,2,3")]
        variants: String,
        #[arg(long)]
        continue_past_cap: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Model-only run of an experiment config.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Execute an experiment config on the worker pool.
    Run {
        #[command(flatten)]
        common: Common,
    },
    /// Rosenbrock benchmark of a Nelder-Mead variant; CSV output.
    NmBench {
        #[arg(long, default_value = "rosenbrock")]
        objective: String,
        #[arg(long)]
        dim: usize,
        /// a1, a2, a3 or gen-k.
        #[arg(long)]
        variant: String,
        #[arg(long, default_value_t = 1000)]
        iters: usize,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-task bars of the selected assignment in a report.
    Gantt {
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Timing-model CSV, overriding the config.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Report JSON, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_variants(s: &str) -> Result<Vec<VariantSpec>> {
    s.split(',')
        .map(|item| {
            let bad = || Error::Parameter(format!("bad variant `{item}`"));
            let mut parts = item.trim().splitn(2, ':');
            let k = parts.next().unwrap().parse().map_err(|_| bad())?;
            let gamma = parts.next().map(|g| g.parse().map_err(|_| bad())).transpose()?;
            Ok(VariantSpec { k, gamma })
        })
        .collect()
}

fn write_json(value: &serde_json::Value, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn experiment(common: Common, mode: Mode) -> Result<()> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    cfg.mode = mode;
    if let Some(model) = common.model {
        cfg.model = Some(model);
        cfg.timing_table = None;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.outputs.report = Some(out.clone());
    }
    let report = run_experiment(&cfg)?;
    if cfg.outputs.report.is_none() {
        write_json(&serde_json::to_value(&report)?, None)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Calibrate { config, procs, out } => {
            let text = std::fs::read_to_string(&config).map_err(|e| Error::Io {
                path: config.clone(),
                source: e,
            })?;
            let cal: CalibrationConfig = serde_json::from_str(&text)?;
            if cal.tasks.is_empty() {
                return Err(Error::Config("calibration config lists no tasks".into()));
            }
            let model = calibrate_loaded(&cal.tasks, &cal.process_counts, cal.repetitions, procs)?;
            match out {
                Some(path) => model.save(path),
                None => model.write_csv(std::io::stdout()),
            }
        }
        Command::Schedule {
            model,
            procs,
            emin,
            variants,
            continue_past_cap,
            out,
        } => {
            let model = TimingModel::load(model)?;
            let model = model.clone().with_max_procs(model.max_procs().max(procs))?;
            let profiles = parse_variants(&variants)?
                .iter()
                .map(VariantSpec::profile)
                .collect::<Result<Vec<_>>>()?;
            let tasks = TaskSet::all(&model);
            let opts = DistributeOptions {
                e_min: emin,
                continue_past_cap,
            };
            if !(0.0..=1.0).contains(&emin) {
                return Err(Error::Parameter(format!("e_min {emin} outside [0, 1]")));
            }
            let selection = select_with_model(&profiles, &model, &tasks, procs, opts)?;
            let reports = variant_reports(&model, &tasks, &selection)?;
            let value = json!({
                "procs": procs,
                "e_min": emin,
                "variants": reports,
                "selected": selection.selected,
                "selected_k": selection.selected_plan().profile.parallel_degree,
            });
            write_json(&value, out.as_deref())
        }
        Command::Simulate { common } => experiment(common, Mode::Simulated),
        Command::Run { common } => experiment(common, Mode::Real),
        Command::NmBench {
            objective,
            dim,
            variant,
            iters,
            tolerance,
            runs,
            seed,
            out,
        } => {
            if objective != "rosenbrock" {
                return Err(Error::Parameter(format!("unknown objective `{objective}`")));
            }
            let variant: BenchVariant = variant.parse()?;
            let rows = nm_bench(dim, variant, iters, tolerance, runs, seed)?;
            match out {
                Some(path) => {
                    let file = std::fs::File::create(&path).map_err(|e| Error::Io { path, source: e })?;
                    write_bench_csv(&rows, file)
                }
                None => write_bench_csv(&rows, std::io::stdout()),
            }
        }
        Command::Gantt { report, out } => emit_gantt(&RunReport::load(report)?, out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", json!({ "kind": "usage", "message": e.to_string().trim() }));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "kind": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
