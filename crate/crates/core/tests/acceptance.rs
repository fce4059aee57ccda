//! One test per acceptance criterion. Each prints a single
//! `criterion N: PASS|FAIL ...` line (also visible without `--nocapture`)
//! before asserting.

mod common;

use std::io::Write;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use threelevel::harness::{run_experiment, CalibrationConfig, ExperimentConfig, Mode, SuiteConfig};
use threelevel::neldermead::{
    gamma_measure, generalized_gamma, minimize, rosenbrock, rosenbrock_start, EvalStats, FnObjective, Scenario,
    Variant,
};
use threelevel::scheduler::{brute_force_distribute, distribute, DistributeOptions, TaskSet};
use threelevel::schrodinger::{integrate, Boundary, ExactSolution, PdeProblem, SolverMode};
use threelevel::timing_model::{TimingCurve, TimingModel};
use threelevel::tridiag::{solve_thomas, solve_wang, TridiagSystem};
use threelevel::Complex64;

fn verdict(n: u32, ok: bool, detail: String) {
    let line = format!("criterion {n}: {} {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stdout().write_all(line.as_bytes());
    assert!(ok, "criterion {n} failed: {detail}");
}

fn c(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

#[test]
fn criterion_1_partitioned_solver_matches_thomas() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sizes = [100, 1000, 16000];
    let systems = 1002;
    let mut worst = 0.0f64;
    for s in 0..systems {
        let n = sizes[s % 3];
        // every block needs two rows, so J = 100 allows at most 50 blocks
        let p = rng.gen_range(2..=64.min(n / 2));
        let lower: Vec<Complex64> = (0..n - 1).map(|_| c(&mut rng)).collect();
        let upper: Vec<Complex64> = (0..n - 1).map(|_| c(&mut rng)).collect();
        let diag: Vec<Complex64> = (0..n)
            .map(|i| {
                let off = if i > 0 { lower[i - 1].norm() } else { 0.0 } + if i + 1 < n { upper[i].norm() } else { 0.0 };
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                Complex64::from_polar(off + rng.gen_range(0.5..2.0), phase)
            })
            .collect();
        let rhs: Vec<Complex64> = (0..n).map(|_| c(&mut rng)).collect();
        let sys = TridiagSystem::new(lower, diag, upper, rhs).unwrap();
        let t = solve_thomas(&sys).unwrap();
        let w = solve_wang(&sys, p).unwrap();
        let scale = t.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let diff = t.iter().zip(&w).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        worst = worst.max(diff / scale);
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        worst <= 1e-10 && elapsed < Duration::from_secs(120),
        format!("{systems} systems, max relative difference {worst:.3e}, {elapsed:.1?}"),
    );
}

#[test]
fn criterion_2_second_order_convergence() {
    let start = Instant::now();
    let err = |n: usize| {
        let p = PdeProblem::new(ExactSolution::Gaussian, [-5.0, 5.0], 0.8, n, n).unwrap();
        integrate(&p, &Boundary::ExactDirichlet, SolverMode::Thomas).unwrap().max_error
    };
    let (e1, e2, e3) = (err(200), err(400), err(800));
    let (r1, r2) = (e1 / e2, e2 / e3);
    let elapsed = start.elapsed();
    let ok = (3.4..=4.6).contains(&r1) && (3.4..=4.6).contains(&r2) && elapsed < Duration::from_secs(60);
    verdict(
        2,
        ok,
        format!("errors {e1:.3e} {e2:.3e} {e3:.3e}, ratios {r1:.3} {r2:.3}, {elapsed:.1?}"),
    );
}

#[test]
fn criterion_3_speculative_variants_share_the_trace() {
    let start = Instant::now();
    let mut ok = true;
    let mut steps = 0;
    for d in [3, 6, 7] {
        let x0 = rosenbrock_start(d);
        let a1 = minimize(&mut FnObjective(rosenbrock), &x0, Variant::A1, 1000, 0.0).unwrap();
        steps += a1.trace.len();
        for v in [Variant::A2, Variant::A3] {
            let r = minimize(&mut FnObjective(rosenbrock), &x0, v, 1000, 0.0).unwrap();
            ok &= r.trace == a1.trace && r.trace.len() == 1000;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        3,
        ok && elapsed < Duration::from_secs(10),
        format!("d=3,6,7: {steps} accepted simplices compared bit-exactly, {elapsed:.1?}"),
    );
}

#[test]
fn criterion_4_gamma_accounting() {
    let synthetic = |v: Variant| {
        let mut s = EvalStats::new(v.k());
        for _ in 0..3000 {
            for sc in [Scenario::Expansion, Scenario::Expansion, Scenario::Contraction] {
                s.record_scenario(sc, v, 7);
            }
        }
        gamma_measure(&s).unwrap()
    };
    let (g2, g3) = (synthetic(Variant::A2), synthetic(Variant::A3));
    let mut ok = g2 == 0.75 && g3 == 2.0 / 3.0;
    let mut detail = format!("synthetic {g2} {g3:.6}; measured");
    let published = [(3, 0.603, 0.584), (6, 0.604, 0.517), (7, 0.606, 0.502)];
    for (d, p2, p3) in published {
        let x0 = rosenbrock_start(d);
        let m2 = gamma_measure(&minimize(&mut FnObjective(rosenbrock), &x0, Variant::A2, 1000, 1e-8).unwrap().stats)
            .unwrap();
        let m3 = gamma_measure(&minimize(&mut FnObjective(rosenbrock), &x0, Variant::A3, 1000, 1e-8).unwrap().stats)
            .unwrap();
        ok &= (m2 - p2).abs() <= 0.10 && (m3 - p3).abs() <= 0.10;
        detail += &format!(" d={d}: {m2:.3}/{m3:.3} (ref {p2}/{p3})");
    }
    verdict(4, ok, detail);
}

#[test]
fn criterion_5_generalized_variant_degrades() {
    let x0 = rosenbrock_start(7);
    let g: Vec<f64> = (2..=5)
        .map(|k| generalized_gamma(rosenbrock, &x0, k, 1000, 1e-8, 20_000).unwrap().gamma)
        .collect();
    let monotone = g.windows(2).all(|w| w[1] <= w[0] + 0.05);
    let ok = monotone && g[2] < 0.3 && g[3] < 0.1;
    verdict(5, ok, format!("d=7, k=2..5: {g:.3?}"));
}

fn random_model(rng: &mut ChaCha8Rng, m: usize, max_p: usize) -> TimingModel {
    let curves = (1..=m)
        .map(|id| {
            let mut pts = vec![(1, rng.gen_range(0.5..20.0))];
            for p in 2..=max_p {
                if rng.gen_bool(0.5) {
                    pts.push((p, rng.gen_range(0.05..20.0)));
                }
            }
            TimingCurve::new(id, pts).unwrap()
        })
        .collect();
    TimingModel::new(curves, max_p).unwrap()
}

fn ideal_model(rng: &mut ChaCha8Rng, m: usize, max_p: usize) -> TimingModel {
    let curves = (1..=m)
        .map(|id| {
            let c = rng.gen_range(1.0..50.0);
            TimingCurve::new(id, (1..=max_p).map(|p| (p, c / p as f64))).unwrap()
        })
        .collect();
    TimingModel::new(curves, max_p).unwrap()
}

#[test]
fn criterion_6_scheduler_invariants() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let instances = 10_000;
    let mut violations = Vec::new();
    let mut ideal_mismatch = 0;
    for i in 0..instances {
        let m = rng.gen_range(1..=4);
        let procs = rng.gen_range(m..=12);
        let e_min = [0.0, 0.3, 0.6, 0.9][rng.gen_range(0..4)];
        let opts = DistributeOptions {
            e_min,
            continue_past_cap: rng.gen_bool(0.5),
        };
        let model = random_model(&mut rng, m, procs);
        let tasks = TaskSet::all(&model);
        let g = distribute(&model, &tasks, procs, opts).unwrap();
        let b = brute_force_distribute(&model, &tasks, procs, opts).unwrap();
        let mut ok = g.used == g.procs.iter().sum::<usize>() && g.used <= procs && b.used <= procs;
        for (&t, &p) in g.tasks.iter().zip(&g.procs) {
            let t1 = model.predict_time(t, 1).unwrap();
            let tp = model.predict_time(t, p).unwrap();
            ok &= p >= 1 && p <= model.effective_cap(t, e_min).unwrap();
            ok &= p == 1 || t1 / (p as f64 * tp) >= e_min;
        }
        ok &= b.predicted_makespan <= g.predicted_makespan;
        if !ok {
            violations.push(i);
        }

        let e_min = [0.0, 0.5][i % 2];
        let ideal = ideal_model(&mut rng, m, procs);
        let tasks = TaskSet::all(&ideal);
        let opts = DistributeOptions::with_e_min(e_min);
        let g = distribute(&ideal, &tasks, procs, opts).unwrap();
        let b = brute_force_distribute(&ideal, &tasks, procs, opts).unwrap();
        if g.predicted_makespan != b.predicted_makespan {
            ideal_mismatch += 1;
        }
    }
    let elapsed = start.elapsed();
    verdict(
        6,
        violations.is_empty() && ideal_mismatch == 0 && elapsed < Duration::from_secs(60),
        format!(
            "{instances} random + {instances} ideal instances, {} violations, {ideal_mismatch} ideal mismatches, {elapsed:.1?}",
            violations.len()
        ),
    );
}

#[test]
fn criterion_7_simulated_table_arithmetic() {
    let p16 = run_experiment(&common::fixture_config(16, 0.0, &[1])).unwrap();
    let p128 = run_experiment(&common::fixture_config(128, 0.0, &[1, 2, 3])).unwrap();
    let green = run_experiment(&common::fixture_config(128, 0.75, &[3])).unwrap();
    let gv = green.selected_variant();
    let eff = gv.efficiency.unwrap();
    let ok = p16.model_makespan == 11.145
        && p128.selected_variant().plan.profile.parallel_degree == 3
        && (p128.useful_point_time - 2.272).abs() < 5e-4
        && gv.plan.active_procs == 117
        && (eff - 0.48).abs() <= 0.01;
    verdict(
        7,
        ok,
        format!(
            "T_Mp(16)={}, k=3 useful-point time {:.4}, E_min=0.75: {} active, efficiency {eff:.4}",
            p16.model_makespan, p128.useful_point_time, gv.plan.active_procs
        ),
    );
}

#[test]
fn criterion_8_end_to_end_pipeline() {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::simulated(8);
    cfg.mode = Mode::Real;
    cfg.suite = SuiteConfig::Reference;
    cfg.scale = 0.05;
    cfg.calibration = Some(CalibrationConfig {
        tasks: vec![],
        process_counts: vec![1, 2, 4, 8],
        repetitions: 1,
    });
    cfg.optimize = true;
    cfg.nm_iterations = 200;
    let report = run_experiment(&cfg).unwrap();
    let elapsed = start.elapsed();
    let opt = report.optimization.as_ref().unwrap();
    let measured = report.measured.as_ref().unwrap();
    let identical = opt.sequential_best == Some(opt.best);
    let halved = opt.best_value <= 0.5 * opt.initial_value;

    let floors: Vec<f64> = cfg
        .problems()
        .unwrap()
        .iter()
        .map(|p| integrate(p, &Boundary::ExactDirichlet, SolverMode::Thomas).unwrap().max_error)
        .collect();
    verdict(
        8,
        identical && halved && elapsed < Duration::from_secs(900),
        format!(
            "k={} E: {:.4} -> {:.4} (halved: {halved}), sequential/parallel identical: {identical}, \
             exact-boundary errors per problem {floors:.3?}, block {:.3}s measured vs {:.3}s predicted, {elapsed:.1?}",
            opt.variant, opt.initial_value, opt.best_value, measured.makespan, measured.predicted_makespan
        ),
    );
}
