use proptest::prelude::*;
use threelevel::harness::{
    calibrate, run_experiment, BenchmarkTask, CalibrationConfig, CurveSpec, ExperimentConfig, Mode, RunReport,
    SuiteConfig, VariantSpec,
};
use threelevel::scheduler::predicted_makespan;
use threelevel::timing_model::{TimingCurve, TimingModel};

#[test]
fn independent_halves_run_twice_as_fast_on_two_workers() {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    if cores < 2 {
        eprintln!("skipped: {cores} core available, two are needed to measure a split");
        return;
    }
    let m = calibrate(&[BenchmarkTask::SplitWork { units: 4000, parts: 2 }], &[1, 2], 3).unwrap();
    let (t1, t2) = (m.predict_time(1, 1).unwrap(), m.predict_time(1, 2).unwrap());
    let ratio = t2 / (t1 / 2.0);
    assert!((0.8..=1.2).contains(&ratio), "t(1)={t1} t(2)={t2}");
}

#[test]
fn serial_work_has_its_minimum_at_one_process() {
    let m = calibrate(&[BenchmarkTask::SerialWork { units: 500 }], &[1, 2, 4], 3).unwrap();
    let t1 = m.predict_time(1, 1).unwrap();
    for p in [2, 4] {
        let t = m.predict_time(1, p).unwrap();
        assert!((t - t1).abs() < 0.25 * t1, "t(1)={t1} t({p})={t}");
    }
}

#[test]
fn real_mode_desk_scale_block() {
    let mut cfg = ExperimentConfig::simulated(8);
    cfg.mode = Mode::Real;
    cfg.suite = SuiteConfig::Reference;
    cfg.scale = 0.05;
    cfg.calibration = Some(CalibrationConfig {
        tasks: vec![],
        process_counts: vec![1, 2, 4, 8],
        repetitions: 2,
    });
    let r = run_experiment(&cfg).unwrap();
    let m = r.measured.as_ref().unwrap();
    let ratio = m.makespan / m.predicted_makespan;
    assert!((1.0 / 3.0..=3.0).contains(&ratio), "measured {} predicted {}", m.makespan, m.predicted_makespan);
    assert!(m.peak_workers <= 8);
    assert_eq!(m.task_seconds.len(), r.selected_variant().plan.copies);
}

fn arb_table() -> impl Strategy<Value = Vec<CurveSpec>> {
    prop::collection::vec(
        (
            0.5f64..50.0,
            prop::collection::btree_map(2usize..=16, 0.05f64..50.0, 0..6),
        ),
        1..=4,
    )
    .prop_map(|tasks| {
        tasks
            .into_iter()
            .enumerate()
            .map(|(i, (t1, rest))| CurveSpec {
                task_id: i + 1,
                samples: std::iter::once((1, t1)).chain(rest).collect(),
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn simulated_makespan_is_the_slowest_task(
        table in arb_table(),
        extra in 0usize..12,
        e_min in prop::sample::select(vec![0.0, 0.5, 0.8]),
    ) {
        let mut cfg = ExperimentConfig::simulated(table.len() + extra);
        cfg.variants = vec![VariantSpec { k: 1, gamma: None }];
        cfg.e_min = e_min;
        cfg.timing_table = Some(table.clone());
        let r = run_experiment(&cfg).unwrap();
        let curves = table
            .iter()
            .map(|c| TimingCurve::new(c.task_id, c.samples.iter().copied()).unwrap())
            .collect();
        let model = TimingModel::from_curves(curves).unwrap();
        let model = model.clone().with_max_procs(model.max_procs().max(cfg.procs)).unwrap();
        let v = r.selected_variant();
        let a = v.plan.assignment.as_ref().unwrap();
        let slowest = a
            .tasks
            .iter()
            .zip(&a.procs)
            .map(|(&t, &p)| model.predict_time(t, p).unwrap())
            .fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(r.model_makespan, slowest);
        prop_assert_eq!(r.model_makespan, predicted_makespan(&model, a).unwrap());

        let text = serde_json::to_string(&r).unwrap();
        prop_assert_eq!(serde_json::from_str::<RunReport>(&text).unwrap(), r);
    }
}
