#![allow(dead_code)]

use threelevel::harness::{CurveSpec, ExperimentConfig, VariantSpec};
use threelevel::timing_model::{TimingCurve, TimingModel};

/// Hand-entered curves for the four benchmark tasks on up to 128 processes,
/// chosen so that greedy distribution reproduces the published block
/// assignments.
pub fn fixture_table() -> Vec<CurveSpec> {
    let t: [&[(usize, f64)]; 4] = [
        &[
            (1, 97.5),
            (10, 11.145),
            (19, 6.34),
            (20, 6.15),
            (22, 5.784),
            (26, 4.9),
            (27, 4.85),
            (29, 4.544),
            (34, 4.113),
            (42, 3.84),
            (43, 3.81),
            (50, 3.614),
            (56, 3.605),
            (64, 3.63),
            (96, 3.9),
            (128, 4.3),
        ],
        &[
            (1, 23.5),
            (2, 12.0),
            (3, 8.2),
            (4, 6.8),
            (5, 5.7),
            (6, 5.0),
            (7, 4.3),
            (8, 3.55),
            (12, 3.0),
            (16, 2.8),
            (32, 2.7),
            (64, 2.9),
            (128, 3.3),
        ],
        &[
            (1, 12.5),
            (2, 7.0),
            (3, 5.0),
            (4, 3.4),
            (8, 2.6),
            (16, 2.2),
            (32, 2.1),
            (64, 2.3),
            (128, 2.6),
        ],
        &[(1, 6.0), (2, 3.5), (4, 2.4), (8, 1.9), (16, 1.7), (32, 1.75), (64, 1.9), (128, 2.2)],
    ];
    t.iter()
        .enumerate()
        .map(|(i, s)| CurveSpec {
            task_id: i + 1,
            samples: s.to_vec(),
        })
        .collect()
}

pub fn fixture_model() -> TimingModel {
    let curves = fixture_table()
        .into_iter()
        .map(|c| TimingCurve::new(c.task_id, c.samples).unwrap())
        .collect();
    TimingModel::new(curves, 128).unwrap()
}

pub fn fixture_config(procs: usize, e_min: f64, ks: &[usize]) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::simulated(procs);
    cfg.timing_table = Some(fixture_table());
    cfg.e_min = e_min;
    cfg.variants = ks.iter().map(|&k| VariantSpec { k, gamma: None }).collect();
    cfg
}
