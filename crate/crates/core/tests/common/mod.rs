#![allow(dead_code)]

pub mod criteria;
pub mod oracles;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use gaitscope::evaluation::EvalConfig;
use gaitscope::features::{FeatureGrid, FeatureMatrix};
use gaitscope::learners::ModelKind;
use gaitscope::pipeline::extract_manifest;
use gaitscope::seed;
use gaitscope::synth::{generate, SynthConfig};
use gaitscope::{GaitClass, Matrix, View};
use rand::Rng;
use rand_distr::StandardNormal;

/// Random length-`len` series mixing noise, a sinusoid and a trend.
pub fn random_series(seed: u64, count: usize, len: usize) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let mut rng = seed::rng(seed::derive_index(seed, i as u64));
            let offset = rng.gen_range(-1.5..1.5);
            let scale = rng.gen_range(0.2..2.5);
            let amp = rng.gen_range(0.0..2.0);
            let freq = rng.gen_range(0.05..0.45);
            let slope = rng.gen_range(-0.05..0.05);
            (0..len)
                .map(|t| {
                    let noise: f64 = rng.sample(StandardNormal);
                    offset + scale * noise + amp * (freq * t as f64).sin() + slope * t as f64
                })
                .collect()
        })
        .collect()
}

/// Gaussian blobs, one centre per class; `spread` is the centre scale.
pub fn blobs(seed: u64, per_class: usize, n_features: usize, classes: &[GaitClass], spread: f64) -> (Matrix, Vec<GaitClass>) {
    let mut rng = seed::rng(seed);
    let centres: Vec<Vec<f64>> = classes
        .iter()
        .map(|_| (0..n_features).map(|_| spread * rng.sample::<f64, _>(StandardNormal)).collect())
        .collect();
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (c, centre) in classes.iter().zip(&centres) {
        for _ in 0..per_class {
            rows.push(centre.iter().map(|m| m + rng.sample::<f64, _>(StandardNormal)).collect());
            labels.push(*c);
        }
    }
    (Matrix::from_rows(&rows).unwrap(), labels)
}

/// Smallest dataset the evaluation accepts: 6 subjects, 3 s per trial.
pub fn small_synth(dir: &Path, seed: u64) -> PathBuf {
    let cfg = SynthConfig {
        n_subjects: 6,
        duration_s: 3.0,
        seed,
        ..SynthConfig::default()
    };
    generate(&cfg, dir).unwrap()
}

pub fn extract(manifest: &Path, views: &[View]) -> BTreeMap<View, FeatureMatrix> {
    extract_manifest(manifest, views, &FeatureGrid::default()).unwrap()
}

/// A forest search small enough for a test: few shallow trees.
pub fn quick_forest(seed: u64, budget: usize) -> EvalConfig {
    let mut cfg = EvalConfig::new(ModelKind::Forest);
    cfg.space.set("n_estimators", "20..30").unwrap();
    cfg.space.set("max_depth", "3..8").unwrap();
    cfg.budget = budget;
    cfg.n_repeats = 1;
    cfg.seed = seed;
    cfg
}
