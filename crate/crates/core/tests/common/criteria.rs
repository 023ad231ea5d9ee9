//! The ten end-to-end acceptance checks. Each returns a verdict with a
//! one-line detail instead of panicking, so a runner can report all of them.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use gaitscope::balance::{smote, BalancePlan};
use gaitscope::evaluation::{
    compute_metrics, normal_ci, run_nested, write_predictions_csv, EvalConfig, LeakageGuard, ReportFile, Stage,
};
use gaitscope::explain::permutation_importance;
use gaitscope::features::{
    evaluate, write_matrix_csv, Axis, Channel, Family, FeatureDescriptor, FeatureGrid, FeatureKind, FeatureMatrix,
};
use gaitscope::learners::{train, EnsembleModel, ForestParams, GbtParams, Hyperparams, MaxFeatures, ModelKind};
use gaitscope::select::{bh_reject, by_reject};
use gaitscope::synth::{generate, SynthConfig};
use gaitscope::{seed, Error, GaitClass, Matrix, View};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use super::oracles::{agrees, oracle};
use super::{blobs, extract, quick_forest, random_series, small_synth};

pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

impl Verdict {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Verdict {
            pass,
            detail: detail.into(),
        }
    }

    fn fail(detail: impl Into<String>) -> Self {
        Verdict::new(false, detail)
    }
}

/// Every family against its naive oracle on 100 random length-30 series.
pub fn feature_oracles() -> Verdict {
    let start = Instant::now();
    let kinds = FeatureGrid::default().catalog(View::Frontal);
    let series = random_series(0x0_5eed, 100, 30);
    // (cells compared, cells where the oracle is defined)
    let mut seen: BTreeMap<Family, (usize, usize)> = BTreeMap::new();
    let mut mismatches = Vec::new();
    for x in &series {
        for kind in &kinds {
            let family = kind.family();
            let got = evaluate(kind, x);
            let want = oracle(kind, x);
            let e = seen.entry(family).or_default();
            e.0 += 1;
            e.1 += usize::from(want.is_some());
            if !agrees(family, got, want) {
                mismatches.push(format!("{kind}: got {got:?}, oracle {want:?}"));
            }
        }
    }
    let elapsed = start.elapsed();
    let never_defined: Vec<Family> = seen.iter().filter(|(_, c)| c.1 == 0).map(|(f, _)| *f).collect();
    let cells: usize = seen.values().map(|c| c.0).sum();
    let pass = mismatches.is_empty()
        && seen.len() == Family::ALL.len()
        && never_defined.is_empty()
        && elapsed <= Duration::from_secs(60);
    let mut detail = format!(
        "{} families, {} kinds, {cells} cells, {} mismatches, {:.1} s",
        seen.len(),
        kinds.len(),
        mismatches.len(),
        elapsed.as_secs_f64()
    );
    if let Some(first) = mismatches.first() {
        detail += &format!("; first: {first}");
    }
    if !never_defined.is_empty() {
        detail += &format!("; never defined: {never_defined:?}");
    }
    Verdict::new(pass, detail)
}

/// Step-up rule by exhaustive scan: the largest k with at least k p-values
/// under the k-th threshold, then everything under that threshold.
pub fn brute_force_by(p: &[f64], q: f64) -> Vec<bool> {
    let m = p.len();
    let penalty: f64 = (1..=m).map(|i| 1.0 / i as f64).sum();
    for k in (1..=m).rev() {
        let t = k as f64 * q / (m as f64 * penalty);
        if p.iter().filter(|&&v| v <= t).count() >= k {
            return p.iter().map(|&v| v <= t).collect();
        }
    }
    vec![false; m]
}

/// p-vectors with signal, nulls, exact ties, zeros and ones.
pub fn random_pvalues(rng: &mut impl Rng) -> Vec<f64> {
    let m = rng.gen_range(1..=500);
    let signal = rng.gen_range(0.0..0.6);
    let pool: Vec<f64> = (0..8).map(|_| rng.gen::<f64>() * 0.05).collect();
    (0..m)
        .map(|_| match rng.gen_range(0..20) {
            0 => 0.0,
            1 => 1.0,
            2 | 3 => pool[rng.gen_range(0..pool.len())],
            _ if rng.gen_bool(signal) => rng.gen::<f64>().powi(6) * 0.01,
            _ => rng.gen(),
        })
        .collect()
}

pub fn by_matches_brute_force() -> Verdict {
    let mut rng = seed::rng(0xB7);
    let levels = [0.01, 0.05, 0.1, 0.25];
    let (mut mask_errors, mut subset_errors, mut rejections) = (0, 0, 0usize);
    for _ in 0..1000 {
        let p = random_pvalues(&mut rng);
        let q = levels[rng.gen_range(0..levels.len())];
        let by = by_reject(&p, q);
        let bh = bh_reject(&p, q);
        mask_errors += usize::from(by != brute_force_by(&p, q));
        subset_errors += usize::from(by.iter().zip(&bh).any(|(a, b)| *a && !*b));
        rejections += by.iter().filter(|&&r| r).count();
    }
    Verdict::new(
        mask_errors == 0 && subset_errors == 0,
        format!("1000 vectors, {mask_errors} mask mismatches, {subset_errors} BY-not-in-BH, {rejections} rejections total"),
    )
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt()
}

/// Checks one SMOTE output against its input; `Err` names the first defect.
pub fn check_smote(x: &Matrix, y: &[GaitClass], k: usize, seed: u64) -> Result<usize, String> {
    let out = smote(x, y, &BalancePlan { k_neighbors: k, seed }).map_err(|e| e.to_string())?;
    let n = x.nrows();
    if out.x.nrows() != n + out.provenance.len() || out.y.len() != out.x.nrows() {
        return Err("row accounting".into());
    }
    if (0..n).any(|i| out.x.row(i) != x.row(i)) || out.y[..n] != *y {
        return Err("original rows changed".into());
    }
    for (i, prov) in out.provenance.iter().enumerate() {
        let s = out.x.row(n + i);
        let label = out.y[n + i];
        let (a, b) = (prov.base, prov.neighbor);
        if a >= n || b >= n || a == b || y[a] != label || y[b] != label {
            return Err(format!("synthetic {i}: bad parents ({a}, {b})"));
        }
        if !(prov.lambda > 0.0 && prov.lambda < 1.0) {
            return Err(format!("synthetic {i}: lambda {}", prov.lambda));
        }
        let (ra, rb) = (x.row(a), x.row(b));
        let residual = (0..x.ncols())
            .map(|j| (s[j] - (ra[j] + prov.lambda * (rb[j] - ra[j]))).abs())
            .fold(0.0, f64::max);
        if residual > 1e-9 {
            return Err(format!("synthetic {i}: residual {residual:e}"));
        }
        let mut dists: Vec<f64> = (0..n)
            .filter(|&j| j != a && y[j] == label)
            .map(|j| distance(ra, x.row(j)))
            .collect();
        dists.sort_by(f64::total_cmp);
        let kth = dists[k.min(dists.len()) - 1];
        if distance(ra, rb) > kth {
            return Err(format!("synthetic {i}: neighbor outside the {k} nearest"));
        }
    }
    let mut counts = [0usize; GaitClass::COUNT];
    for c in &out.y {
        counts[c.index()] += 1;
    }
    let target = counts.iter().max().copied().unwrap_or(0);
    let before: BTreeSet<usize> = y.iter().map(|c| c.index()).collect();
    for (ci, &count) in counts.iter().enumerate() {
        let expected = if before.contains(&ci) { target } else { 0 };
        if count != expected {
            return Err(format!("class {ci} has {count} rows, expected {expected}"));
        }
    }
    Ok(out.provenance.len())
}

/// Imbalanced dataset over a random subset of classes, rows interleaved.
pub fn imbalanced(rng: &mut impl Rng) -> (Matrix, Vec<GaitClass>) {
    let n_features = rng.gen_range(1..=6);
    let mut classes = GaitClass::ALL.to_vec();
    classes.shuffle(rng);
    classes.truncate(rng.gen_range(2..=7));
    let mut rows: Vec<(Vec<f64>, GaitClass)> = Vec::new();
    for c in classes {
        let size = rng.gen_range(2..=25);
        let centre: Vec<f64> = (0..n_features).map(|_| rng.gen_range(-5.0..5.0)).collect();
        for _ in 0..size {
            let row = centre.iter().map(|m| m + rng.sample::<f64, _>(StandardNormal)).collect();
            rows.push((row, c));
        }
    }
    rows.shuffle(rng);
    let (rows, labels): (Vec<Vec<f64>>, Vec<GaitClass>) = rows.into_iter().unzip();
    (Matrix::from_rows(&rows).unwrap(), labels)
}

pub fn smote_geometry() -> Verdict {
    let mut rng = seed::rng(0x5307E);
    let mut synthetic = 0;
    for run in 0..500 {
        let (x, y) = imbalanced(&mut rng);
        let k = rng.gen_range(1..=7);
        match check_smote(&x, &y, k, rng.gen()) {
            Ok(s) => synthetic += s,
            Err(e) => return Verdict::fail(format!("run {run}: {e}")),
        }
    }
    Verdict::new(true, format!("500 runs, {synthetic} synthetic rows checked"))
}

fn bits(m: &Matrix) -> Vec<u64> {
    m.as_slice().iter().map(|v| v.to_bits()).collect()
}

fn train_with_threads(threads: usize, x: &Matrix, y: &[GaitClass], params: &Hyperparams) -> EnsembleModel {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(|| train(x, y, params, 17).unwrap())
}

/// XOR layout: four noisy clusters, diagonal quadrants share a class.
pub fn xor(seed: u64, per_cluster: usize) -> (Matrix, Vec<GaitClass>) {
    let mut rng = seed::rng(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (cx, cy) in [(-1.0, -1.0), (1.0, 1.0), (-1.0, 1.0), (1.0, -1.0)] {
        for _ in 0..per_cluster {
            let nx: f64 = rng.sample(StandardNormal);
            let ny: f64 = rng.sample(StandardNormal);
            rows.push(vec![cx + 0.2 * nx, cy + 0.2 * ny]);
            labels.push(if cx * cy > 0.0 { GaitClass::Nor } else { GaitClass::Par });
        }
    }
    (Matrix::from_rows(&rows).unwrap(), labels)
}

pub fn learner_sanity() -> Verdict {
    let gbt = |depth, lr, rounds| GbtParams {
        max_depth: depth,
        learning_rate: lr,
        n_estimators: rounds,
        min_child_weight: 1.0,
        subsample: 1.0,
        colsample_bytree: 1.0,
    };
    for s in 0..10u64 {
        let (x, y) = blobs(seed::derive_index(0x1055, s), 25, 6, GaitClass::ALL, 1.2);
        let m = train(&x, &y, &Hyperparams::Gbt(gbt(3, 0.2, 40)), s).unwrap();
        if m.loss_trace.len() != 40 {
            return Verdict::fail(format!("dataset {s}: {} loss entries", m.loss_trace.len()));
        }
        if let Some(r) = m.loss_trace.windows(2).position(|w| w[1] > w[0]) {
            return Verdict::fail(format!("dataset {s}: loss rose after round {r}: {:?}", &m.loss_trace[r..r + 2]));
        }
    }

    let (x, y) = xor(0x50, 25);
    let shallow = GbtParams {
        max_depth: 2,
        n_estimators: 50,
        ..GbtParams::default()
    };
    let m = train(&x, &y, &Hyperparams::Gbt(shallow), 0).unwrap();
    let pred = m.predict(&x).unwrap();
    let xor_acc = pred.iter().zip(&y).filter(|(p, t)| p == t).count() as f64 / y.len() as f64;
    if xor_acc != 1.0 {
        return Verdict::fail(format!("xor training accuracy {xor_acc}"));
    }

    let (x, y) = blobs(0xF0, 20, 8, GaitClass::ALL, 1.0);
    let dir = tempfile::tempdir().unwrap();
    let forest = Hyperparams::Forest(ForestParams {
        n_estimators: 30,
        max_features: MaxFeatures::Sqrt,
        ..ForestParams::default()
    });
    let boosted = Hyperparams::Gbt(GbtParams {
        subsample: 0.8,
        colsample_bytree: 0.7,
        ..gbt(4, 0.1, 30)
    });
    for params in [forest, boosted] {
        let one = train_with_threads(1, &x, &y, &params);
        let many = train_with_threads(4, &x, &y, &params);
        let reference = bits(&one.predict_proba(&x).unwrap());
        if one != many || bits(&many.predict_proba(&x).unwrap()) != reference {
            return Verdict::fail(format!("{}: thread count changed the model", params.kind()));
        }
        let path = dir.path().join(format!("{}.json", params.kind()));
        one.save(&path).unwrap();
        let loaded = EnsembleModel::load(&path).unwrap();
        if bits(&loaded.predict_proba(&x).unwrap()) != reference {
            return Verdict::fail(format!("{}: round trip changed predictions", params.kind()));
        }
    }
    Verdict::new(
        true,
        "loss non-increasing on 10 datasets, xor accuracy 1.0, forest and gbt stable across threads and round trip",
    )
}

/// Nested run with every fitting stage audited for held-out rows.
pub fn leakage_guard(views: &BTreeMap<View, FeatureMatrix>) -> Verdict {
    let probe = LeakageGuard::new("S01");
    if !matches!(probe.observe(Stage::Training, ["S02", "S01"]), Err(Error::InternalInvariant(_))) {
        return Verdict::fail("guard accepted held-out rows");
    }
    let run = match run_nested(views, &quick_forest(3, 2), false) {
        Ok(r) => r,
        Err(e) => return Verdict::fail(format!("nested run aborted: {e}")),
    };
    let subjects: BTreeSet<&str> = views
        .values()
        .flat_map(|fm| fm.row_meta.iter().map(|m| m.subject_id.as_str()))
        .collect();
    if run.folds.len() != subjects.len() * views.len() {
        return Verdict::fail(format!("{} folds for {} subjects", run.folds.len(), subjects.len()));
    }
    let (mut accesses, mut rows, mut leaked) = (0, 0, 0);
    for fold in &run.folds {
        let stages: BTreeSet<Stage> = fold.audit.iter().map(|a| a.stage).collect();
        if stages.len() != 4 {
            return Verdict::fail(format!("fold {} audited only {stages:?}", fold.fold));
        }
        accesses += fold.audit.len();
        rows += fold.audit.iter().map(|a| a.rows).sum::<usize>();
        leaked += fold.audit.iter().map(|a| a.test_rows).sum::<usize>();
    }
    Verdict::new(
        leaked == 0 && rows > 0,
        format!("{} folds, {accesses} audited accesses over {rows} rows, {leaked} held-out rows seen", run.folds.len()),
    )
}

/// Permutes class labels among each subject's videos, so every window of a
/// video keeps one (wrong) label and per-subject class counts stay intact.
pub fn shuffle_labels(fm: &FeatureMatrix, seed: u64) -> FeatureMatrix {
    let mut out = fm.clone();
    let mut videos: BTreeMap<&str, BTreeMap<&str, GaitClass>> = BTreeMap::new();
    for m in &fm.row_meta {
        videos.entry(&m.subject_id).or_default().insert(&m.video_id, m.gait_class);
    }
    let mut relabel: BTreeMap<String, GaitClass> = BTreeMap::new();
    for (i, (_, vids)) in videos.iter().enumerate() {
        let mut labels: Vec<GaitClass> = vids.values().copied().collect();
        labels.shuffle(&mut seed::rng(seed::derive_index(seed, i as u64)));
        for (video, label) in vids.keys().zip(labels) {
            relabel.insert(video.to_string(), label);
        }
    }
    for m in &mut out.row_meta {
        m.gait_class = relabel[&m.video_id];
    }
    out
}

pub fn null_calibration(views: &BTreeMap<View, FeatureMatrix>) -> Verdict {
    let shuffled: BTreeMap<View, FeatureMatrix> = views
        .iter()
        .map(|(v, fm)| (*v, shuffle_labels(fm, seed::derive(0x5A, v.as_str()))))
        .collect();
    let run = match run_nested(&shuffled, &quick_forest(5, 2), false) {
        Ok(r) => r,
        Err(e) => return Verdict::fail(format!("nested run failed: {e}")),
    };
    let n = run.predictions.len();
    let hits = run.predictions.iter().filter(|p| p.truth == p.predicted).count();
    let acc = hits as f64 / n as f64;
    let chance = 1.0 / GaitClass::COUNT as f64;
    let half = normal_ci(chance, n).unwrap();
    Verdict::new(
        (acc - chance).abs() <= half,
        format!("pooled accuracy {acc:.3} over {n} videos, chance interval {chance:.3} ± {half:.3}"),
    )
}

/// CPU-time budget of the end-to-end benchmark: 15 minutes on four cores.
/// Machines with fewer cores get the same core-minutes.
pub fn benchmark_deadline() -> Duration {
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(4);
    Duration::from_secs(15 * 60 * 4 / cores as u64)
}

/// 8 subjects, gbt, one repeat, budget 15, both views and their pooling.
/// Runs on a worker thread so the deadline can be enforced from outside.
pub fn end_to_end(work: &Path) -> Verdict {
    let deadline = benchmark_deadline();
    let work = work.to_path_buf();
    let start = Instant::now();
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let result = (|| -> gaitscope::Result<BTreeMap<String, f64>> {
            let manifest = generate(
                &SynthConfig {
                    n_subjects: 8,
                    ..SynthConfig::default()
                },
                &work,
            )?;
            let views = extract(&manifest, &[View::Frontal, View::Sagittal]);
            let mut cfg = EvalConfig::new(ModelKind::Gbt);
            cfg.n_repeats = 1;
            cfg.budget = 15;
            let run = run_nested(&views, &cfg, true)?;
            Ok(run.reports.iter().map(|(k, r)| (k.clone(), r.accuracy.value)).collect())
        })();
        let _ = tx.send(result);
    });
    let acc = match rx.recv_timeout(deadline) {
        Ok(Ok(acc)) => acc,
        Ok(Err(e)) => return Verdict::fail(format!("pipeline failed: {e}")),
        Err(_) => {
            return Verdict::fail(format!(
                "not finished after {:.0} min (deadline {:.0} min for this machine); accuracy not measured",
                start.elapsed().as_secs_f64() / 60.0,
                deadline.as_secs_f64() / 60.0
            ))
        }
    };
    let elapsed = start.elapsed();
    let (frontal, sagittal, combined) = (acc["frontal"], acc["sagittal"], acc["combined"]);
    let pass = frontal >= 0.90 && sagittal >= 0.90 && combined >= frontal.max(sagittal) - 0.05;
    Verdict::new(
        pass && elapsed <= deadline,
        format!(
            "frontal {frontal:.3}, sagittal {sagittal:.3}, combined {combined:.3}, {:.1} min (deadline {:.0} min)",
            elapsed.as_secs_f64() / 60.0,
            deadline.as_secs_f64() / 60.0
        ),
    )
}

fn descriptor(keypoint: usize, kind: FeatureKind) -> FeatureDescriptor {
    FeatureDescriptor {
        channel: Channel::new(keypoint, Axis::X),
        kind,
    }
}

/// Columns: label copy, constant, pure noise, then four weak signals.
pub fn importance_fixture(seed: u64, rows: usize) -> (Matrix, Vec<GaitClass>) {
    let mut rng = seed::rng(seed);
    let mut data = Vec::with_capacity(rows);
    let mut labels = Vec::with_capacity(rows);
    for _ in 0..rows {
        let c = GaitClass::ALL[rng.gen_range(0..GaitClass::COUNT)];
        let mut row = vec![c.index() as f64, 1.0, rng.sample(StandardNormal)];
        for j in 0..4 {
            let shift = ((c.index() + j) % 3) as f64;
            row.push(shift + 1.5 * rng.sample::<f64, _>(StandardNormal));
        }
        data.push(row);
        labels.push(c);
    }
    (Matrix::from_rows(&data).unwrap(), labels)
}

pub fn importance_sanity() -> Verdict {
    let columns: Vec<FeatureDescriptor> = [
        FeatureKind::Mean,
        FeatureKind::Maximum,
        FeatureKind::Minimum,
        FeatureKind::Median,
        FeatureKind::Variance,
        FeatureKind::SumValues,
        FeatureKind::AbsEnergy,
    ]
    .into_iter()
    .enumerate()
    .map(|(k, kind)| descriptor(k, kind))
    .collect();
    let params = Hyperparams::Gbt(GbtParams::default());
    let (mut copy_top, mut constant_zero, mut noise_covered, mut noise_unused) = (0, 0, 0, 0);
    for s in 0..10u64 {
        let (x, y) = importance_fixture(seed::derive_index(0x1A, s), 300);
        let (tx, ty) = importance_fixture(seed::derive_index(0x1B, s), 200);
        let model = train(&x, &y, &params, s).unwrap();
        let scores = permutation_importance(&model, &tx, &ty, &columns, 20, s).unwrap();
        let top = (1..scores.len()).all(|j| scores[0].mean_drop > scores[j].mean_drop);
        copy_top += usize::from(top);
        constant_zero += usize::from(scores[1].mean_drop == 0.0);
        noise_covered += usize::from(scores[2].mean_drop.abs() <= scores[2].ci_half_width);
        noise_unused += usize::from(!model.used_features().contains(&2));
    }
    Verdict::new(
        copy_top >= 9 && constant_zero >= 9 && noise_covered >= 9,
        format!("label copy first {copy_top}/10, constant exactly 0 {constant_zero}/10, noise interval covers 0 {noise_covered}/10 (noise never split on in {noise_unused}/10)"),
    )
}

/// `name   0.865 ± 0.011`
fn renders_estimate(line: &str) -> bool {
    let mut parts = line.split_whitespace().skip(1);
    let value = parts.next();
    let sep = parts.next();
    let half = parts.next();
    let shaped = |s: Option<&str>| {
        s.is_some_and(|s| s.len() == 5 && s.as_bytes()[1] == b'.' && s.parse::<f64>().is_ok())
    };
    shaped(value) && sep == Some("±") && shaped(half) && parts.next().is_none()
}

pub fn metrics_identity() -> Verdict {
    let mut rng = seed::rng(0x9E7);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(1..=500);
        let mut classes = GaitClass::ALL.to_vec();
        classes.shuffle(&mut rng);
        classes.truncate(rng.gen_range(1..=7));
        let skill = rng.gen::<f64>();
        let truth: Vec<GaitClass> = (0..n).map(|_| classes[rng.gen_range(0..classes.len())]).collect();
        let predicted: Vec<GaitClass> = truth
            .iter()
            .map(|&t| {
                if rng.gen_bool(skill) {
                    t
                } else {
                    GaitClass::ALL[rng.gen_range(0..GaitClass::COUNT)]
                }
            })
            .collect();
        let r = compute_metrics(&truth, &predicted, GaitClass::ALL).unwrap();
        worst = worst.max((r.recall.value - r.accuracy.value).abs());
    }
    let sample = compute_metrics(
        &[GaitClass::Nor, GaitClass::Nor, GaitClass::Par, GaitClass::Cir],
        &[GaitClass::Nor, GaitClass::Par, GaitClass::Par, GaitClass::Cir],
        GaitClass::ALL,
    )
    .unwrap();
    let table = sample.table();
    let summary: Vec<&str> = table
        .lines()
        .filter(|l| ["accuracy", "precision", "recall", "f1"].iter().any(|k| l.starts_with(k)))
        .collect();
    let shaped = summary.len() == 4 && summary.iter().all(|l| renders_estimate(l));
    Verdict::new(
        worst <= 1e-12 && shaped,
        format!("max |weighted recall - accuracy| = {worst:e} over 1000 configurations; summary rows shaped: {shaped}"),
    )
}

/// Every artifact of one synth, extract, evaluate pass, keyed by name.
fn pipeline_artifacts(dir: &Path, threads: usize) -> BTreeMap<String, Vec<u8>> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
    pool.install(|| {
        let manifest = small_synth(&dir.join("data"), 11);
        let views = extract(&manifest, &[View::Frontal, View::Sagittal]);
        let out = dir.join("out");
        fs::create_dir_all(&out).unwrap();
        let mut files = BTreeMap::new();
        for (view, fm) in &views {
            let (values, meta) = (out.join(format!("features_{view}.csv")), out.join(format!("rows_{view}.csv")));
            write_matrix_csv(fm, &values, &meta).unwrap();
            files.insert(format!("features_{view}.csv"), fs::read(&values).unwrap());
            files.insert(format!("rows_{view}.csv"), fs::read(&meta).unwrap());
        }
        let cfg = quick_forest(21, 2);
        let run = run_nested(&views, &cfg, true).unwrap();
        for f in &run.folds {
            files.insert(format!("fold_{}_{}_{}.json", f.view, f.repeat, f.fold), serde_json::to_vec(f).unwrap());
        }
        let predictions = out.join("predictions.csv");
        write_predictions_csv(&run.predictions, &predictions).unwrap();
        files.insert("predictions.csv".into(), fs::read(&predictions).unwrap());
        let report = out.join("report.json");
        ReportFile::new(&cfg, run.reports).save(&report).unwrap();
        let mut value: serde_json::Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
        value.as_object_mut().unwrap().remove("metadata");
        files.insert("report.json".into(), serde_json::to_vec(&value).unwrap());
        files
    })
}

pub fn determinism(work: &Path) -> Verdict {
    let a = pipeline_artifacts(&work.join("a"), 1);
    let b = pipeline_artifacts(&work.join("b"), 3);
    let differing: Vec<&String> = a.keys().filter(|k| a.get(*k) != b.get(*k)).collect();
    let bytes: usize = a.values().map(Vec::len).sum();
    Verdict::new(
        a.len() == b.len() && differing.is_empty(),
        format!("{} artifacts, {bytes} bytes compared, differing: {differing:?}", a.len()),
    )
}
