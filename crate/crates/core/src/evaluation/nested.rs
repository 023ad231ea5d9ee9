//! Nested leave-one-subject-out evaluation.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::folds::{plan_folds, OuterFold, SubjectSplit};
use super::metrics::{compute_metrics, MetricsReport};
use super::search::{tune, PreparedFold, SearchSpace, TrialRecord};
use super::vote::{vote_combined, vote_video, TieBreak, VideoPrediction, WindowPrediction};
use crate::balance::{smote, BalancePlan};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::learners::{train, EnsembleModel, Hyperparams, ModelKind};
use crate::matrix::Matrix;
use crate::pose::{GaitClass, View};
use crate::seed;
use crate::select::{select, DEFAULT_FDR};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub model: ModelKind,
    pub space: SearchSpace,
    /// Configurations drawn per tuning run.
    pub budget: usize,
    /// Independent repetitions of the whole nested procedure.
    pub n_repeats: usize,
    pub fdr_level: f64,
    pub smote_k: usize,
    pub tie_break: TieBreak,
    pub seed: u64,
}

impl EvalConfig {
    pub fn new(model: ModelKind) -> Self {
        EvalConfig {
            model,
            space: SearchSpace::default_for(model),
            budget: 30,
            n_repeats: 10,
            fdr_level: DEFAULT_FDR,
            smote_k: 5,
            tie_break: TieBreak::ClassOrder,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.space.kind() != self.model {
            return Err(Error::Config(format!(
                "search space is for {} but the model is {}",
                self.space.kind(),
                self.model
            )));
        }
        self.space.validate()?;
        if self.budget == 0 || self.n_repeats == 0 || self.smote_k == 0 {
            return Err(Error::Config("budget, repeats and smote k must be at least 1".into()));
        }
        if !(self.fdr_level > 0.0 && self.fdr_level < 1.0) {
            return Err(Error::Config(format!("fdr level {} outside (0, 1)", self.fdr_level)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Selection,
    Balancing,
    Tuning,
    Training,
}

/// One observation of the rows handed to a fitting stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Access {
    pub stage: Stage,
    pub rows: usize,
    pub test_rows: usize,
}

/// Records every row set that reaches a fitting stage and refuses any that
/// contains the held-out subject.
#[derive(Debug)]
pub struct LeakageGuard {
    test_subject: String,
    log: Mutex<Vec<Access>>,
}

impl LeakageGuard {
    pub fn new(test_subject: &str) -> Self {
        LeakageGuard {
            test_subject: test_subject.to_string(),
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn observe<'a>(&self, stage: Stage, subjects: impl IntoIterator<Item = &'a str>) -> Result<()> {
        let (mut rows, mut test_rows) = (0, 0);
        for s in subjects {
            rows += 1;
            test_rows += usize::from(s == self.test_subject);
        }
        self.log.lock().expect("guard log poisoned").push(Access { stage, rows, test_rows });
        if test_rows > 0 {
            return Err(Error::InternalInvariant(format!(
                "{test_rows} rows of held-out subject {} reached {stage:?}",
                self.test_subject
            )));
        }
        Ok(())
    }

    pub fn audit(&self) -> Vec<Access> {
        let mut log = self.log.lock().expect("guard log poisoned").clone();
        log.sort_by_key(|a| a.stage);
        log
    }
}

/// Outcome of one (repeat, outer fold, view) job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldOutcome {
    pub repeat: usize,
    pub fold: usize,
    pub view: View,
    pub test_subject: String,
    /// Matrix columns the model was trained on, in model feature order.
    pub kept: Vec<usize>,
    pub params: Hyperparams,
    pub trials: Vec<TrialRecord>,
    pub model: EnsembleModel,
    pub audit: Vec<Access>,
    pub windows: Vec<WindowPrediction>,
}

/// One line of the prediction log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub repeat: usize,
    pub fold: usize,
    pub video_id: String,
    pub subject: String,
    pub view: String,
    pub truth: GaitClass,
    pub predicted: GaitClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NestedRun {
    /// Keyed by `frontal`, `sagittal`, `combined`.
    pub reports: BTreeMap<String, MetricsReport>,
    pub predictions: Vec<PredictionRecord>,
    pub folds: Vec<FoldOutcome>,
}

fn rows_of<'a>(fm: &FeatureMatrix, subjects: impl IntoIterator<Item = &'a String>) -> Vec<usize> {
    let wanted: BTreeSet<&str> = subjects.into_iter().map(String::as_str).collect();
    (0..fm.nrows()).filter(|&i| wanted.contains(fm.row_meta[i].subject_id.as_str())).collect()
}

/// Selects columns on `train` rows and balances them; the guard sees every
/// row, synthetic rows through their parents.
fn fit_inputs(
    fm: &FeatureMatrix,
    train: &[usize],
    cfg: &EvalConfig,
    smote_seed: u64,
    guard: &LeakageGuard,
) -> Result<(Vec<usize>, Matrix, Vec<GaitClass>)> {
    let subject = |i: usize| fm.row_meta[train[i]].subject_id.as_str();
    guard.observe(Stage::Selection, (0..train.len()).map(subject))?;
    let x = fm.values.select_rows(train);
    let y: Vec<GaitClass> = train.iter().map(|&i| fm.row_meta[i].gait_class).collect();
    let kept = select(&x, &y, cfg.fdr_level)?.kept;
    if kept.is_empty() {
        log::warn!("no column passed selection; the model sees no features");
    }
    let balanced = smote(
        &x.select_columns(&kept),
        &y,
        &BalancePlan {
            k_neighbors: cfg.smote_k,
            seed: smote_seed,
        },
    )?;
    guard.observe(
        Stage::Balancing,
        (0..train.len())
            .map(subject)
            .chain(balanced.provenance.iter().flat_map(|p| [subject(p.base), subject(p.neighbor)])),
    )?;
    Ok((kept, balanced.x, balanced.y))
}

fn prepare_inner(
    fm: &FeatureMatrix,
    split: &SubjectSplit,
    cfg: &EvalConfig,
    smote_seed: u64,
    guard: &LeakageGuard,
) -> Result<PreparedFold> {
    let train = rows_of(fm, &split.train);
    let val = rows_of(fm, &split.validation);
    let (kept, train_x, train_y) = fit_inputs(fm, &train, cfg, smote_seed, guard)?;
    guard.observe(
        Stage::Tuning,
        val.iter().map(|&i| fm.row_meta[i].subject_id.as_str()),
    )?;
    Ok(PreparedFold {
        train_x,
        train_y,
        val_x: fm.values.select(&val, &kept),
        val_y: val.iter().map(|&i| fm.row_meta[i].gait_class).collect(),
    })
}

fn run_fold(
    fm: &FeatureMatrix,
    fold: &OuterFold,
    cfg: &EvalConfig,
    repeat: usize,
    index: usize,
    fold_seed: u64,
) -> Result<FoldOutcome> {
    let guard = LeakageGuard::new(&fold.test_subject);
    let inner_smote = seed::derive(fold_seed, "inner-smote");
    let prepared: Vec<PreparedFold> = fold
        .inner
        .iter()
        .enumerate()
        .map(|(i, split)| prepare_inner(fm, split, cfg, seed::derive_index(inner_smote, i as u64), &guard))
        .collect::<Result<_>>()?;
    let tuned = tune(&prepared, &cfg.space, cfg.budget, seed::derive(fold_seed, "tune"))?;
    drop(prepared);

    let train_rows = rows_of(fm, &fold.train_subjects);
    let (kept, x, y) = fit_inputs(fm, &train_rows, cfg, seed::derive(fold_seed, "smote"), &guard)?;
    guard.observe(Stage::Training, train_rows.iter().map(|&i| fm.row_meta[i].subject_id.as_str()))?;
    let model = train(&x, &y, &tuned.best, seed::derive(fold_seed, "final"))?;

    let test_rows = rows_of(fm, [&fold.test_subject]);
    let predicted = model.predict(&fm.values.select(&test_rows, &kept))?;
    let windows = test_rows
        .iter()
        .zip(predicted)
        .map(|(&i, predicted)| {
            let meta = &fm.row_meta[i];
            WindowPrediction {
                video_id: meta.video_id.clone(),
                trial_key: meta.trial_key(),
                subject: meta.subject_id.clone(),
                view: meta.view,
                truth: meta.gait_class,
                predicted,
            }
        })
        .collect();
    log::info!(
        "repeat {repeat} fold {index} ({}, {}): {} columns kept, best inner F1 {:.3}",
        fold.test_subject,
        fm.view,
        kept.len(),
        tuned.trials.iter().map(|t| t.score).fold(f64::NEG_INFINITY, f64::max)
    );
    Ok(FoldOutcome {
        repeat,
        fold: index,
        view: fm.view,
        test_subject: fold.test_subject.clone(),
        kept,
        params: tuned.best,
        trials: tuned.trials,
        model,
        audit: guard.audit(),
        windows,
    })
}

fn records(repeat: usize, fold: usize, videos: Vec<VideoPrediction>) -> impl Iterator<Item = PredictionRecord> {
    videos.into_iter().map(move |v| PredictionRecord {
        repeat,
        fold,
        video_id: v.video_id,
        subject: v.subject,
        view: v.view,
        truth: v.truth,
        predicted: v.predicted,
    })
}

/// Runs every (repeat, outer fold, view) job, votes per video, and pools the
/// votes into one report per view. With both views present and `combined`
/// set, trials are also voted over the pooled windows of both views.
pub fn run_nested(views: &BTreeMap<View, FeatureMatrix>, cfg: &EvalConfig, combined: bool) -> Result<NestedRun> {
    cfg.validate()?;
    if views.is_empty() {
        return Err(Error::Usage("no feature matrix to evaluate".into()));
    }
    if combined && views.len() < 2 {
        return Err(Error::Usage("combined evaluation needs both views".into()));
    }
    for (view, fm) in views {
        if fm.view != *view || fm.row_meta.iter().any(|m| m.view != *view) {
            return Err(Error::InternalInvariant(format!("matrix filed under {view} holds other views")));
        }
    }
    let subjects: Vec<String> = views
        .values()
        .flat_map(|fm| fm.row_meta.iter().map(|m| m.subject_id.clone()))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let repeat_root = seed::derive(cfg.seed, "repeat");
    let plans = (0..cfg.n_repeats)
        .map(|r| plan_folds(&subjects, seed::derive_index(repeat_root, r as u64)))
        .collect::<Result<Vec<_>>>()?;

    let mut jobs = Vec::new();
    for (r, plan) in plans.iter().enumerate() {
        for (f, fold) in plan.outer.iter().enumerate() {
            for view in views.keys() {
                jobs.push((r, f, fold, *view));
            }
        }
    }
    let outcomes: Vec<Option<FoldOutcome>> = jobs
        .par_iter()
        .map(|&(r, f, fold, view)| {
            let fm = &views[&view];
            if !fm.row_meta.iter().any(|m| m.subject_id == fold.test_subject) {
                log::warn!("{} has no {view} windows; fold skipped for that view", fold.test_subject);
                return Ok(None);
            }
            let fold_seed = seed::derive(seed::derive_index(plans[r].seed, f as u64), view.as_str());
            run_fold(fm, fold, cfg, r, f, fold_seed).map(Some)
        })
        .collect::<Result<_>>()?;
    let folds: Vec<FoldOutcome> = outcomes.into_iter().flatten().collect();

    let mut predictions = Vec::new();
    for o in &folds {
        predictions.extend(records(o.repeat, o.fold, vote_video(&o.windows)?));
    }
    if combined {
        let mut by_fold: BTreeMap<(usize, usize), (Vec<WindowPrediction>, Vec<WindowPrediction>)> = BTreeMap::new();
        for o in &folds {
            let entry = by_fold.entry((o.repeat, o.fold)).or_default();
            match o.view {
                View::Frontal => entry.0.extend(o.windows.iter().cloned()),
                View::Sagittal => entry.1.extend(o.windows.iter().cloned()),
            }
        }
        for ((r, f), (frontal, sagittal)) in by_fold {
            predictions.extend(records(r, f, vote_combined(&frontal, &sagittal)?));
        }
    }
    predictions.sort_by(|a, b| (a.repeat, a.fold, &a.view, &a.video_id).cmp(&(b.repeat, b.fold, &b.view, &b.video_id)));

    let mut reports = BTreeMap::new();
    let names: BTreeSet<&str> = predictions.iter().map(|p| p.view.as_str()).collect();
    for name in names {
        let (truth, predicted): (Vec<GaitClass>, Vec<GaitClass>) = predictions
            .iter()
            .filter(|p| p.view == name)
            .map(|p| (p.truth, p.predicted))
            .unzip();
        reports.insert(name.to_string(), compute_metrics(&truth, &predicted, GaitClass::ALL)?);
    }
    Ok(NestedRun {
        reports,
        predictions,
        folds,
    })
}

pub const PREDICTION_HEADER: [&str; 7] = ["repeat", "fold", "video_id", "subject", "view", "truth", "predicted"];

pub fn write_predictions_csv(records: &[PredictionRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    w.write_record(PREDICTION_HEADER)?;
    for r in records {
        w.write_record([
            r.repeat.to_string(),
            r.fold.to_string(),
            r.video_id.clone(),
            r.subject.clone(),
            r.view.clone(),
            r.truth.to_string(),
            r.predicted.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    /// Seconds since the Unix epoch; the only field that varies between
    /// identical runs.
    pub created_unix: u64,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub metadata: ReportMetadata,
    pub seed: u64,
    pub config: EvalConfig,
    pub reports: BTreeMap<String, MetricsReport>,
}

impl ReportFile {
    pub fn new(cfg: &EvalConfig, reports: BTreeMap<String, MetricsReport>) -> Self {
        ReportFile {
            metadata: ReportMetadata {
                created_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
            seed: cfg.seed,
            config: cfg.clone(),
            reports,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)? + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}
