//! Permutation importance on held-out windows, summed per keypoint channel
//! and cross-tabulated by feature family.

use std::collections::BTreeMap;
use std::path::Path;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::metrics::Z95;
use crate::evaluation::FoldOutcome;
use crate::features::{Channel, Family, FeatureDescriptor, FeatureMatrix};
use crate::learners::EnsembleModel;
use crate::matrix::Matrix;
use crate::pose::GaitClass;
use crate::seed;

pub const DEFAULT_REPEATS: usize = 10;
pub const DEFAULT_TOP_K: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceScore {
    pub descriptor: FeatureDescriptor,
    /// Baseline accuracy minus mean shuffled accuracy; positive means the
    /// model got worse without the column.
    pub mean_drop: f64,
    pub ci_half_width: f64,
    pub repeats: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeypointImportance {
    pub channel: Channel,
    pub total: f64,
}

fn accuracy(model: &EnsembleModel, x: &Matrix, y: &[GaitClass]) -> f64 {
    let hits = x.rows_iter().zip(y).filter(|(row, c)| model.predict_class(row) == **c).count();
    hits as f64 / y.len().max(1) as f64
}

/// Accuracy drop per column of `x` when that column alone is shuffled.
/// Columns the model never splits on score exactly 0 without being evaluated.
pub fn permutation_importance(
    model: &EnsembleModel,
    x: &Matrix,
    y: &[GaitClass],
    columns: &[FeatureDescriptor],
    repeats: usize,
    seed: u64,
) -> Result<Vec<ImportanceScore>> {
    if repeats < 2 {
        return Err(Error::Config(format!("importance needs at least 2 repeats, got {repeats}")));
    }
    if x.nrows() != y.len() {
        return Err(Error::Shape {
            expected: y.len(),
            got: x.nrows(),
        });
    }
    if x.ncols() != columns.len() || x.ncols() != model.feature_count {
        return Err(Error::Shape {
            expected: model.feature_count,
            got: x.ncols(),
        });
    }
    let used = model.used_features();
    let base = accuracy(model, x, y);
    let root = seed::derive(seed, "permutation");
    let scores = (0..x.ncols())
        .into_par_iter()
        .map(|j| {
            let descriptor = columns[j];
            if !used.contains(&j) {
                return ImportanceScore {
                    descriptor,
                    mean_drop: 0.0,
                    ci_half_width: 0.0,
                    repeats,
                };
            }
            let column = x.column(j);
            let col_seed = seed::derive_index(root, j as u64);
            let mut shuffled = x.clone();
            let drops: Vec<f64> = (0..repeats)
                .map(|r| {
                    let mut values = column.clone();
                    values.shuffle(&mut seed::rng(seed::derive_index(col_seed, r as u64)));
                    for (i, v) in values.into_iter().enumerate() {
                        shuffled.set(i, j, v);
                    }
                    base - accuracy(model, &shuffled, y)
                })
                .collect();
            let mean = drops.iter().sum::<f64>() / repeats as f64;
            let var = drops.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (repeats - 1) as f64;
            ImportanceScore {
                descriptor,
                mean_drop: mean,
                ci_half_width: Z95 * var.sqrt() / (repeats as f64).sqrt(),
                repeats,
            }
        })
        .collect();
    Ok(scores)
}

/// Importance of every fold's final model on its held-out subject, averaged
/// over folds. A column a fold did not keep counts as 0 for that fold; the
/// half-width treats folds as independent.
pub fn fold_importance(
    fm: &FeatureMatrix,
    folds: &[&FoldOutcome],
    repeats: usize,
    seed: u64,
) -> Result<Vec<ImportanceScore>> {
    if folds.is_empty() {
        return Ok(Vec::new());
    }
    let mut sums: BTreeMap<usize, (f64, f64)> = BTreeMap::new();
    for (k, fold) in folds.iter().enumerate() {
        if fold.view != fm.view {
            return Err(Error::Usage(format!("fold of view {} scored against {} matrix", fold.view, fm.view)));
        }
        let rows: Vec<usize> = (0..fm.nrows()).filter(|&i| fm.row_meta[i].subject_id == fold.test_subject).collect();
        let x = fm.values.select(&rows, &fold.kept);
        let y: Vec<GaitClass> = rows.iter().map(|&i| fm.row_meta[i].gait_class).collect();
        let columns: Vec<FeatureDescriptor> = fold.kept.iter().map(|&j| fm.columns[j]).collect();
        let scores = permutation_importance(&fold.model, &x, &y, &columns, repeats, seed::derive_index(seed, k as u64))?;
        for (s, &j) in scores.iter().zip(&fold.kept) {
            let e = sums.entry(j).or_default();
            e.0 += s.mean_drop;
            e.1 += s.ci_half_width.powi(2);
        }
    }
    let n = folds.len() as f64;
    Ok(sums
        .into_iter()
        .map(|(j, (drop, ci2))| ImportanceScore {
            descriptor: fm.columns[j],
            mean_drop: drop / n,
            ci_half_width: ci2.sqrt() / n,
            repeats,
        })
        .collect())
}

/// Descending by signed value; ties fall back to key order.
fn ranked<K: Ord + Copy>(totals: BTreeMap<K, f64>) -> Vec<(K, f64)> {
    let mut v: Vec<(K, f64)> = totals.into_iter().collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

fn top_nonzero<K: Ord + Copy>(totals: BTreeMap<K, f64>, k: usize) -> Vec<K> {
    ranked(totals)
        .into_iter()
        .filter(|(_, t)| *t != 0.0)
        .take(k)
        .map(|(key, _)| key)
        .collect()
}

/// Sum of importances per keypoint channel, largest first. Negative totals
/// are kept.
pub fn aggregate_keypoints(scores: &[ImportanceScore]) -> Vec<KeypointImportance> {
    let mut totals: BTreeMap<Channel, f64> = BTreeMap::new();
    for s in scores {
        *totals.entry(s.descriptor.channel).or_default() += s.mean_drop;
    }
    ranked(totals)
        .into_iter()
        .map(|(channel, total)| KeypointImportance { channel, total })
        .collect()
}

/// Family × channel importance table over the top-ranked families (rows) and
/// channels (columns).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Heatmap {
    pub families: Vec<Family>,
    pub channels: Vec<Channel>,
    /// `cells[row][col]`.
    pub cells: Vec<Vec<f64>>,
}

/// Ranks by signed cumulative importance; only families and channels with a
/// nonzero cumulative importance are eligible.
pub fn heatmap_matrix(scores: &[ImportanceScore], top_k: usize) -> Result<Heatmap> {
    if top_k == 0 {
        return Err(Error::Config("heatmap top_k must be at least 1".into()));
    }
    let mut by_family: BTreeMap<Family, f64> = BTreeMap::new();
    let mut by_channel: BTreeMap<Channel, f64> = BTreeMap::new();
    let mut cell: BTreeMap<(Family, Channel), f64> = BTreeMap::new();
    for s in scores {
        let (f, c) = (s.descriptor.kind.family(), s.descriptor.channel);
        *by_family.entry(f).or_default() += s.mean_drop;
        *by_channel.entry(c).or_default() += s.mean_drop;
        *cell.entry((f, c)).or_default() += s.mean_drop;
    }
    let families: Vec<Family> = top_nonzero(by_family, top_k);
    let channels: Vec<Channel> = top_nonzero(by_channel, top_k);
    let cells = families
        .iter()
        .map(|f| channels.iter().map(|c| cell.get(&(*f, *c)).copied().unwrap_or(0.0)).collect())
        .collect();
    Ok(Heatmap {
        families,
        channels,
        cells,
    })
}

pub fn write_importance_csv(scores: &[ImportanceScore], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    w.write_record(["descriptor", "mean_drop", "ci_half_width"])?;
    for s in scores {
        w.write_record([s.descriptor.to_string(), s.mean_drop.to_string(), s.ci_half_width.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_keypoint_csv(totals: &[KeypointImportance], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    w.write_record(["keypoint", "axis", "total"])?;
    for k in totals {
        w.write_record([
            k.channel.keypoint_name().to_string(),
            k.channel.axis.to_string(),
            k.total.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_heatmap_csv(h: &Heatmap, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let mut header = vec!["family".to_string()];
    header.extend(h.channels.iter().map(Channel::to_string));
    w.write_record(&header)?;
    for (f, row) in h.families.iter().zip(&h.cells) {
        let mut rec = vec![f.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
