//! Relevance testing with Benjamini–Yekutieli false-discovery control.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::features::FeatureDescriptor;
use crate::matrix::Matrix;
use crate::pose::GaitClass;

pub const DEFAULT_FDR: f64 = 0.05;

/// Average ranks (1-based) of `values`, plus the tie-correction sum Σ(t³ − t).
fn average_ranks(values: &[f64]) -> (Vec<f64>, f64) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut ties = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        let t = (j - i) as f64;
        ties += t * t * t - t;
        i = j;
    }
    (ranks, ties)
}

/// Two-sided Mann–Whitney U p-value from the rank sum of the first sample
/// (normal approximation, tie and continuity corrected).
fn mann_whitney_p(rank_sum: f64, n1: usize, n: usize, ties: f64) -> f64 {
    let n1f = n1 as f64;
    let n2f = (n - n1) as f64;
    let nf = n as f64;
    let u1 = rank_sum - n1f * (n1f + 1.0) / 2.0;
    let u = u1.max(n1f * n2f - u1);
    let mu = n1f * n2f / 2.0;
    let var = n1f * n2f / 12.0 * ((nf + 1.0) - ties / (nf * (nf - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = (u - mu - 0.5) / var.sqrt();
    let sf = Normal::standard().sf(z);
    (2.0 * sf).clamp(0.0, 1.0)
}

/// Classes present in `labels`, ascending, after checking each has ≥ 2 samples.
pub fn present_classes(labels: &[GaitClass]) -> Result<Vec<GaitClass>> {
    let mut counts = [0usize; GaitClass::COUNT];
    for c in labels {
        counts[c.index()] += 1;
    }
    let present: Vec<GaitClass> = GaitClass::ALL
        .iter()
        .copied()
        .filter(|c| counts[c.index()] > 0)
        .collect();
    if let Some(c) = present.iter().find(|c| counts[c.index()] < 2) {
        return Err(Error::InsufficientSamples { class: c.to_string() });
    }
    Ok(present)
}

/// One-vs-rest p-value for each class in `classes`.
fn pvalues_for(column: &[f64], labels: &[GaitClass], classes: &[GaitClass]) -> Vec<f64> {
    let first = column.first().copied();
    if column.iter().all(|&v| Some(v) == first) {
        return vec![1.0; classes.len()];
    }
    let (ranks, ties) = average_ranks(column);
    let mut sums = [0.0; GaitClass::COUNT];
    let mut counts = [0usize; GaitClass::COUNT];
    for (r, c) in ranks.iter().zip(labels) {
        sums[c.index()] += r;
        counts[c.index()] += 1;
    }
    classes
        .iter()
        .map(|c| mann_whitney_p(sums[c.index()], counts[c.index()], column.len(), ties))
        .collect()
}

/// Per-class p-values for one column, in ascending class order.
pub fn relevance_pvalues(column: &[f64], labels: &[GaitClass]) -> Result<Vec<(GaitClass, f64)>> {
    if column.len() != labels.len() {
        return Err(Error::Shape {
            expected: labels.len(),
            got: column.len(),
        });
    }
    let classes = present_classes(labels)?;
    if classes.len() < 2 {
        return Err(Error::Usage("relevance testing needs at least two classes".into()));
    }
    Ok(classes.iter().copied().zip(pvalues_for(column, labels, &classes)).collect())
}

/// Benjamini–Yekutieli step-up rejections, in input order.
pub fn by_reject(p: &[f64], q: f64) -> Vec<bool> {
    let m = p.len();
    let harmonic: f64 = (1..=m).map(|i| 1.0 / i as f64).sum();
    step_up(p, |k| k as f64 * q / (m as f64 * harmonic))
}

/// Benjamini–Hochberg step-up rejections, in input order.
pub fn bh_reject(p: &[f64], q: f64) -> Vec<bool> {
    let m = p.len();
    step_up(p, |k| k as f64 * q / m as f64)
}

fn step_up(p: &[f64], threshold: impl Fn(usize) -> f64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    let cutoff = (1..=p.len())
        .rev()
        .find(|&k| p[order[k - 1]] <= threshold(k))
        .unwrap_or(0);
    let mut mask = vec![false; p.len()];
    for &i in &order[..cutoff] {
        mask[i] = true;
    }
    mask
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub classes: Vec<GaitClass>,
    /// `p_values[column][k]` is the p-value for `classes[k]`.
    pub p_values: Vec<Vec<f64>>,
    /// Kept column indices, ascending.
    pub kept: Vec<usize>,
    pub fdr_level: f64,
}

impl SelectionResult {
    pub fn is_kept(&self, column: usize) -> bool {
        self.kept.binary_search(&column).is_ok()
    }
}

/// Keeps columns significant for at least one class under per-class BY.
pub fn select(x: &Matrix, labels: &[GaitClass], fdr_level: f64) -> Result<SelectionResult> {
    if x.nrows() != labels.len() {
        return Err(Error::Shape {
            expected: labels.len(),
            got: x.nrows(),
        });
    }
    if !(0.0..=1.0).contains(&fdr_level) {
        return Err(Error::Config(format!("fdr level {fdr_level} outside [0, 1]")));
    }
    let classes = present_classes(labels)?;
    if classes.len() < 2 {
        return Err(Error::Usage(format!(
            "selection needs at least two classes, found {}",
            classes.len()
        )));
    }
    let p_values: Vec<Vec<f64>> = (0..x.ncols())
        .into_par_iter()
        .map(|j| pvalues_for(&x.column(j), labels, &classes))
        .collect();
    let mut keep = vec![false; x.ncols()];
    for k in 0..classes.len() {
        let p: Vec<f64> = p_values.iter().map(|row| row[k]).collect();
        for (kept, rejected) in keep.iter_mut().zip(by_reject(&p, fdr_level)) {
            *kept |= rejected;
        }
    }
    // constant columns carry p = 1 and are never rejected
    let kept = (0..x.ncols()).filter(|&j| keep[j]).collect();
    Ok(SelectionResult {
        classes,
        p_values,
        kept,
        fdr_level,
    })
}

/// Writes `descriptor,class,p_value,kept`, one line per (column, class).
pub fn write_selection_csv(sel: &SelectionResult, columns: &[FeatureDescriptor], path: &Path) -> Result<()> {
    if columns.len() != sel.p_values.len() {
        return Err(Error::Shape {
            expected: sel.p_values.len(),
            got: columns.len(),
        });
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["descriptor", "class", "p_value", "kept"])?;
    for (j, (d, ps)) in columns.iter().zip(&sel.p_values).enumerate() {
        let kept = sel.is_kept(j).to_string();
        let name = d.to_string();
        for (c, p) in sel.classes.iter().zip(ps) {
            w.write_record([name.as_str(), c.as_str(), &p.to_string(), &kept])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
