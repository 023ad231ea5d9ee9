//! Support-weighted classification metrics with normal-approximation intervals.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pose::GaitClass;

/// z for a two-sided 95% interval.
pub const Z95: f64 = 1.96;

/// Half-width of the 95% normal-approximation interval of a proportion.
pub fn normal_ci(score: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Usage("confidence interval needs n >= 1".into()));
    }
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::Usage(format!("score {score} is not a proportion")));
    }
    Ok(Z95 * (score * (1.0 - score) / n as f64).sqrt())
}

/// A score with its 95% half-width; renders as `0.865 ± 0.011`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub ci: f64,
}

impl Estimate {
    fn with_n(value: f64, n: usize) -> Self {
        let ci = if n == 0 { 0.0 } else { normal_ci(value.clamp(0.0, 1.0), n).unwrap_or(0.0) };
        Estimate { value, ci }
    }
}

impl fmt::Display for Estimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3} ± {:.3}", self.value, self.ci)
    }
}

/// One-vs-rest row read off the multiclass confusion matrix. Intervals use
/// the class support as n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRow {
    pub class: GaitClass,
    pub precision: Estimate,
    pub recall: Estimate,
    pub f1: Estimate,
    pub support: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub accuracy: Estimate,
    pub precision: Estimate,
    pub recall: Estimate,
    pub f1: Estimate,
    pub classes: Vec<GaitClass>,
    pub per_class: Vec<ClassRow>,
    /// `confusion[truth][predicted]`, indexed like `classes`.
    pub confusion: Vec<Vec<usize>>,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn confusion(truth: &[GaitClass], predicted: &[GaitClass], classes: &[GaitClass]) -> Result<Vec<Vec<usize>>> {
    if truth.len() != predicted.len() {
        return Err(Error::Shape {
            expected: truth.len(),
            got: predicted.len(),
        });
    }
    let pos = |c: &GaitClass| {
        classes
            .iter()
            .position(|k| k == c)
            .ok_or_else(|| Error::Schema(format!("label {c} is not among the evaluated classes")))
    };
    let mut m = vec![vec![0usize; classes.len()]; classes.len()];
    for (t, p) in truth.iter().zip(predicted) {
        m[pos(t)?][pos(p)?] += 1;
    }
    Ok(m)
}

pub fn compute_metrics(truth: &[GaitClass], predicted: &[GaitClass], classes: &[GaitClass]) -> Result<MetricsReport> {
    let m = confusion(truth, predicted, classes)?;
    let n = truth.len();
    let k = classes.len();
    let correct: usize = (0..k).map(|i| m[i][i]).sum();
    let mut per_class = Vec::with_capacity(k);
    let (mut wp, mut wr, mut wf) = (0.0, 0.0, 0.0);
    for (i, &class) in classes.iter().enumerate() {
        let support: usize = m[i].iter().sum();
        let predicted_as: usize = (0..k).map(|t| m[t][i]).sum();
        let p = ratio(m[i][i], predicted_as);
        let r = ratio(m[i][i], support);
        let f = f1(p, r);
        wp += p * support as f64;
        wr += r * support as f64;
        wf += f * support as f64;
        per_class.push(ClassRow {
            class,
            precision: Estimate::with_n(p, support),
            recall: Estimate::with_n(r, support),
            f1: Estimate::with_n(f, support),
            support,
        });
    }
    let total = n.max(1) as f64;
    Ok(MetricsReport {
        n,
        accuracy: Estimate::with_n(ratio(correct, n), n),
        precision: Estimate::with_n(wp / total, n),
        recall: Estimate::with_n(wr / total, n),
        f1: Estimate::with_n(wf / total, n),
        classes: classes.to_vec(),
        per_class,
        confusion: m,
    })
}

/// Support-weighted F1 over all seven classes.
pub fn weighted_f1(truth: &[GaitClass], predicted: &[GaitClass]) -> Result<f64> {
    Ok(compute_metrics(truth, predicted, GaitClass::ALL)?.f1.value)
}

impl MetricsReport {
    /// Plain-text table: overall rows then one row per class.
    pub fn table(&self) -> String {
        let mut out = format!("n = {}\n", self.n);
        for (name, e) in [
            ("accuracy", self.accuracy),
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
        ] {
            out += &format!("{name:<10} {e}\n");
        }
        out += &format!("{:<6} {:<15} {:<15} {:<15} {}\n", "class", "precision", "recall", "f1", "support");
        for row in &self.per_class {
            out += &format!(
                "{:<6} {:<15} {:<15} {:<15} {}\n",
                row.class.as_str(),
                row.precision.to_string(),
                row.recall.to_string(),
                row.f1.to_string(),
                row.support
            );
        }
        out
    }
}
