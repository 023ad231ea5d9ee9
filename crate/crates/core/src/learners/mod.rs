//! Tree-ensemble classifiers over the seven gait classes.

pub mod forest;
pub mod gbt;
pub mod tree;

use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use forest::{ForestParams, MaxFeatures};
pub use gbt::GbtParams;
pub use tree::{Node, Tree};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pose::GaitClass;
use crate::seed;

const K: usize = GaitClass::COUNT;
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Forest,
    Gbt,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Forest => "forest",
            ModelKind::Gbt => "gbt",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "forest" => Ok(ModelKind::Forest),
            "gbt" => Ok(ModelKind::Gbt),
            _ => Err(Error::Usage(format!("unknown model kind '{s}' (expected forest or gbt)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hyperparams {
    Forest(ForestParams),
    Gbt(GbtParams),
}

fn fraction(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v <= 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} = {v} outside (0, 1]")))
    }
}

impl Hyperparams {
    pub fn kind(&self) -> ModelKind {
        match self {
            Hyperparams::Forest(_) => ModelKind::Forest,
            Hyperparams::Gbt(_) => ModelKind::Gbt,
        }
    }

    pub fn validate(&self, n_rows: usize) -> Result<()> {
        match self {
            Hyperparams::Forest(p) => {
                if p.n_estimators == 0 || p.min_samples_split == 0 || p.min_samples_leaf == 0 {
                    return Err(Error::Config("forest counts must be at least 1".into()));
                }
                if p.max_depth == Some(0) {
                    return Err(Error::Config("forest max_depth must be at least 1".into()));
                }
                if p.min_samples_leaf > n_rows {
                    return Err(Error::Config(format!(
                        "min_samples_leaf {} exceeds {n_rows} training rows",
                        p.min_samples_leaf
                    )));
                }
                if let MaxFeatures::Fraction(f) = p.max_features {
                    fraction("max_features", f)?;
                }
            }
            Hyperparams::Gbt(p) => {
                if p.n_estimators == 0 || p.max_depth == 0 {
                    return Err(Error::Config("gbt n_estimators and max_depth must be at least 1".into()));
                }
                if !(0.0..=1.0).contains(&p.learning_rate) {
                    return Err(Error::Config(format!("learning_rate {} outside [0, 1]", p.learning_rate)));
                }
                if !(p.min_child_weight >= 0.0 && p.min_child_weight.is_finite()) {
                    return Err(Error::Config("min_child_weight must be finite and non-negative".into()));
                }
                fraction("subsample", p.subsample)?;
                fraction("colsample_bytree", p.colsample_bytree)?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub format_version: u32,
    pub params: Hyperparams,
    /// Output order of probability vectors.
    pub classes: Vec<GaitClass>,
    pub feature_count: usize,
    pub seed: u64,
    /// Forest: one tree per estimator, leaves hold class fractions.
    /// Gbt: round-major, one single-score tree per class per round.
    pub trees: Vec<Tree>,
    /// Mean training cross-entropy after each boosting round.
    #[serde(default)]
    pub loss_trace: Vec<f64>,
}

pub fn train(x: &Matrix, y: &[GaitClass], params: &Hyperparams, seed: u64) -> Result<EnsembleModel> {
    if x.nrows() != y.len() {
        return Err(Error::Shape {
            expected: y.len(),
            got: x.nrows(),
        });
    }
    if x.nrows() < 2 {
        return Err(Error::Usage(format!("training needs at least 2 rows, got {}", x.nrows())));
    }
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::Usage("training matrix contains non-finite values".into()));
    }
    params.validate(x.nrows())?;
    let labels: Vec<usize> = y.iter().map(|c| c.index()).collect();
    let (trees, loss_trace) = match params {
        Hyperparams::Forest(p) => (forest::fit(x, &labels, p, seed::derive(seed, "forest")), Vec::new()),
        Hyperparams::Gbt(p) => {
            let fit = gbt::fit(x, &labels, p, seed::derive(seed, "gbt"));
            (fit.trees, fit.loss_trace)
        }
    };
    Ok(EnsembleModel {
        format_version: MODEL_FORMAT_VERSION,
        params: *params,
        classes: GaitClass::ALL.to_vec(),
        feature_count: x.ncols(),
        seed,
        trees,
        loss_trace,
    })
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in v.iter().enumerate().skip(1) {
        if p > v[best] {
            best = i;
        }
    }
    best
}

impl EnsembleModel {
    pub fn kind(&self) -> ModelKind {
        self.params.kind()
    }

    fn check_width(&self, x: &Matrix) -> Result<()> {
        if x.ncols() != self.feature_count {
            return Err(Error::Shape {
                expected: self.feature_count,
                got: x.ncols(),
            });
        }
        Ok(())
    }

    /// Class probabilities for one row, in `classes` order.
    pub fn predict_row(&self, row: &[f64]) -> [f64; K] {
        let mut out = [0.0; K];
        match self.params {
            Hyperparams::Forest(_) => {
                for t in &self.trees {
                    for (o, p) in out.iter_mut().zip(t.predict(row)) {
                        *o += p;
                    }
                }
                let n = self.trees.len() as f64;
                out.iter_mut().for_each(|o| *o /= n);
            }
            Hyperparams::Gbt(_) => {
                let mut scores = [0.0; K];
                for (i, t) in self.trees.iter().enumerate() {
                    scores[i % K] += t.predict(row)[0];
                }
                gbt::softmax_into(&scores, &mut out);
            }
        }
        out
    }

    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        self.check_width(x)?;
        let mut out = Matrix::zeros(x.nrows(), K);
        for (i, row) in x.rows_iter().enumerate() {
            out.row_mut(i).copy_from_slice(&self.predict_row(row));
        }
        Ok(out)
    }

    pub fn predict(&self, x: &Matrix) -> Result<Vec<GaitClass>> {
        self.check_width(x)?;
        Ok(x.rows_iter().map(|row| self.predict_class(row)).collect())
    }

    pub fn predict_class(&self, row: &[f64]) -> GaitClass {
        self.classes[argmax(&self.predict_row(row))]
    }

    /// Feature indices referenced by any split.
    pub fn used_features(&self) -> BTreeSet<usize> {
        self.trees.iter().flat_map(|t| t.features()).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<EnsembleModel> {
        let m: EnsembleModel = serde_json::from_str(s)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::Schema(format!(
                "model format version {} (expected {MODEL_FORMAT_VERSION})",
                m.format_version
            )));
        }
        if m.classes.len() != K {
            return Err(Error::Schema(format!("model lists {} classes", m.classes.len())));
        }
        for t in &m.trees {
            for node in &t.nodes {
                if let Node::Split { feature, left, right, .. } = node {
                    let bad_child = *left as usize >= t.nodes.len() || *right as usize >= t.nodes.len();
                    if *feature as usize >= m.feature_count || bad_child {
                        return Err(Error::Schema("model tree references out-of-range index".into()));
                    }
                }
            }
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<EnsembleModel> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        EnsembleModel::from_json(&s)
    }
}
