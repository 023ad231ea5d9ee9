//! Seeded random hyperparameter search scored on subject-grouped inner folds.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::weighted_f1;
use crate::error::{Error, Result};
use crate::learners::{train, ForestParams, GbtParams, Hyperparams, MaxFeatures, ModelKind};
use crate::matrix::Matrix;
use crate::pose::GaitClass;
use crate::seed;

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntRange {
    pub lo: usize,
    pub hi: usize,
}

/// Inclusive real range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloatRange {
    pub lo: f64,
    pub hi: f64,
}

impl IntRange {
    pub fn new(lo: usize, hi: usize) -> Self {
        IntRange { lo, hi }
    }

    fn draw(self, rng: &mut impl Rng) -> usize {
        rng.gen_range(self.lo..=self.hi)
    }
}

impl FloatRange {
    pub fn new(lo: f64, hi: f64) -> Self {
        FloatRange { lo, hi }
    }

    fn draw(self, rng: &mut impl Rng) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        rng.gen_range(self.lo..=self.hi)
    }

    fn draw_log(self, rng: &mut impl Rng) -> f64 {
        if self.lo == self.hi {
            return self.lo;
        }
        rng.gen_range(self.lo.ln()..=self.hi.ln()).exp().clamp(self.lo, self.hi)
    }
}

impl fmt::Display for IntRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

impl fmt::Display for FloatRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.lo, self.hi)
    }
}

/// Parses `lo..hi` or a single value `v` (meaning `v..v`).
fn parse_bounds<T: FromStr + Copy>(key: &str, s: &str) -> Result<(T, T)> {
    let parse = |v: &str| v.trim().parse::<T>().map_err(|_| Error::Config(format!("{key}: cannot parse range '{s}'")));
    match s.split_once("..") {
        Some((a, b)) => Ok((parse(a)?, parse(b)?)),
        None => parse(s).map(|v| (v, v)),
    }
}

fn check_int(name: &str, r: IntRange, min: usize) -> Result<()> {
    if r.lo > r.hi || r.lo < min {
        return Err(Error::Config(format!("{name} range {r} is empty or below {min}")));
    }
    Ok(())
}

fn check_float(name: &str, r: FloatRange, lo_ok: impl Fn(f64) -> bool, hi_max: f64) -> Result<()> {
    if !(r.lo <= r.hi) || !lo_ok(r.lo) || r.hi > hi_max {
        return Err(Error::Config(format!("{name} range {r} is empty or out of bounds")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtSpace {
    pub max_depth: IntRange,
    /// Sampled log-uniformly.
    pub learning_rate: FloatRange,
    pub n_estimators: IntRange,
    pub min_child_weight: FloatRange,
    pub subsample: FloatRange,
    pub colsample_bytree: FloatRange,
}

impl Default for GbtSpace {
    fn default() -> Self {
        GbtSpace {
            max_depth: IntRange::new(2, 10),
            learning_rate: FloatRange::new(0.01, 0.3),
            n_estimators: IntRange::new(50, 400),
            min_child_weight: FloatRange::new(1.0, 10.0),
            subsample: FloatRange::new(0.5, 1.0),
            colsample_bytree: FloatRange::new(0.5, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestSpace {
    pub n_estimators: IntRange,
    pub max_depth: IntRange,
    /// Adds "no depth limit" as one more equally likely depth choice.
    pub unlimited_depth: bool,
    pub min_samples_split: IntRange,
    pub min_samples_leaf: IntRange,
    pub max_features: Vec<MaxFeatures>,
}

impl Default for ForestSpace {
    fn default() -> Self {
        ForestSpace {
            n_estimators: IntRange::new(100, 500),
            max_depth: IntRange::new(3, 20),
            unlimited_depth: true,
            min_samples_split: IntRange::new(2, 10),
            min_samples_leaf: IntRange::new(1, 5),
            max_features: vec![MaxFeatures::Sqrt, MaxFeatures::Log2, MaxFeatures::Fraction(0.3)],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SearchSpace {
    Forest(ForestSpace),
    Gbt(GbtSpace),
}

impl SearchSpace {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Forest => SearchSpace::Forest(ForestSpace::default()),
            ModelKind::Gbt => SearchSpace::Gbt(GbtSpace::default()),
        }
    }

    /// Space containing exactly `params`.
    pub fn point(params: &Hyperparams) -> Self {
        match *params {
            Hyperparams::Gbt(p) => SearchSpace::Gbt(GbtSpace {
                max_depth: IntRange::new(p.max_depth, p.max_depth),
                learning_rate: FloatRange::new(p.learning_rate, p.learning_rate),
                n_estimators: IntRange::new(p.n_estimators, p.n_estimators),
                min_child_weight: FloatRange::new(p.min_child_weight, p.min_child_weight),
                subsample: FloatRange::new(p.subsample, p.subsample),
                colsample_bytree: FloatRange::new(p.colsample_bytree, p.colsample_bytree),
            }),
            Hyperparams::Forest(p) => {
                let depth = p.max_depth.unwrap_or(0);
                SearchSpace::Forest(ForestSpace {
                    n_estimators: IntRange::new(p.n_estimators, p.n_estimators),
                    // an empty depth range plus the unlimited flag encodes "no limit"
                    max_depth: if p.max_depth.is_some() { IntRange::new(depth, depth) } else { IntRange::new(1, 0) },
                    unlimited_depth: p.max_depth.is_none(),
                    min_samples_split: IntRange::new(p.min_samples_split, p.min_samples_split),
                    min_samples_leaf: IntRange::new(p.min_samples_leaf, p.min_samples_leaf),
                    max_features: vec![p.max_features],
                })
            }
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            SearchSpace::Forest(_) => ModelKind::Forest,
            SearchSpace::Gbt(_) => ModelKind::Gbt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SearchSpace::Gbt(s) => {
                check_int("max_depth", s.max_depth, 1)?;
                check_int("n_estimators", s.n_estimators, 1)?;
                check_float("learning_rate", s.learning_rate, |v| v > 0.0, 1.0)?;
                check_float("min_child_weight", s.min_child_weight, |v| v >= 0.0, f64::MAX)?;
                check_float("subsample", s.subsample, |v| v > 0.0, 1.0)?;
                check_float("colsample_bytree", s.colsample_bytree, |v| v > 0.0, 1.0)?;
            }
            SearchSpace::Forest(s) => {
                check_int("n_estimators", s.n_estimators, 1)?;
                if !s.unlimited_depth {
                    check_int("max_depth", s.max_depth, 1)?;
                } else if s.max_depth.lo == 0 && s.max_depth.hi >= s.max_depth.lo {
                    return Err(Error::Config("forest max_depth must be at least 1".into()));
                }
                check_int("min_samples_split", s.min_samples_split, 2)?;
                check_int("min_samples_leaf", s.min_samples_leaf, 1)?;
                if s.max_features.is_empty() {
                    return Err(Error::Config("max_features has no choices".into()));
                }
                for m in &s.max_features {
                    if let MaxFeatures::Fraction(f) = m {
                        if !(*f > 0.0 && *f <= 1.0) {
                            return Err(Error::Config(format!("max_features fraction {f} outside (0, 1]")));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Hyperparams {
        match self {
            SearchSpace::Gbt(s) => Hyperparams::Gbt(GbtParams {
                max_depth: s.max_depth.draw(rng),
                learning_rate: s.learning_rate.draw_log(rng),
                n_estimators: s.n_estimators.draw(rng),
                min_child_weight: s.min_child_weight.draw(rng),
                subsample: s.subsample.draw(rng),
                colsample_bytree: s.colsample_bytree.draw(rng),
            }),
            SearchSpace::Forest(s) => {
                let bounded = if s.max_depth.lo <= s.max_depth.hi { s.max_depth.hi - s.max_depth.lo + 1 } else { 0 };
                let choice = rng.gen_range(0..bounded + usize::from(s.unlimited_depth));
                Hyperparams::Forest(ForestParams {
                    n_estimators: s.n_estimators.draw(rng),
                    max_depth: (choice < bounded).then_some(s.max_depth.lo + choice),
                    min_samples_split: s.min_samples_split.draw(rng),
                    min_samples_leaf: s.min_samples_leaf.draw(rng),
                    max_features: s.max_features[rng.gen_range(0..s.max_features.len())],
                })
            }
        }
    }

    /// Overrides one field from text, e.g. `max_depth=2..6`,
    /// `learning_rate=0.1`, `max_features=sqrt,0.3`, `max_depth=3..20,unlimited`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match self {
            SearchSpace::Gbt(s) => {
                let float = |v: &str| parse_bounds::<f64>(key, v).map(|(lo, hi)| FloatRange::new(lo, hi));
                let int = |v: &str| parse_bounds::<usize>(key, v).map(|(lo, hi)| IntRange::new(lo, hi));
                match key {
                    "max_depth" => s.max_depth = int(value)?,
                    "learning_rate" => s.learning_rate = float(value)?,
                    "n_estimators" => s.n_estimators = int(value)?,
                    "min_child_weight" => s.min_child_weight = float(value)?,
                    "subsample" => s.subsample = float(value)?,
                    "colsample_bytree" => s.colsample_bytree = float(value)?,
                    _ => return Err(Error::Config(format!("unknown gbt search key '{key}'"))),
                }
            }
            SearchSpace::Forest(s) => {
                let int = |v: &str| parse_bounds::<usize>(key, v).map(|(lo, hi)| IntRange::new(lo, hi));
                match key {
                    "n_estimators" => s.n_estimators = int(value)?,
                    "max_depth" => {
                        let mut unlimited = false;
                        let mut range = IntRange::new(1, 0);
                        for part in value.split(',').map(str::trim) {
                            if part == "unlimited" {
                                unlimited = true;
                            } else {
                                range = int(part)?;
                            }
                        }
                        s.max_depth = range;
                        s.unlimited_depth = unlimited;
                    }
                    "min_samples_split" => s.min_samples_split = int(value)?,
                    "min_samples_leaf" => s.min_samples_leaf = int(value)?,
                    "max_features" => {
                        s.max_features = value
                            .split(',')
                            .map(|p| match p.trim() {
                                "sqrt" => Ok(MaxFeatures::Sqrt),
                                "log2" => Ok(MaxFeatures::Log2),
                                f => f
                                    .parse()
                                    .map(MaxFeatures::Fraction)
                                    .map_err(|_| Error::Config(format!("max_features: cannot parse '{f}'"))),
                            })
                            .collect::<Result<_>>()?;
                    }
                    _ => return Err(Error::Config(format!("unknown forest search key '{key}'"))),
                }
            }
        }
        Ok(())
    }
}

/// Training and validation data of one inner fold, already selected and
/// balanced on its own training subjects.
#[derive(Debug, Clone)]
pub struct PreparedFold {
    pub train_x: Matrix,
    pub train_y: Vec<GaitClass>,
    pub val_x: Matrix,
    pub val_y: Vec<GaitClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub params: Hyperparams,
    /// Mean window-level weighted F1 over the inner folds.
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub best: Hyperparams,
    /// Distinct configurations in sampling order.
    pub trials: Vec<TrialRecord>,
}

/// Draws `budget` configurations, scores each distinct one on every inner
/// fold and returns the first of the best-scoring ones.
pub fn tune(folds: &[PreparedFold], space: &SearchSpace, budget: usize, seed: u64) -> Result<TuneResult> {
    if budget == 0 {
        return Err(Error::Config("search budget must be at least 1".into()));
    }
    if folds.is_empty() {
        return Err(Error::Config("tuning needs at least one inner fold".into()));
    }
    space.validate()?;
    let mut rng = seed::rng(seed::derive(seed, "search"));
    let mut candidates: Vec<Hyperparams> = Vec::new();
    for _ in 0..budget {
        let p = space.sample(&mut rng);
        if !candidates.contains(&p) {
            candidates.push(p);
        }
    }
    let train_seed = seed::derive(seed, "trial");
    let jobs: Vec<(usize, usize)> = (0..candidates.len()).flat_map(|t| (0..folds.len()).map(move |f| (t, f))).collect();
    let scores: Vec<f64> = jobs
        .par_iter()
        .map(|&(t, f)| {
            let fold = &folds[f];
            let model = train(&fold.train_x, &fold.train_y, &candidates[t], seed::derive_index(train_seed, t as u64))?;
            weighted_f1(&fold.val_y, &model.predict(&fold.val_x)?)
        })
        .collect::<Result<_>>()?;
    let trials: Vec<TrialRecord> = candidates
        .into_iter()
        .enumerate()
        .map(|(t, params)| TrialRecord {
            params,
            score: scores[t * folds.len()..(t + 1) * folds.len()].iter().sum::<f64>() / folds.len() as f64,
        })
        .collect();
    let mut best = 0;
    for (i, t) in trials.iter().enumerate() {
        if t.score > trials[best].score {
            best = i;
        }
    }
    Ok(TuneResult {
        best: trials[best].params,
        trials,
    })
}
