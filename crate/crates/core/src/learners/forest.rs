//! Random forest with Gini splits on bootstrap samples.

use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{columns, midpoint, Node, Tree};
use crate::matrix::Matrix;
use crate::pose::GaitClass;
use crate::seed;

const K: usize = GaitClass::COUNT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    Sqrt,
    Log2,
    Fraction(f64),
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        let k = match self {
            MaxFeatures::Sqrt => (n_features as f64).sqrt() as usize,
            MaxFeatures::Log2 => (n_features as f64).log2() as usize,
            MaxFeatures::Fraction(f) => (f * n_features as f64) as usize,
        };
        k.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    /// `None` grows until the other stopping rules apply.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_estimators: 100,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Sqrt,
        }
    }
}

struct Grower<'a> {
    cols: &'a [f64],
    n: usize,
    n_features: usize,
    y: &'a [usize],
    params: &'a ForestParams,
}

struct Best {
    feature: usize,
    threshold: f64,
    score: f64,
}

impl Grower<'_> {
    fn value(&self, f: usize, row: u32) -> f64 {
        self.cols[f * self.n + row as usize]
    }

    fn leaf(&self, rows: &[u32]) -> Node {
        let mut counts = [0usize; K];
        for &r in rows {
            counts[self.y[r as usize]] += 1;
        }
        let total = rows.len() as f64;
        Node::Leaf(counts.iter().map(|&c| c as f64 / total).collect())
    }

    fn best_split(&self, rows: &mut [u32], rng: &mut ChaCha8Rng) -> Option<Best> {
        if self.n_features == 0 {
            return None;
        }
        let k = self.params.max_features.resolve(self.n_features);
        let mut feats = sample(rng, self.n_features, k).into_vec();
        feats.sort_unstable();
        let n = rows.len();
        let min_leaf = self.params.min_samples_leaf;
        let mut total = [0usize; K];
        for &r in rows.iter() {
            total[self.y[r as usize]] += 1;
        }
        let mut best: Option<Best> = None;
        for &f in &feats {
            rows.sort_by(|&a, &b| self.value(f, a).total_cmp(&self.value(f, b)).then(a.cmp(&b)));
            let mut left = [0usize; K];
            // Σ count² on each side; Gini comparison reduces to these
            let mut sq_left = 0usize;
            let mut sq_right: usize = total.iter().map(|c| c * c).sum();
            for i in 0..n - 1 {
                let c = self.y[rows[i] as usize];
                sq_left += 2 * left[c] + 1;
                sq_right -= 2 * (total[c] - left[c]) - 1;
                left[c] += 1;
                let nl = i + 1;
                let nr = n - nl;
                if nl < min_leaf {
                    continue;
                }
                if nr < min_leaf {
                    break;
                }
                let (v, vn) = (self.value(f, rows[i]), self.value(f, rows[i + 1]));
                if v == vn {
                    continue;
                }
                let score = sq_left as f64 / nl as f64 + sq_right as f64 / nr as f64;
                if best.as_ref().is_none_or(|b| score > b.score) {
                    best = Some(Best {
                        feature: f,
                        threshold: midpoint(v, vn),
                        score,
                    });
                }
            }
        }
        best
    }

    fn grow(&self, rows: Vec<u32>, rng: &mut ChaCha8Rng) -> Tree {
        let mut nodes = vec![Node::Leaf(Vec::new())];
        let mut stack = vec![(0usize, rows, 0usize)];
        while let Some((id, mut rows, depth)) = stack.pop() {
            let first = self.y[rows[0] as usize];
            let pure = rows.iter().all(|&r| self.y[r as usize] == first);
            let stop = pure
                || rows.len() < self.params.min_samples_split
                || rows.len() < 2 * self.params.min_samples_leaf
                || self.params.max_depth.is_some_and(|d| depth >= d);
            let split = if stop { None } else { self.best_split(&mut rows, rng) };
            match split {
                None => nodes[id] = self.leaf(&rows),
                Some(b) => {
                    let (l, r): (Vec<u32>, Vec<u32>) = rows
                        .iter()
                        .partition(|&&row| self.value(b.feature, row) <= b.threshold);
                    let left = nodes.len();
                    nodes.push(Node::Leaf(Vec::new()));
                    nodes.push(Node::Leaf(Vec::new()));
                    nodes[id] = Node::Split {
                        feature: b.feature as u32,
                        threshold: b.threshold,
                        left: left as u32,
                        right: left as u32 + 1,
                    };
                    // right pushed first so the left subtree is grown first
                    stack.push((left + 1, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
            }
        }
        Tree { nodes }
    }
}

pub(crate) fn fit(x: &Matrix, y: &[usize], params: &ForestParams, seed: u64) -> Vec<Tree> {
    let cols = columns(x);
    let n = x.nrows();
    let grower = Grower {
        cols: &cols,
        n,
        n_features: x.ncols(),
        y,
        params,
    };
    (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed::derive_index(seed, t as u64));
            let rows: Vec<u32> = (0..n).map(|_| rng.gen_range(0..n) as u32).collect();
            grower.grow(rows, &mut rng)
        })
        .collect()
}
