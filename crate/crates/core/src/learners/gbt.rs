//! Gradient-boosted trees with a softmax objective and exact greedy splits.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{columns, midpoint, Node, Tree};
use crate::matrix::Matrix;
use crate::pose::GaitClass;
use crate::seed;

const K: usize = GaitClass::COUNT;
/// L2 penalty on leaf values.
pub const LAMBDA: f64 = 1.0;
const MIN_GAIN: f64 = 1e-6;
/// Gradient statistics are summed as fixed-point integers so that node
/// sums are exact and independent of row order.
const FIXED_ONE: f64 = (1u64 << 40) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub max_depth: usize,
    pub learning_rate: f64,
    pub n_estimators: usize,
    /// Minimum hessian sum in each child.
    pub min_child_weight: f64,
    pub subsample: f64,
    pub colsample_bytree: f64,
}

/// XGBoost's own defaults.
impl Default for GbtParams {
    fn default() -> Self {
        GbtParams {
            max_depth: 6,
            learning_rate: 0.3,
            n_estimators: 100,
            min_child_weight: 1.0,
            subsample: 1.0,
            colsample_bytree: 1.0,
        }
    }
}

pub(crate) struct GbtFit {
    /// Round-major: tree `round * K + class`.
    pub trees: Vec<Tree>,
    pub loss_trace: Vec<f64>,
}

pub(crate) fn softmax_into(scores: &[f64], out: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, s) in out.iter_mut().zip(scores) {
        *o = (s - max).exp();
        total += *o;
    }
    out.iter_mut().for_each(|o| *o /= total);
}

fn to_fixed(v: f64) -> i64 {
    (v * FIXED_ONE).round() as i64
}

fn from_fixed(v: i64) -> f64 {
    v as f64 * (1.0 / FIXED_ONE)
}

/// Per-feature ascending row orders with their values, shared by every tree
/// of a fit.
struct Presorted {
    n: usize,
    rows: Vec<u32>,
    vals: Vec<f64>,
    /// Lowest feature with the same row order and tie pattern. Such features
    /// offer identical partitions, so only the lowest one can ever win a split.
    rep: Vec<usize>,
}

impl Presorted {
    fn new(cols: &[f64], n: usize, nf: usize) -> Self {
        let sorted: Vec<(Vec<u32>, Vec<f64>)> = (0..nf)
            .into_par_iter()
            .map(|f| {
                let col = &cols[f * n..(f + 1) * n];
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]).then(a.cmp(&b)));
                let vals = idx.iter().map(|&r| col[r as usize]).collect();
                (idx, vals)
            })
            .collect();
        let mut rep: Vec<usize> = (0..nf).collect();
        let mut seen: std::collections::HashMap<(&[u32], Vec<bool>), usize> = Default::default();
        for (f, (idx, vals)) in sorted.iter().enumerate() {
            let ties: Vec<bool> = vals.windows(2).map(|w| w[0] == w[1]).collect();
            rep[f] = *seen.entry((idx.as_slice(), ties)).or_insert(f);
        }
        let mut rows = Vec::with_capacity(nf * n);
        let mut vals = Vec::with_capacity(nf * n);
        for (r, v) in sorted {
            rows.extend(r);
            vals.extend(v);
        }
        Presorted { n, rows, vals, rep }
    }

    fn rows(&self, f: usize) -> &[u32] {
        &self.rows[f * self.n..(f + 1) * self.n]
    }

    fn vals(&self, f: usize) -> &[f64] {
        &self.vals[f * self.n..(f + 1) * self.n]
    }

    /// Whether feature `f` has at least two distinct values.
    fn varies(&self, f: usize) -> bool {
        let v = self.vals(f);
        v.first() != v.last()
    }
}

struct Grower<'a> {
    cols: &'a [f64],
    n: usize,
    feats: &'a [usize],
    gh: &'a [[i64; 2]],
    params: &'a GbtParams,
    min_child: i64,
}

struct Pending {
    id: usize,
    start: usize,
    end: usize,
    depth: usize,
    g: i64,
    h: i64,
}

/// Split candidate; its score is `num / den`, compared by cross-multiplication.
struct Best {
    local: usize,
    threshold: f64,
    num: f64,
    den: f64,
    g_left: i64,
    h_left: i64,
}

impl Best {
    /// Loss reduction relative to keeping the node whole.
    fn gain(&self, g: i64, h: i64) -> f64 {
        let parent = from_fixed(g).powi(2) / (from_fixed(h) + LAMBDA);
        0.5 * (self.num / self.den - parent)
    }

    fn beats(&self, other: &Option<Best>) -> bool {
        other.as_ref().is_none_or(|b| self.num * b.den > b.num * self.den)
    }
}

/// Best boundary of one feature, given its node rows in ascending value order.
fn scan(
    mut pairs: impl Iterator<Item = (u32, f64)>,
    gh: &[[i64; 2]],
    node: &Pending,
    min_child: i64,
    local: usize,
) -> Option<Best> {
    let (r0, mut prev) = pairs.next()?;
    let [mut gl, mut hl] = gh[r0 as usize];
    let (mut best_num, mut best_den) = (-1.0, 1.0);
    let (mut at, mut best_gl, mut best_hl) = (f64::NAN, 0, 0);
    let mut upper = f64::NAN;
    let (g_node, h_node) = (from_fixed(node.g), from_fixed(node.h) + 2.0 * LAMBDA);
    for (r, v) in pairs {
        if v != prev && hl >= min_child {
            if node.h - hl < min_child {
                break;
            }
            let (gl_f, hl_f) = (from_fixed(gl), from_fixed(hl) + LAMBDA);
            let (gr_f, hr_f) = (g_node - gl_f, h_node - hl_f);
            let num = gl_f * gl_f * hr_f + gr_f * gr_f * hl_f;
            let den = hl_f * hr_f;
            if num * best_den > best_num * den {
                (best_num, best_den) = (num, den);
                (at, upper, best_gl, best_hl) = (prev, v, gl, hl);
            }
        }
        let [g, h] = gh[r as usize];
        gl += g;
        hl += h;
        prev = v;
    }
    (best_num >= 0.0).then(|| Best {
        local,
        threshold: midpoint(at, upper),
        num: best_num,
        den: best_den,
        g_left: best_gl,
        h_left: best_hl,
    })
}

impl Grower<'_> {
    fn leaf(&self, g: i64, h: i64) -> Node {
        Node::Leaf(vec![
            -from_fixed(g) / (from_fixed(h) + LAMBDA) * self.params.learning_rate,
        ])
    }

    fn splittable(&self, node: &Pending) -> bool {
        node.depth < self.params.max_depth
            && node.end - node.start >= 2
            && node.h >= 2 * self.min_child
            && !self.feats.is_empty()
    }

    fn accept(&self, best: Option<Best>, node: &Pending) -> Option<Best> {
        best.filter(|b| b.gain(node.g, node.h) > MIN_GAIN)
    }

    fn col(&self, f: usize) -> &[f64] {
        &self.cols[f * self.n..(f + 1) * self.n]
    }

    /// `in_sample` marks the `m` rows drawn this round.
    fn grow(&self, pre: &Presorted, in_sample: &[bool], m: usize) -> Tree {
        let (mut g_root, mut h_root) = (0i64, 0i64);
        for (r, _) in in_sample.iter().enumerate().filter(|(_, s)| **s) {
            g_root += self.gh[r][0];
            h_root += self.gh[r][1];
        }
        let root = Pending {
            id: 0,
            start: 0,
            end: m,
            depth: 0,
            g: g_root,
            h: h_root,
        };
        if !self.splittable(&root) {
            return Tree {
                nodes: vec![self.leaf(root.g, root.h)],
            };
        }
        // the root reads the shared presorted lists without copying
        let full = m == self.n;
        let mut best = None;
        for (local, &f) in self.feats.iter().enumerate() {
            let pairs = pre
                .rows(f)
                .iter()
                .copied()
                .zip(pre.vals(f).iter().copied())
                .filter(|&(r, _)| full || in_sample[r as usize]);
            if let Some(c) = scan(pairs, self.gh, &root, self.min_child, local) {
                if c.beats(&best) {
                    best = Some(c);
                }
            }
        }
        let Some(root_split) = self.accept(best, &root) else {
            return Tree {
                nodes: vec![self.leaf(root.g, root.h)],
            };
        };

        let nf = self.feats.len();
        let mut goes_left = vec![false; self.n];
        let split_col = self.col(self.feats[root_split.local]);
        let mut n_left = 0;
        for (r, s) in in_sample.iter().enumerate() {
            if *s && split_col[r] <= root_split.threshold {
                goes_left[r] = true;
                n_left += 1;
            }
        }
        // per-feature sorted segments, already partitioned by the root split
        let mut order = vec![0u32; nf * m];
        for (local, &f) in self.feats.iter().enumerate().filter(|_| self.params.max_depth > 1) {
            let seg = &mut order[local * m..(local + 1) * m];
            let (mut l, mut r) = (0, n_left);
            for &row in pre.rows(f) {
                if !(full || in_sample[row as usize]) {
                    continue;
                }
                if goes_left[row as usize] {
                    seg[l] = row;
                    l += 1;
                } else {
                    seg[r] = row;
                    r += 1;
                }
            }
        }

        let mut nodes = vec![
            Node::Split {
                feature: self.feats[root_split.local] as u32,
                threshold: root_split.threshold,
                left: 1,
                right: 2,
            },
            Node::Leaf(Vec::new()),
            Node::Leaf(Vec::new()),
        ];
        let mut scratch: Vec<u32> = Vec::with_capacity(m);
        let mut queue = std::collections::VecDeque::from([
            Pending {
                id: 1,
                start: 0,
                end: n_left,
                depth: 1,
                g: root_split.g_left,
                h: root_split.h_left,
            },
            Pending {
                id: 2,
                start: n_left,
                end: m,
                depth: 1,
                g: root.g - root_split.g_left,
                h: root.h - root_split.h_left,
            },
        ]);
        while let Some(node) = queue.pop_front() {
            let mut best = None;
            if self.splittable(&node) {
                for (local, &f) in self.feats.iter().enumerate() {
                    let col = self.col(f);
                    let seg = &order[local * m + node.start..local * m + node.end];
                    let pairs = seg.iter().map(|&r| (r, col[r as usize]));
                    if let Some(c) = scan(pairs, self.gh, &node, self.min_child, local) {
                        if c.beats(&best) {
                            best = Some(c);
                        }
                    }
                }
            }
            let Some(b) = self.accept(best, &node) else {
                nodes[node.id] = self.leaf(node.g, node.h);
                continue;
            };
            let f = self.feats[b.local];
            let col = self.col(f);
            let mut n_left = 0;
            for &r in &order[b.local * m + node.start..b.local * m + node.end] {
                let left = col[r as usize] <= b.threshold;
                goes_left[r as usize] = left;
                n_left += usize::from(left);
            }
            // stable partition of every feature's segment; children at the
            // depth limit become leaves and need no ordering
            let children_split = node.depth + 1 < self.params.max_depth;
            for local in (0..nf).filter(|_| children_split) {
                let seg = &mut order[local * m + node.start..local * m + node.end];
                scratch.clear();
                let mut w = 0;
                for i in 0..seg.len() {
                    let r = seg[i];
                    if goes_left[r as usize] {
                        seg[w] = r;
                        w += 1;
                    } else {
                        scratch.push(r);
                    }
                }
                seg[w..].copy_from_slice(&scratch);
            }
            let left = nodes.len();
            nodes.push(Node::Leaf(Vec::new()));
            nodes.push(Node::Leaf(Vec::new()));
            nodes[node.id] = Node::Split {
                feature: f as u32,
                threshold: b.threshold,
                left: left as u32,
                right: left as u32 + 1,
            };
            queue.push_back(Pending {
                id: left,
                start: node.start,
                end: node.start + n_left,
                depth: node.depth + 1,
                g: b.g_left,
                h: b.h_left,
            });
            queue.push_back(Pending {
                id: left + 1,
                start: node.start + n_left,
                end: node.end,
                depth: node.depth + 1,
                g: node.g - b.g_left,
                h: node.h - b.h_left,
            });
        }
        Tree { nodes }
    }
}

fn log_loss(scores: &[f64], y: &[usize]) -> f64 {
    let mut p = [0.0; K];
    let mut total = 0.0;
    for (s, &c) in scores.chunks_exact(K).zip(y) {
        softmax_into(s, &mut p);
        total -= p[c].max(f64::MIN_POSITIVE).ln();
    }
    total / y.len() as f64
}

pub(crate) fn fit(x: &Matrix, y: &[usize], params: &GbtParams, seed: u64) -> GbtFit {
    let (n, nf) = (x.nrows(), x.ncols());
    let cols = columns(x);
    let pre = Presorted::new(&cols, n, nf);
    let min_child = to_fixed(params.min_child_weight);
    let mut scores = vec![0.0; n * K];
    let mut trees = Vec::with_capacity(params.n_estimators * K);
    let mut loss_trace = Vec::with_capacity(params.n_estimators);
    let mut gh = vec![vec![[0i64; 2]; n]; K];
    let mut p = [0.0; K];

    for round in 0..params.n_estimators {
        let mut rng = seed::rng(seed::derive_index(seed, round as u64));
        let mut in_sample = vec![true; n];
        let mut m = n;
        if params.subsample < 1.0 {
            m = ((params.subsample * n as f64).round() as usize).clamp(1, n);
            in_sample = vec![false; n];
            for i in sample(&mut rng, n, m) {
                in_sample[i] = true;
            }
        }
        let feats: Vec<usize> = if params.colsample_bytree < 1.0 {
            let k = ((params.colsample_bytree * nf as f64).round() as usize).clamp(1, nf.max(1));
            let mut f = sample(&mut rng, nf, k.min(nf)).into_vec();
            f.sort_unstable();
            f
        } else {
            (0..nf).collect()
        };
        let feats: Vec<usize> = feats
            .into_iter()
            .filter(|&f| pre.varies(f))
            .scan(std::collections::HashSet::new(), |reps, f| Some(reps.insert(pre.rep[f]).then_some(f)))
            .flatten()
            .collect();

        for i in 0..n {
            softmax_into(&scores[i * K..(i + 1) * K], &mut p);
            for c in 0..K {
                let target = if y[i] == c { 1.0 } else { 0.0 };
                gh[c][i] = [
                    to_fixed(p[c] - target),
                    to_fixed((2.0 * p[c] * (1.0 - p[c])).max(1e-16)),
                ];
            }
        }

        let round_trees: Vec<Tree> = (0..K)
            .into_par_iter()
            .map(|c| {
                Grower {
                    cols: &cols,
                    n,
                    feats: &feats,
                    gh: &gh[c],
                    params,
                    min_child,
                }
                .grow(&pre, &in_sample, m)
            })
            .collect();

        for i in 0..n {
            let row = x.row(i);
            for (c, t) in round_trees.iter().enumerate() {
                scores[i * K + c] += t.predict(row)[0];
            }
        }
        loss_trace.push(log_loss(&scores, y));
        trees.extend(round_trees);
    }
    GbtFit { trees, loss_trace }
}
