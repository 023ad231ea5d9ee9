//! SMOTE oversampling to the majority-class count.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::pose::GaitClass;
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BalancePlan {
    pub k_neighbors: usize,
    pub seed: u64,
}

impl BalancePlan {
    pub fn new(seed: u64) -> Self {
        BalancePlan { k_neighbors: 5, seed }
    }
}

/// Parents and interpolation weight of one synthetic row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRow {
    pub base: usize,
    pub neighbor: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Balanced {
    /// Original rows followed by synthetic rows.
    pub x: Matrix,
    pub y: Vec<GaitClass>,
    /// `provenance[i]` describes row `n_original + i`.
    pub provenance: Vec<SyntheticRow>,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum()
}

pub fn smote(x: &Matrix, y: &[GaitClass], plan: &BalancePlan) -> Result<Balanced> {
    if x.nrows() != y.len() {
        return Err(Error::Shape {
            expected: y.len(),
            got: x.nrows(),
        });
    }
    if plan.k_neighbors == 0 {
        return Err(Error::Config("k_neighbors must be at least 1".into()));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); GaitClass::COUNT];
    for (i, c) in y.iter().enumerate() {
        members[c.index()].push(i);
    }
    let target = members.iter().map(Vec::len).max().unwrap_or(0);

    let mut out = x.clone();
    let mut labels = y.to_vec();
    let mut provenance = Vec::new();
    let mut rng = seed::rng(plan.seed);
    let mut synthetic = vec![0.0; x.ncols()];

    for (ci, rows) in members.iter().enumerate() {
        if rows.is_empty() || rows.len() == target {
            continue;
        }
        let class = GaitClass::from_index(ci).expect("class index");
        if rows.len() < 2 {
            return Err(Error::CannotInterpolate {
                class: class.to_string(),
            });
        }
        let k = plan.k_neighbors.min(rows.len() - 1);
        // neighbor lists computed on first pick of each member
        let mut neighbors: Vec<Option<Vec<usize>>> = vec![None; rows.len()];
        for _ in rows.len()..target {
            let a = rng.gen_range(0..rows.len());
            let near = neighbors[a].get_or_insert_with(|| {
                let base = x.row(rows[a]);
                let mut d: Vec<(f64, usize)> = rows
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != a)
                    .map(|(_, &r)| (squared_distance(base, x.row(r)), r))
                    .collect();
                d.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)));
                d.truncate(k);
                d.into_iter().map(|(_, r)| r).collect()
            });
            let b = near[rng.gen_range(0..near.len())];
            let mut lambda = 0.0;
            while lambda == 0.0 {
                lambda = rng.gen::<f64>();
            }
            let (ra, rb) = (x.row(rows[a]), x.row(b));
            for ((s, &p), &q) in synthetic.iter_mut().zip(ra).zip(rb) {
                // clamp keeps rounding inside the parents' segment
                *s = (p + lambda * (q - p)).clamp(p.min(q), p.max(q));
            }
            out.push_row(&synthetic)?;
            labels.push(class);
            provenance.push(SyntheticRow {
                base: rows[a],
                neighbor: b,
                lambda,
            });
        }
    }
    Ok(Balanced {
        x: out,
        y: labels,
        provenance,
    })
}
