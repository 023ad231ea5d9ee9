//! Axis-aligned binary decision trees shared by both ensembles.

use serde::{Deserialize, Serialize};

/// Rows with `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: u32,
        threshold: f64,
        left: u32,
        right: u32,
    },
    Leaf(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf(payload: Vec<f64>) -> Self {
        Tree {
            nodes: vec![Node::Leaf(payload)],
        }
    }

    /// Leaf payload reached by `row`.
    pub fn predict<'a>(&'a self, row: &[f64]) -> &'a [f64] {
        let mut i = 0usize;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    i = if row[*feature as usize] <= *threshold {
                        *left as usize
                    } else {
                        *right as usize
                    };
                }
                Node::Leaf(v) => return v,
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &Tree, i: usize) -> usize {
            match &t.nodes[i] {
                Node::Split { left, right, .. } => {
                    1 + walk(t, *left as usize).max(walk(t, *right as usize))
                }
                Node::Leaf(_) => 0,
            }
        }
        walk(self, 0)
    }

    pub fn features(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter_map(|n| match n {
            Node::Split { feature, .. } => Some(*feature as usize),
            Node::Leaf(_) => None,
        })
    }
}

/// Split point strictly between two adjacent distinct sorted values.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

/// Feature-major copy of a row-major matrix.
pub(crate) fn columns(x: &crate::Matrix) -> Vec<f64> {
    let (n, f) = (x.nrows(), x.ncols());
    let mut out = vec![0.0; n * f];
    for (i, row) in x.rows_iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            out[j * n + i] = v;
        }
    }
    out
}
