//! CART regression trees with variance-reduction splits.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Number of candidate features per split; `None` means all.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl RegressionTree {
    /// Fits a tree on `rows` of `x` against `y` (indexed like the rows of `x`).
    ///
    /// `rows` may contain repeats (bootstrap samples). Feature subsampling
    /// draws from `rng` when `params.max_features` is set.
    pub fn fit<R: Rng>(
        x: &Matrix,
        y: &[f64],
        rows: &[usize],
        params: &TreeParams,
        rng: &mut R,
    ) -> Self {
        assert!(!rows.is_empty(), "fitting a tree on zero rows");
        let mut tree = RegressionTree { nodes: Vec::new() };
        tree.grow(x, y, rows.to_vec(), 0, params, rng);
        tree
    }

    fn grow<R: Rng>(
        &mut self,
        x: &Matrix,
        y: &[f64],
        rows: Vec<usize>,
        depth: usize,
        params: &TreeParams,
        rng: &mut R,
    ) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: leaf_value(y, &rows),
        });

        let min_leaf = params.min_samples_leaf.max(1);
        if depth >= params.max_depth || rows.len() < 2 * min_leaf || is_pure(y, &rows) {
            return id;
        }
        let Some(best) = best_split(x, y, &rows, params, min_leaf, rng) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| x.get(i, best.feature) <= best.threshold);
        drop(rows);
        let left = self.grow(x, y, left_rows, depth + 1, params, rng);
        let right = self.grow(x, y, right_rows, depth + 1, params, rng);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut node = 0;
        loop {
            match self.nodes[node] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[feature] <= threshold {
                        left
                    } else {
                        right
                    }
                }
            }
        }
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, Node::Leaf { .. }))
            .count()
    }
}

/// Node mean, clamped into the node's target range against rounding.
fn leaf_value(y: &[f64], rows: &[usize]) -> f64 {
    let (mut lo, mut hi, mut sum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
    for &i in rows {
        lo = lo.min(y[i]);
        hi = hi.max(y[i]);
        sum += y[i];
    }
    (sum / rows.len() as f64).clamp(lo, hi)
}

fn is_pure(y: &[f64], rows: &[usize]) -> bool {
    let first = y[rows[0]];
    rows.iter().all(|&i| y[i] == first)
}

fn best_split<R: Rng>(
    x: &Matrix,
    y: &[f64],
    rows: &[usize],
    params: &TreeParams,
    min_leaf: usize,
    rng: &mut R,
) -> Option<BestSplit> {
    let p = x.n_cols();
    let candidates: Vec<usize> = match params.max_features {
        Some(k) if k < p => {
            let mut picked = rand::seq::index::sample(rng, p, k.max(1)).into_vec();
            picked.sort_unstable();
            picked
        }
        _ => (0..p).collect(),
    };

    let n = rows.len();
    let total: f64 = rows.iter().map(|&i| y[i]).sum();
    let parent_term = total * total / n as f64;
    let mut best: Option<BestSplit> = None;
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(n);

    for &feature in &candidates {
        pairs.clear();
        pairs.extend(rows.iter().map(|&i| (x.get(i, feature), y[i])));
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs[0].0 == pairs[n - 1].0 {
            continue;
        }
        let mut left_sum = 0.0;
        for split_at in 1..n {
            left_sum += pairs[split_at - 1].1;
            if split_at < min_leaf || n - split_at < min_leaf {
                continue;
            }
            let (a, b) = (pairs[split_at - 1].0, pairs[split_at].0);
            if a == b {
                continue;
            }
            let right_sum = total - left_sum;
            let gain = left_sum * left_sum / split_at as f64
                + right_sum * right_sum / (n - split_at) as f64
                - parent_term;
            if gain > 0.0 && best.as_ref().is_none_or(|bs| gain > bs.gain) {
                let mid = a + (b - a) / 2.0;
                let threshold = if mid < b { mid } else { a };
                best = Some(BestSplit {
                    feature,
                    threshold,
                    gain,
                });
            }
        }
    }
    best
}
