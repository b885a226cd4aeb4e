//! Bagged and boosted tree ensembles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{RegressionTree, TreeParams};
use crate::data::Matrix;
use crate::numeric::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<RegressionTree>,
    y_range: (f64, f64),
}

impl RandomForest {
    /// Each tree sees a bootstrap sample of `rows` and its own RNG stream
    /// derived from `seed` and the tree index, so the fit does not depend on
    /// how rayon schedules the trees.
    pub fn fit(
        x: &Matrix,
        y: &[f64],
        rows: &[usize],
        n_trees: usize,
        params: &TreeParams,
        seed: u64,
    ) -> Self {
        let trees = (0..n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
                let sample: Vec<usize> = (0..rows.len())
                    .map(|_| rows[rng.random_range(0..rows.len())])
                    .collect();
                RegressionTree::fit(x, y, &sample, params, &mut rng)
            })
            .collect();
        RandomForest {
            trees,
            y_range: super::target_range(y, rows),
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict_row(row)).sum();
        (sum / self.trees.len() as f64).clamp(self.y_range.0, self.y_range.1)
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostingParams {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub subsample: f64,
    pub tree: TreeParams,
}

/// Gradient boosting with squared-error loss: each stage fits a tree to the
/// current residuals on a row subsample and is added with shrinkage.
///
/// Predictions are clipped to the training target range, since shrunken
/// residual steps can overshoot it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    init: f64,
    learning_rate: f64,
    trees: Vec<RegressionTree>,
    y_range: (f64, f64),
}

impl GradientBoosting {
    pub fn fit(x: &Matrix, y: &[f64], rows: &[usize], params: &BoostingParams, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64;
        // Residuals are indexed like `y` so trees can keep using row ids.
        let mut fitted = vec![init; y.len()];
        let mut residual = vec![0.0; y.len()];
        let n_sub = ((rows.len() as f64 * params.subsample).round() as usize).clamp(1, rows.len());
        let mut trees = Vec::with_capacity(params.n_trees);

        for _ in 0..params.n_trees {
            for &i in rows {
                residual[i] = y[i] - fitted[i];
            }
            let sample: Vec<usize> = if n_sub == rows.len() {
                rows.to_vec()
            } else {
                let mut picked: Vec<usize> = rand::seq::index::sample(&mut rng, rows.len(), n_sub)
                    .into_iter()
                    .map(|k| rows[k])
                    .collect();
                picked.sort_unstable();
                picked
            };
            let tree = RegressionTree::fit(x, &residual, &sample, &params.tree, &mut rng);
            for &i in rows {
                fitted[i] += params.learning_rate * tree.predict_row(x.row(i));
            }
            trees.push(tree);
        }
        GradientBoosting {
            init,
            learning_rate: params.learning_rate,
            trees,
            y_range: super::target_range(y, rows),
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut f = self.init;
        for t in &self.trees {
            f += self.learning_rate * t.predict_row(row);
        }
        f.clamp(self.y_range.0, self.y_range.1)
    }
}
