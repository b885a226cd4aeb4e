use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::Matrix;

/// Ridge regression on standardized features with an unpenalized intercept.
///
/// Minimizes `mean((y - Xw - b)^2) + lambda * |beta|^2` where `beta` are the
/// coefficients of the standardized design. Coefficients are stored back on
/// the original feature scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRidge {
    pub lambda: f64,
    pub intercept: f64,
    pub weights: Vec<f64>,
}

impl LinearRidge {
    pub fn fit(x: &Matrix, y: &[f64], rows: &[usize], lambda: f64) -> Self {
        let n = rows.len() as f64;
        let p = x.n_cols();
        let (means, scales) = super::column_moments(x, rows);
        let y_mean = rows.iter().map(|&i| y[i]).sum::<f64>() / n;

        let mut gram = DMatrix::<f64>::zeros(p, p);
        let mut rhs = DVector::<f64>::zeros(p);
        let mut z = vec![0.0; p];
        for &i in rows {
            for j in 0..p {
                z[j] = (x.get(i, j) - means[j]) / scales[j];
            }
            let yc = y[i] - y_mean;
            for a in 0..p {
                rhs[a] += z[a] * yc;
                for b in 0..=a {
                    gram[(a, b)] += z[a] * z[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                gram[(b, a)] = gram[(a, b)];
            }
        }
        gram /= n;
        rhs /= n;
        for a in 0..p {
            gram[(a, a)] += lambda;
        }

        let beta = match gram.clone().cholesky() {
            Some(chol) => chol.solve(&rhs),
            None => gram.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(p)),
        };
        let weights: Vec<f64> = (0..p).map(|j| beta[j] / scales[j]).collect();
        let intercept = y_mean - weights.iter().zip(&means).map(|(w, m)| w * m).sum::<f64>();
        LinearRidge {
            lambda,
            intercept,
            weights,
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .weights
                .iter()
                .zip(row)
                .map(|(w, v)| w * v)
                .sum::<f64>()
    }
}
