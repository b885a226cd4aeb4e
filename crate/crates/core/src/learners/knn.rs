use serde::{Deserialize, Serialize};

use crate::data::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weighting {
    Uniform,
    InverseDistance,
}

impl Weighting {
    pub fn as_str(self) -> &'static str {
        match self {
            Weighting::Uniform => "uniform",
            Weighting::InverseDistance => "distance",
        }
    }
}

/// k-nearest-neighbour regression on internally standardized features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KNearest {
    k: usize,
    weighting: Weighting,
    means: Vec<f64>,
    scales: Vec<f64>,
    points: Matrix,
    targets: Vec<f64>,
    y_range: (f64, f64),
}

impl KNearest {
    pub fn fit(x: &Matrix, y: &[f64], rows: &[usize], k: usize, weighting: Weighting) -> Self {
        let (means, scales) = super::column_moments(x, rows);
        let p = x.n_cols();
        let mut values = Vec::with_capacity(rows.len() * p);
        for &i in rows {
            values.extend((0..p).map(|j| (x.get(i, j) - means[j]) / scales[j]));
        }
        KNearest {
            k: k.clamp(1, rows.len()),
            weighting,
            means,
            scales,
            points: Matrix::new(rows.len(), p, values).expect("shape"),
            targets: rows.iter().map(|&i| y[i]).collect(),
            y_range: super::target_range(y, rows),
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let query: Vec<f64> = row
            .iter()
            .zip(self.means.iter().zip(&self.scales))
            .map(|(v, (m, s))| (v - m) / s)
            .collect();
        let mut dist: Vec<(f64, usize)> = self
            .points
            .rows()
            .enumerate()
            .map(|(i, pt)| {
                let d2: f64 = pt.iter().zip(&query).map(|(a, b)| (a - b) * (a - b)).sum();
                (d2, i)
            })
            .collect();
        // (distance, index) is a total order, so ties resolve the same way every call
        let by_key = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, by_key);
            dist.truncate(self.k);
        }
        dist.sort_unstable_by(by_key);

        let value = match self.weighting {
            Weighting::Uniform => {
                dist.iter().map(|&(_, i)| self.targets[i]).sum::<f64>() / dist.len() as f64
            }
            Weighting::InverseDistance => {
                let exact: Vec<f64> = dist
                    .iter()
                    .filter(|(d2, _)| *d2 == 0.0)
                    .map(|&(_, i)| self.targets[i])
                    .collect();
                if !exact.is_empty() {
                    exact.iter().sum::<f64>() / exact.len() as f64
                } else {
                    let (mut num, mut den) = (0.0, 0.0);
                    for &(d2, i) in &dist {
                        let w = 1.0 / d2.sqrt();
                        num += w * self.targets[i];
                        den += w;
                    }
                    num / den
                }
            }
        };
        value.clamp(self.y_range.0, self.y_range.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn averages_nearest_neighbours() {
        let x = Matrix::new(5, 1, vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        let y = [0.0, 10.0, 20.0, 30.0, 40.0];
        let knn = KNearest::fit(&x, &y, &[0, 1, 2, 3, 4], 3, Weighting::Uniform);
        assert!((knn.predict_row(&[2.1]) - 20.0).abs() < 1e-12);
        assert!((knn.predict_row(&[-5.0]) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn inverse_distance_hits_training_points() {
        let x = Matrix::new(4, 1, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        let y = [5.0, 7.0, 1.0, 2.0];
        let knn = KNearest::fit(&x, &y, &[0, 1, 2, 3], 3, Weighting::InverseDistance);
        assert_eq!(knn.predict_row(&[1.0]), 7.0);
    }

    #[test]
    fn k_is_capped_by_training_size() {
        let x = Matrix::new(2, 1, vec![0.0, 1.0]).unwrap();
        let knn = KNearest::fit(&x, &[1.0, 3.0], &[0, 1], 25, Weighting::Uniform);
        assert_eq!(knn.k(), 2);
        assert_eq!(knn.predict_row(&[0.0]), 2.0);
    }
}
