//! Synthetic regression benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{Dataset, Matrix};

/// Friedman #1: ten uniform features on `[0, 1]`, of which five matter:
/// `y = 10 sin(pi x1 x2) + 20 (x3 - 0.5)^2 + 10 x4 + 5 x5 + N(0, noise^2)`.
pub fn friedman1(n: usize, noise: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(0.0)).expect("noise sd");
    let p = 10;
    let mut values = Vec::with_capacity(n * p);
    let mut target = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..p).map(|_| rng.random::<f64>()).collect();
        let y = 10.0 * (std::f64::consts::PI * row[0] * row[1]).sin()
            + 20.0 * (row[2] - 0.5).powi(2)
            + 10.0 * row[3]
            + 5.0 * row[4]
            + normal.sample(&mut rng);
        values.extend_from_slice(&row);
        target.push(y);
    }
    let names = (1..=p).map(|j| format!("x{j}")).collect();
    Dataset::new(
        "friedman1",
        Matrix::new(n, p, values).expect("shape"),
        names,
        target,
        "y",
    )
    .expect("valid synthetic dataset")
}

/// Noise-free `y = 2 x1 + 3` with `x1 ~ U(-5, 5)` and an irrelevant `x2 ~ U(0, 1)`.
pub fn linear(n: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(n * 2);
    let mut target = Vec::with_capacity(n);
    for _ in 0..n {
        let x1 = rng.random_range(-5.0..5.0);
        let x2 = rng.random::<f64>();
        values.extend_from_slice(&[x1, x2]);
        target.push(2.0 * x1 + 3.0);
    }
    Dataset::new(
        "linear",
        Matrix::new(n, 2, values).expect("shape"),
        vec!["x1".into(), "x2".into()],
        target,
        "y",
    )
    .expect("valid synthetic dataset")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators_are_seeded() {
        assert_eq!(friedman1(50, 1.0, 3), friedman1(50, 1.0, 3));
        assert_ne!(friedman1(50, 1.0, 3), friedman1(50, 1.0, 4));
        let ds = linear(10, 1);
        for i in 0..10 {
            assert_eq!(ds.target[i], 2.0 * ds.features.get(i, 0) + 3.0);
        }
    }
}
