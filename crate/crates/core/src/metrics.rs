//! Agreement between the best model's profile and the Rashomon band, and the
//! rank correlation used to relate multiplicity to coverage across datasets.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::pdp::RashomonPdpResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplanationMetrics {
    pub feature_index: usize,
    pub mwci: f64,
    pub cr: f64,
    /// False for singleton Rashomon sets; such metrics stay out of
    /// cross-dataset aggregates.
    pub defined: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub rho: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub p_value: f64,
    pub n_pairs: usize,
}

/// Mean of `ci_hi - ci_lo` over the grid.
pub fn mwci(result: &RashomonPdpResult) -> Result<f64> {
    if result.ci_lo.len() != result.ci_hi.len() {
        return Err(Error::GridMismatch);
    }
    if result.ci_lo.is_empty() {
        return Err(Error::invalid("empty band"));
    }
    let total: f64 = result
        .ci_hi
        .iter()
        .zip(&result.ci_lo)
        .map(|(hi, lo)| hi - lo)
        .sum();
    Ok(total / result.ci_lo.len() as f64)
}

/// Fraction of grid points where the best curve lies in the closed band.
pub fn coverage_rate(result: &RashomonPdpResult) -> Result<f64> {
    let best = &result.best_curve;
    let m = result.grid.len();
    if best.grid != result.grid || result.ci_lo.len() != m || result.ci_hi.len() != m {
        return Err(Error::GridMismatch);
    }
    if m == 0 {
        return Err(Error::invalid("empty band"));
    }
    let covered = best
        .values
        .iter()
        .zip(result.ci_lo.iter().zip(&result.ci_hi))
        .filter(|(v, (lo, hi))| *lo <= *v && *v <= *hi)
        .count();
    Ok(covered as f64 / m as f64)
}

pub fn explanation_metrics(result: &RashomonPdpResult, rss: usize) -> Result<ExplanationMetrics> {
    Ok(ExplanationMetrics {
        feature_index: result.feature_index,
        mwci: mwci(result)?,
        cr: coverage_rate(result)?,
        defined: rss > 1,
    })
}

/// Mid-ranks (1-based), ties share their average rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman's rho with a 95% Fisher-z interval (standard error
/// `1.03 / sqrt(n - 3)`) and a two-sided p-value from the t approximation
/// on `n - 2` degrees of freedom.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<CorrelationResult> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            actual: ys.len(),
        });
    }
    let n = xs.len();
    if n < 4 {
        return Err(Error::invalid(format!(
            "spearman needs at least 4 pairs, got {n}"
        )));
    }
    if xs.iter().chain(ys).any(|v| v.is_nan()) {
        return Err(Error::invalid("NaN in correlation input"));
    }
    let rho = pearson(&midranks(xs), &midranks(ys))
        .ok_or_else(|| Error::invalid("constant input, rank correlation undefined"))?;

    let z_crit = Normal::standard().inverse_cdf(0.975);
    let se = 1.03 / ((n - 3) as f64).sqrt();
    let z = rho.atanh();
    let (ci_lo, ci_hi) = ((z - z_crit * se).tanh(), (z + z_crit * se).tanh());

    let df = (n - 2) as f64;
    let p_value = if rho.abs() >= 1.0 {
        0.0
    } else {
        let t = rho * (df / (1.0 - rho * rho)).sqrt();
        let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
        (2.0 * dist.cdf(-t.abs())).clamp(0.0, 1.0)
    };
    Ok(CorrelationResult {
        rho,
        ci_lo: ci_lo.min(rho),
        ci_hi: ci_hi.max(rho),
        p_value,
        n_pairs: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pdp::PdpCurve;
    use proptest::prelude::*;

    fn result(best: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>) -> RashomonPdpResult {
        let grid: Vec<f64> = (0..best.len()).map(|l| l as f64).collect();
        RashomonPdpResult {
            feature_index: 0,
            feature_name: "x".into(),
            grid: grid.clone(),
            mean: best.clone(),
            ci_lo: lo,
            ci_hi: hi,
            best_curve: PdpCurve::new(0, Some(0), grid, best),
            per_model: Vec::new(),
            b: 10,
            alpha: 0.05,
            seed: 0,
            n_rows: 1,
        }
    }

    #[test]
    fn mwci_examples() {
        let r = result(vec![0.0; 3], vec![1.0; 3], vec![1.0; 3]);
        assert_eq!(mwci(&r).unwrap(), 0.0);
        let r = result(vec![0.0; 2], vec![0.0, 1.0], vec![1.0, 4.0]);
        assert_eq!(mwci(&r).unwrap(), 2.0);
    }

    #[test]
    fn coverage_examples() {
        // zero-width band that equals the curve: covered everywhere
        let r = result(vec![2.0, 3.0], vec![2.0, 3.0], vec![2.0, 3.0]);
        assert_eq!(coverage_rate(&r).unwrap(), 1.0);

        let r = result(vec![5.0; 4], vec![0.0; 4], vec![1.0; 4]);
        assert_eq!(coverage_rate(&r).unwrap(), 0.0);

        let mut best = vec![0.5; 20];
        best[3] = 2.0;
        best[17] = -1.0;
        let r = result(best, vec![0.0; 20], vec![1.0; 20]);
        assert_eq!(coverage_rate(&r).unwrap(), 0.9);
    }

    #[test]
    fn coverage_boundary_is_closed() {
        let r = result(vec![0.0, 1.0], vec![0.0, 0.0], vec![1.0, 1.0]);
        assert_eq!(coverage_rate(&r).unwrap(), 1.0);
    }

    #[test]
    fn coverage_rejects_grid_mismatch() {
        let mut r = result(vec![0.0, 1.0], vec![0.0, 0.0], vec![1.0, 1.0]);
        r.best_curve.grid[0] = -3.0;
        assert!(matches!(coverage_rate(&r), Err(Error::GridMismatch)));
    }

    #[test]
    fn singleton_metrics_flagged() {
        let r = result(vec![1.0; 3], vec![1.0; 3], vec![1.0; 3]);
        let m = explanation_metrics(&r, 1).unwrap();
        assert!(!m.defined);
        assert_eq!((m.mwci, m.cr), (0.0, 1.0));
        assert!(explanation_metrics(&r, 2).unwrap().defined);
    }

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
    }

    #[test]
    fn perfect_concordance() {
        let xs = [1.0, 2.0, 3.5, 8.0, 9.0];
        let r = spearman(&xs, &[0.1, 0.2, 0.3, 0.4, 10.0]).unwrap();
        assert_eq!(r.rho, 1.0);
        assert_eq!(r.p_value, 0.0);
        assert!(r.ci_lo <= r.rho && r.rho <= r.ci_hi);
        let r = spearman(&xs, &[5.0, 4.0, 3.0, 2.0, 1.0]).unwrap();
        assert_eq!(r.rho, -1.0);
    }

    #[test]
    fn spearman_errors() {
        assert!(spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(spearman(&[1.0; 5], &[1.0, 2.0, 3.0, 4.0, 5.0]).is_err());
        assert!(spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(spearman(&[1.0, 2.0, f64::NAN, 4.0], &[1.0, 2.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn matches_reference_values() {
        // rho = 0.8 for this pair; t = 0.8*sqrt(3/0.36) = 2.3094, two-sided p on 3 df
        let r = spearman(&[1.0, 2.0, 3.0, 4.0, 5.0], &[2.0, 1.0, 4.0, 3.0, 5.0]).unwrap();
        assert!((r.rho - 0.8).abs() < 1e-12);
        assert!(
            (r.p_value - 0.10408803866182788).abs() < 1e-9,
            "{}",
            r.p_value
        );
    }

    proptest! {
        #[test]
        fn spearman_monotone_invariant(
            pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 4..40),
        ) {
            let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            if let Ok(a) = spearman(&xs, &ys) {
                let tx: Vec<f64> = xs.iter().map(|v| v * 3.0 + 1.0).collect();
                let b = spearman(&tx, &ys).unwrap();
                prop_assert!((a.rho - b.rho).abs() < 1e-12);
                prop_assert!(a.ci_lo <= a.rho && a.rho <= a.ci_hi);
                prop_assert!((0.0..=1.0).contains(&a.p_value));
            }
        }
    }
}
