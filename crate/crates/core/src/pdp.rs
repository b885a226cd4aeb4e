//! Partial dependence curves, their Rashomon aggregate, and pointwise
//! percentile-bootstrap bands obtained by resampling set members.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{feature_grid, Dataset, Split};
use crate::error::{Error, Result};
use crate::learners::{Predictor, TrainedModel};
use crate::numeric::{derive_seed, pairwise_sum, quantile_sorted};
use crate::rashomon::RashomonSet;

pub const DEFAULT_BOOTSTRAP: usize = 1000;
pub const DEFAULT_ALPHA: f64 = 0.05;
/// Cap on the number of training rows averaged per grid point.
pub const DEFAULT_MAX_PDP_ROWS: usize = 1000;

const STREAM_PDP_ROWS: u64 = 1;
const STREAM_BOOTSTRAP: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdpCurve {
    pub feature_index: usize,
    /// Model the curve belongs to; `None` for aggregates.
    pub model_id: Option<usize>,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl PdpCurve {
    pub fn new(
        feature_index: usize,
        model_id: Option<usize>,
        grid: Vec<f64>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        PdpCurve {
            feature_index,
            model_id,
            grid,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RashomonPdpResult {
    pub feature_index: usize,
    pub feature_name: String,
    pub grid: Vec<f64>,
    pub mean: Vec<f64>,
    pub ci_lo: Vec<f64>,
    pub ci_hi: Vec<f64>,
    pub best_curve: PdpCurve,
    /// Member curves ordered by model id.
    pub per_model: Vec<PdpCurve>,
    pub b: usize,
    pub alpha: f64,
    pub seed: u64,
    /// Number of rows averaged per grid point.
    pub n_rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdpParams {
    pub grid_size: usize,
    pub bootstrap: usize,
    pub alpha: f64,
    pub seed: u64,
    pub max_rows: usize,
}

impl Default for PdpParams {
    fn default() -> Self {
        PdpParams {
            grid_size: crate::data::DEFAULT_GRID_SIZE,
            bootstrap: DEFAULT_BOOTSTRAP,
            alpha: DEFAULT_ALPHA,
            seed: 42,
            max_rows: DEFAULT_MAX_PDP_ROWS,
        }
    }
}

/// Partial dependence of `model` on feature `j`: for every grid value, the
/// mean prediction over `rows` with column `j` overwritten by that value.
pub fn pdp_single<P: Predictor + ?Sized>(
    model: &P,
    ds: &Dataset,
    rows: &[usize],
    j: usize,
    grid: &[f64],
) -> Result<PdpCurve> {
    if rows.is_empty() {
        return Err(Error::invalid("partial dependence over zero rows"));
    }
    if j >= ds.n_features() {
        return Err(Error::invalid(format!("feature index {j} out of range")));
    }
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::invalid(
            "grid must be non-empty and strictly increasing",
        ));
    }
    let values: Vec<f64> = grid
        .par_iter()
        .map(|&x| {
            let mut buf = vec![0.0; ds.n_features()];
            let preds: Vec<f64> = rows
                .iter()
                .map(|&i| {
                    buf.copy_from_slice(ds.features.row(i));
                    buf[j] = x;
                    model.predict_row(&buf)
                })
                .collect();
            pairwise_sum(&preds) / rows.len() as f64
        })
        .collect();
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::invalid(format!(
            "non-finite partial dependence value {v}"
        )));
    }
    Ok(PdpCurve::new(j, None, grid.to_vec(), values))
}

fn check_shared_grid(curves: &[PdpCurve]) -> Result<()> {
    let first = curves
        .first()
        .ok_or_else(|| Error::invalid("no curves to aggregate"))?;
    if curves
        .iter()
        .any(|c| c.grid != first.grid || c.values.len() != first.grid.len())
    {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Curves in canonical order: by model id, aggregates last, stable otherwise.
fn canonical(curves: &[PdpCurve]) -> Vec<&PdpCurve> {
    let mut sorted: Vec<&PdpCurve> = curves.iter().collect();
    sorted.sort_by_key(|c| c.model_id.unwrap_or(usize::MAX));
    sorted
}

fn pointwise_mean(
    curves: &[&PdpCurve],
    picks: impl Iterator<Item = usize> + Clone,
    n: usize,
    m: usize,
) -> Vec<f64> {
    let mut column = Vec::with_capacity(n);
    (0..m)
        .map(|l| {
            column.clear();
            column.extend(picks.clone().map(|k| curves[k].values[l]));
            pairwise_sum(&column) / n as f64
        })
        .collect()
}

/// Pointwise mean of member curves sharing one grid.
pub fn rashomon_pdp(curves: &[PdpCurve]) -> Result<Vec<f64>> {
    check_shared_grid(curves)?;
    let sorted = canonical(curves);
    let m = sorted[0].grid.len();
    Ok(pointwise_mean(&sorted, 0..sorted.len(), sorted.len(), m))
}

/// `b` replicates of `r` indices drawn uniformly with replacement from `0..r`.
pub fn draw_replicates(r: usize, b: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..b)
        .map(|_| (0..r).map(|_| rng.random_range(0..r)).collect())
        .collect()
}

/// Empirical `alpha/2` and `1 - alpha/2` type-7 quantiles.
pub fn percentile_band(values: &[f64], alpha: f64) -> (f64, f64) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    (
        quantile_sorted(&sorted, alpha / 2.0),
        quantile_sorted(&sorted, 1.0 - alpha / 2.0),
    )
}

fn check_band_args(curves: &[PdpCurve], b: usize, alpha: f64) -> Result<()> {
    check_shared_grid(curves)?;
    if b == 0 {
        return Err(Error::invalid("bootstrap count must be at least 1"));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Bands from explicit replicate draws; each draw lists indices into the
/// canonically ordered curves.
pub fn bands_from_draws(
    curves: &[PdpCurve],
    draws: &[Vec<usize>],
    alpha: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_band_args(curves, draws.len(), alpha)?;
    let sorted = canonical(curves);
    let r = sorted.len();
    let m = sorted[0].grid.len();
    if let Some(d) = draws
        .iter()
        .find(|d| d.is_empty() || d.iter().any(|&k| k >= r))
    {
        return Err(Error::invalid(format!("bad replicate draw {d:?}")));
    }
    let replicate_means: Vec<Vec<f64>> = draws
        .iter()
        .map(|d| pointwise_mean(&sorted, d.iter().copied(), d.len(), m))
        .collect();
    let mut lo = Vec::with_capacity(m);
    let mut hi = Vec::with_capacity(m);
    let mut at_point = Vec::with_capacity(draws.len());
    for l in 0..m {
        at_point.clear();
        at_point.extend(replicate_means.iter().map(|rep| rep[l]));
        let (a, b) = percentile_band(&at_point, alpha);
        lo.push(a);
        hi.push(b);
    }
    Ok((lo, hi))
}

/// Pointwise percentile bands: `b` replicates, each resampling as many
/// curves as there are members, with replacement.
pub fn bootstrap_bands(
    curves: &[PdpCurve],
    b: usize,
    alpha: f64,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_band_args(curves, b, alpha)?;
    let draws = draw_replicates(curves.len(), b, seed);
    bands_from_draws(curves, &draws, alpha)
}

/// Rows averaged by the partial dependence: the training rows, subsampled
/// without replacement to `max_rows` when there are more.
pub fn pdp_rows(sp: &Split, max_rows: usize, seed: u64) -> Vec<usize> {
    let train = &sp.train_indices;
    if max_rows == 0 || train.len() <= max_rows {
        return train.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, STREAM_PDP_ROWS));
    let mut picked: Vec<usize> = index::sample(&mut rng, train.len(), max_rows)
        .into_iter()
        .map(|k| train[k])
        .collect();
    picked.sort_unstable();
    picked
}

/// The full Rashomon PDP computation for one feature: grid, member curves,
/// their mean, and bootstrap bands. `pool` must contain every set member.
pub fn run_algorithm1(
    pool: &[TrainedModel],
    rset: &RashomonSet,
    ds: &Dataset,
    sp: &Split,
    j: usize,
    params: &PdpParams,
) -> Result<RashomonPdpResult> {
    if j >= ds.n_features() {
        return Err(Error::invalid(format!("feature index {j} out of range")));
    }
    let grid = feature_grid(ds, &sp.train_indices, j, params.grid_size)?;
    let rows = pdp_rows(sp, params.max_rows, params.seed);

    let mut member_ids = rset.member_ids.clone();
    member_ids.sort_unstable();
    let members: Vec<&TrainedModel> = member_ids
        .iter()
        .map(|&id| {
            pool.iter()
                .find(|m| m.id == id)
                .ok_or_else(|| Error::invalid(format!("model {id} missing from pool")))
        })
        .collect::<Result<_>>()?;

    let per_model: Vec<PdpCurve> = members
        .par_iter()
        .map(|m| {
            let mut curve = pdp_single(*m, ds, &rows, j, &grid)?;
            curve.model_id = Some(m.id);
            Ok(curve)
        })
        .collect::<Result<_>>()?;
    let best_curve = per_model
        .iter()
        .find(|c| c.model_id == Some(rset.best_id))
        .cloned()
        .ok_or_else(|| Error::invalid("best model is not a set member"))?;

    let mean = rashomon_pdp(&per_model)?;
    let (ci_lo, ci_hi) = bootstrap_bands(
        &per_model,
        params.bootstrap,
        params.alpha,
        derive_seed(params.seed, STREAM_BOOTSTRAP),
    )?;

    Ok(RashomonPdpResult {
        feature_index: j,
        feature_name: ds.feature_names[j].clone(),
        grid,
        mean,
        ci_lo,
        ci_hi,
        best_curve,
        per_model,
        b: params.bootstrap,
        alpha: params.alpha,
        seed: params.seed,
        n_rows: rows.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Matrix;

    fn curve(id: usize, values: Vec<f64>) -> PdpCurve {
        let grid = (0..values.len()).map(|l| l as f64).collect();
        PdpCurve::new(0, Some(id), grid, values)
    }

    fn two_row_dataset() -> Dataset {
        Dataset::new(
            "two",
            Matrix::new(2, 2, vec![0.0, 10.0, 1.0, -10.0]).unwrap(),
            vec!["a".into(), "b".into()],
            vec![0.0, 1.0],
            "y",
        )
        .unwrap()
    }

    #[test]
    fn constant_model_gives_flat_curve() {
        let ds = two_row_dataset();
        let c = pdp_single(&|_: &[f64]| 4.25, &ds, &[0, 1], 0, &[-1.0, 0.0, 3.0]).unwrap();
        assert_eq!(c.values, vec![4.25; 3]);
    }

    #[test]
    fn linear_model_gives_affine_curve() {
        let ds = two_row_dataset();
        let f = |r: &[f64]| 3.0 * r[0] + r[1] * r[1];
        let c = pdp_single(&f, &ds, &[0, 1], 0, &[0.0, 1.0, 2.0]).unwrap();
        // mean of g(x_-j) = (100 + 100) / 2
        assert_eq!(c.values, vec![100.0, 103.0, 106.0]);
    }

    #[test]
    fn stump_by_hand() {
        // stump on feature b: b <= 0 -> 1, else 5
        let ds = two_row_dataset();
        let stump = |r: &[f64]| if r[1] <= 0.0 { 1.0 } else { 5.0 };
        // varying feature b over grid {-1, 0.5, 20}, rows (a=0,b=10) and (a=1,b=-10)
        // each grid value replaces b in both rows, so both rows agree:
        // -1 -> 1, 0.5 -> 5, 20 -> 5
        let c = pdp_single(&stump, &ds, &[0, 1], 1, &[-1.0, 0.5, 20.0]).unwrap();
        assert_eq!(c.values, vec![1.0, 5.0, 5.0]);
        // varying feature a leaves b alone: row 0 -> 5, row 1 -> 1, mean 3
        let c = pdp_single(&stump, &ds, &[0, 1], 0, &[-1.0, 0.5, 20.0]).unwrap();
        assert_eq!(c.values, vec![3.0, 3.0, 3.0]);
        // single row subsets
        let c = pdp_single(&stump, &ds, &[1], 0, &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(c.values, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn pdp_single_errors() {
        let ds = two_row_dataset();
        let f = |_: &[f64]| 0.0;
        assert!(pdp_single(&f, &ds, &[], 0, &[0.0, 1.0]).is_err());
        assert!(pdp_single(&f, &ds, &[0], 2, &[0.0, 1.0]).is_err());
        assert!(pdp_single(&f, &ds, &[0], 0, &[1.0, 0.0]).is_err());
    }

    #[test]
    fn mean_examples() {
        assert_eq!(
            rashomon_pdp(&[curve(0, vec![1.0, 2.0])]).unwrap(),
            vec![1.0, 2.0]
        );
        assert_eq!(
            rashomon_pdp(&[curve(0, vec![0.0; 3]), curve(1, vec![1.0; 3])]).unwrap(),
            vec![0.5; 3]
        );
        assert_eq!(
            rashomon_pdp(&[
                curve(0, vec![1.0, 2.0]),
                curve(1, vec![3.0, 4.0]),
                curve(2, vec![5.0, 6.0])
            ])
            .unwrap(),
            vec![3.0, 4.0]
        );
        assert!(rashomon_pdp(&[]).is_err());
        let mut shifted = curve(1, vec![0.0, 0.0]);
        shifted.grid[1] = 7.0;
        assert!(matches!(
            rashomon_pdp(&[curve(0, vec![0.0, 0.0]), shifted]),
            Err(Error::GridMismatch)
        ));
    }

    #[test]
    fn singleton_bands_are_the_curve() {
        let c = curve(3, vec![1.5, -2.0, 7.0]);
        let (lo, hi) = bootstrap_bands(std::slice::from_ref(&c), 50, 0.05, 1).unwrap();
        assert_eq!(lo, c.values);
        assert_eq!(hi, c.values);
    }

    #[test]
    fn identical_curves_zero_width() {
        let curves: Vec<PdpCurve> = (0..4).map(|id| curve(id, vec![0.3, 0.1, 0.2])).collect();
        let (lo, hi) = bootstrap_bands(&curves, 200, 0.05, 9).unwrap();
        assert_eq!(lo, hi);
        assert_eq!(lo, vec![0.3, 0.1, 0.2]);
    }

    #[test]
    fn two_constant_curves_large_b() {
        let curves = vec![curve(0, vec![0.0; 2]), curve(1, vec![1.0; 2])];
        let (lo, hi) = bootstrap_bands(&curves, 4000, 0.05, 3).unwrap();
        assert_eq!(lo, vec![0.0; 2]);
        assert_eq!(hi, vec![1.0; 2]);
    }

    #[test]
    fn band_argument_errors() {
        let curves = vec![curve(0, vec![0.0; 2])];
        assert!(bootstrap_bands(&curves, 0, 0.05, 1).is_err());
        assert!(bootstrap_bands(&curves, 10, 0.0, 1).is_err());
        assert!(bootstrap_bands(&curves, 10, 1.0, 1).is_err());
        assert!(bootstrap_bands(&[], 10, 0.05, 1).is_err());
        assert!(bands_from_draws(&curves, &[vec![1]], 0.05).is_err());
    }

    #[test]
    fn draws_are_seeded() {
        assert_eq!(draw_replicates(5, 10, 1), draw_replicates(5, 10, 1));
        assert_ne!(draw_replicates(5, 10, 1), draw_replicates(5, 10, 2));
        assert!(draw_replicates(5, 10, 1).iter().all(|d| d.len() == 5));
    }

    #[test]
    fn pdp_rows_caps_and_sorts() {
        let sp = Split {
            train_indices: (0..50).collect(),
            test_indices: vec![50],
            seed: 0,
        };
        assert_eq!(pdp_rows(&sp, 100, 1), sp.train_indices);
        let sub = pdp_rows(&sp, 10, 1);
        assert_eq!(sub.len(), 10);
        assert!(sub.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(sub, pdp_rows(&sp, 10, 1));
    }
}
