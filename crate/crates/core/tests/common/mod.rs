//! Shared oracles and property checks for the integration test targets.
#![allow(dead_code)]

use std::path::PathBuf;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};
use rpdp_core::metrics::coverage_rate;
use rpdp_core::pdp::{bands_from_draws, bootstrap_bands, rashomon_pdp};
use rpdp_core::rashomon::{form_set, ModelScore};
use rpdp_core::{PdpCurve, RashomonPdpResult};

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

/// Textbook type-7 quantile, written independently of the library.
pub fn oracle_quantile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let h = (n - 1) as f64 * p;
    let k = h.floor() as usize;
    if k + 1 >= n {
        return sorted[n - 1];
    }
    let g = h - k as f64;
    sorted[k] + g * (sorted[k + 1] - sorted[k])
}

/// Band for constant curves with integer levels, straight from the draws:
/// each replicate mean is an exact integer sum over `r`.
pub fn oracle_band(levels: &[i64], draws: &[Vec<usize>], alpha: f64) -> (f64, f64) {
    let r = levels.len() as f64;
    let mut means: Vec<f64> = draws
        .iter()
        .map(|d| d.iter().map(|&k| levels[k]).sum::<i64>() as f64 / r)
        .collect();
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    (
        oracle_quantile(&means, alpha / 2.0),
        oracle_quantile(&means, 1.0 - alpha / 2.0),
    )
}

pub fn constant_curves(levels: &[i64], m: usize) -> Vec<PdpCurve> {
    let grid: Vec<f64> = (0..m).map(|l| l as f64).collect();
    levels
        .iter()
        .enumerate()
        .map(|(k, &v)| PdpCurve::new(0, Some(k), grid.clone(), vec![v as f64; m]))
        .collect()
}

/// Decodes sequence number `t` into `b` replicates of `r` draws (base `r`).
pub fn decode_draws(mut t: u64, r: usize, b: usize) -> Vec<Vec<usize>> {
    (0..b)
        .map(|_| {
            (0..r)
                .map(|_| {
                    let k = (t % r as u64) as usize;
                    t /= r as u64;
                    k
                })
                .collect()
        })
        .collect()
}

/// Every length-`r` multiset over `0..r`, as a sorted draw list.
pub fn compositions(r: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    nondecreasing(r, r, &mut Vec::new(), &mut out);
    out
}

/// Every nondecreasing sequence of length `len` over `0..n`.
pub fn nondecreasing(n: usize, len: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if prefix.len() == len {
        out.push(prefix.clone());
        return;
    }
    let start = prefix.last().copied().unwrap_or(0);
    for v in start..n {
        prefix.push(v);
        nondecreasing(n, len, prefix, out);
        prefix.pop();
    }
}

pub const ORACLE_ALPHAS: [f64; 4] = [0.05, 0.1, 0.3, 0.5];

/// Checks every draw sequence for `levels` and `b` against the oracle.
/// Returns the number of sequences compared.
pub fn check_all_sequences(levels: &[i64], b: usize) -> Result<u64, String> {
    let r = levels.len();
    let curves = constant_curves(levels, 2);
    let total = (r as u64).pow((r * b) as u32);
    for t in 0..total {
        let draws = decode_draws(t, r, b);
        for alpha in ORACLE_ALPHAS {
            let (lo, hi) = bands_from_draws(&curves, &draws, alpha).map_err(|e| e.to_string())?;
            let want = oracle_band(levels, &draws, alpha);
            if lo != vec![want.0; 2] || hi != vec![want.1; 2] {
                return Err(format!(
                    "levels {levels:?} B={b} alpha={alpha} draws {draws:?}: got ({lo:?}, {hi:?}) want {want:?}"
                ));
            }
        }
    }
    Ok(total)
}

/// Checks every multiset of replicate compositions. The band depends on the
/// draws only through that multiset, so this covers every outcome.
pub fn check_all_outcomes(levels: &[i64], b: usize) -> Result<u64, String> {
    let r = levels.len();
    let curves = constant_curves(levels, 2);
    let comps = compositions(r);
    let mut multisets = Vec::new();
    nondecreasing(comps.len(), b, &mut Vec::new(), &mut multisets);
    for ms in &multisets {
        let draws: Vec<Vec<usize>> = ms.iter().map(|&c| comps[c].clone()).collect();
        for alpha in ORACLE_ALPHAS {
            let (lo, hi) = bands_from_draws(&curves, &draws, alpha).map_err(|e| e.to_string())?;
            let want = oracle_band(levels, &draws, alpha);
            if lo != vec![want.0; 2] || hi != vec![want.1; 2] {
                return Err(format!(
                    "levels {levels:?} B={b} alpha={alpha} draws {draws:?}: got ({lo:?}, {hi:?}) want {want:?}"
                ));
            }
        }
    }
    Ok(multisets.len() as u64)
}

/// Seeded bootstrap against the oracle applied to the same draws.
pub fn check_seeded(levels: &[i64], b: usize, seeds: std::ops::Range<u64>) -> Result<(), String> {
    let curves = constant_curves(levels, 3);
    for seed in seeds {
        let draws = rpdp_core::pdp::draw_replicates(levels.len(), b, seed);
        let (lo, hi) = bootstrap_bands(&curves, b, 0.05, seed).map_err(|e| e.to_string())?;
        let want = oracle_band(levels, &draws, 0.05);
        if lo != vec![want.0; 3] || hi != vec![want.1; 3] {
            return Err(format!("seed {seed}: got ({lo:?}, {hi:?}) want {want:?}"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// property checks

pub const MIN_CASES: u32 = 100;

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn curves_strategy() -> impl Strategy<Value = Vec<PdpCurve>> {
    (1usize..7, 1usize..6).prop_flat_map(|(r, m)| {
        prop::collection::vec(prop::collection::vec(-1e3f64..1e3, m), r).prop_map(move |rows| {
            let grid: Vec<f64> = (0..m).map(|l| l as f64 * 0.5).collect();
            rows.into_iter()
                .enumerate()
                .map(|(k, v)| PdpCurve::new(0, Some(k), grid.clone(), v))
                .collect()
        })
    })
}

fn result_from(best: Vec<f64>, lo: Vec<f64>, hi: Vec<f64>) -> RashomonPdpResult {
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
        b: 1,
        alpha: 0.05,
        seed: 0,
        n_rows: 1,
    }
}

fn flatten<T>(r: Result<(), proptest::test_runner::TestError<T>>) -> Result<(), String>
where
    T: std::fmt::Debug,
{
    r.map_err(|e| e.to_string())
}

/// Raising epsilon never removes a member.
pub fn prop_epsilon_monotone(cases: u32) -> Result<(), String> {
    let strat = (
        prop::collection::vec(0.0f64..100.0, 1..30),
        0.0001f64..2.0,
        0.0001f64..2.0,
    );
    flatten(runner(cases).run(&strat, |(scores, e1, e2)| {
        let pool: Vec<ModelScore> = scores
            .iter()
            .enumerate()
            .map(|(id, &score)| ModelScore { id, score })
            .collect();
        let (small, large) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let a = form_set(&pool, small).unwrap();
        let b = form_set(&pool, large).unwrap();
        prop_assert!(a.member_ids.iter().all(|id| b.contains(*id)));
        prop_assert!(a.rss <= b.rss);
        prop_assert!(a.contains(a.best_id));
        Ok(())
    }))
}

/// With shared draws, a smaller alpha gives a band containing the larger
/// alpha's band at every grid point.
pub fn prop_alpha_nested(cases: u32) -> Result<(), String> {
    let strat = (
        curves_strategy(),
        1usize..60,
        any::<u64>(),
        0.001f64..0.999,
        0.001f64..0.999,
    );
    flatten(runner(cases).run(&strat, |(curves, b, seed, a1, a2)| {
        let (wide, narrow) = if a1 <= a2 { (a1, a2) } else { (a2, a1) };
        let (wlo, whi) = bootstrap_bands(&curves, b, wide, seed).unwrap();
        let (nlo, nhi) = bootstrap_bands(&curves, b, narrow, seed).unwrap();
        for l in 0..wlo.len() {
            prop_assert!(wlo[l] <= nlo[l] && nlo[l] <= nhi[l] && nhi[l] <= whi[l]);
        }
        Ok(())
    }))
}

fn close(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-9 * scale.max(1.0)
}

/// `v -> a v + c` maps the mean and the band endpoints the same way; a
/// negative `a` swaps the endpoints.
pub fn prop_affine_equivariant(cases: u32) -> Result<(), String> {
    let strat = (
        curves_strategy(),
        1usize..40,
        any::<u64>(),
        prop_oneof![-50.0f64..-0.01, 0.01f64..50.0],
        -1e3f64..1e3,
    );
    flatten(runner(cases).run(&strat, |(curves, b, seed, a, c)| {
        let moved: Vec<PdpCurve> = curves
            .iter()
            .map(|cv| {
                let vals = cv.values.iter().map(|v| a * v + c).collect();
                PdpCurve::new(0, cv.model_id, cv.grid.clone(), vals)
            })
            .collect();
        let scale = 1e3 * a.abs() + c.abs();
        let mean = rashomon_pdp(&curves).unwrap();
        let mean2 = rashomon_pdp(&moved).unwrap();
        let (lo, hi) = bootstrap_bands(&curves, b, 0.05, seed).unwrap();
        let (lo2, hi2) = bootstrap_bands(&moved, b, 0.05, seed).unwrap();
        for l in 0..mean.len() {
            prop_assert!(close(mean2[l], a * mean[l] + c, scale));
            let (elo, ehi) = if a > 0.0 {
                (a * lo[l] + c, a * hi[l] + c)
            } else {
                (a * hi[l] + c, a * lo[l] + c)
            };
            prop_assert!(close(lo2[l], elo, scale), "lo {} vs {}", lo2[l], elo);
            prop_assert!(close(hi2[l], ehi, scale), "hi {} vs {}", hi2[l], ehi);
        }
        Ok(())
    }))
}

/// Coverage always lies in `[0, 1]` and is a multiple of `1/m`.
pub fn prop_cr_unit_interval(cases: u32) -> Result<(), String> {
    let strat = (1usize..40).prop_flat_map(|m| {
        (
            prop::collection::vec(-10.0f64..10.0, m),
            prop::collection::vec((-10.0f64..10.0, 0.0f64..5.0), m),
        )
    });
    flatten(runner(cases).run(&strat, |(best, band)| {
        let m = best.len();
        let lo: Vec<f64> = band.iter().map(|p| p.0).collect();
        let hi: Vec<f64> = band.iter().map(|p| p.0 + p.1).collect();
        let cr = coverage_rate(&result_from(best, lo, hi)).unwrap();
        prop_assert!((0.0..=1.0).contains(&cr));
        let k = cr * m as f64;
        prop_assert!((k - k.round()).abs() < 1e-9);
        Ok(())
    }))
}

/// The Rashomon mean and both band endpoints stay within the pointwise
/// min/max of the member curves (up to rounding of the mean).
pub fn prop_mean_in_envelope(cases: u32) -> Result<(), String> {
    let strat = (curves_strategy(), 1usize..40, any::<u64>());
    flatten(runner(cases).run(&strat, |(curves, b, seed)| {
        let mean = rashomon_pdp(&curves).unwrap();
        let (lo, hi) = bootstrap_bands(&curves, b, 0.05, seed).unwrap();
        for l in 0..mean.len() {
            let (mut mn, mut mx) = (f64::INFINITY, f64::NEG_INFINITY);
            for c in &curves {
                mn = mn.min(c.values[l]);
                mx = mx.max(c.values[l]);
            }
            let tol = 1e-12 * mn.abs().max(mx.abs()).max(1.0);
            for v in [mean[l], lo[l], hi[l]] {
                prop_assert!(mn - tol <= v && v <= mx + tol, "{v} outside [{mn}, {mx}]");
            }
        }
        Ok(())
    }))
}

/// Points exactly on a band endpoint count as covered; one ulp outside
/// does not.
pub fn prop_cr_closed_boundary(cases: u32) -> Result<(), String> {
    let strat = (1usize..30).prop_flat_map(|m| {
        (prop::collection::vec(
            (-10.0f64..10.0, 0.0f64..5.0, 0usize..5),
            m,
        ),)
    });
    flatten(runner(cases).run(&strat, |(points,)| {
        let mut best = Vec::new();
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        let mut expected = 0usize;
        for &(a, w, kind) in &points {
            let (l, h) = (a, a + w);
            let v = match kind {
                0 => l,
                1 => h,
                2 => l + (h - l) / 2.0,
                3 => l.next_down(),
                _ => h.next_up(),
            };
            if kind <= 2 {
                expected += 1;
            }
            best.push(v);
            lo.push(l);
            hi.push(h);
        }
        let m = points.len();
        let cr = coverage_rate(&result_from(best, lo, hi)).unwrap();
        prop_assert_eq!(cr, expected as f64 / m as f64);
        Ok(())
    }))
}

pub type PropCheck = fn(u32) -> Result<(), String>;

pub const INVARIANTS: [(&str, PropCheck); 6] = [
    ("epsilon monotone membership", prop_epsilon_monotone),
    ("alpha nested bands", prop_alpha_nested),
    (
        "affine equivariance of mean and bands",
        prop_affine_equivariant,
    ),
    ("coverage rate in [0, 1]", prop_cr_unit_interval),
    ("mean inside curve envelope", prop_mean_in_envelope),
    ("closed-interval coverage boundary", prop_cr_closed_boundary),
];
