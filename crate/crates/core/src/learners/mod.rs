//! The model pool: a small zoo of regression learners trained under a
//! model-count and wall-clock budget with randomized hyperparameter search.

mod ensemble;
mod knn;
mod linear;
mod tree;

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use ensemble::{BoostingParams, GradientBoosting, RandomForest};
pub use knn::{KNearest, Weighting};
pub use linear::LinearRidge;
pub use tree::{RegressionTree, TreeParams};

use crate::data::{Dataset, Matrix, Split};
use crate::error::{Error, Result};
use crate::numeric::derive_seed;

/// Anything that maps a feature row to a real prediction.
pub trait Predictor: Sync {
    fn predict_row(&self, row: &[f64]) -> f64;
}

impl<F> Predictor for F
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn predict_row(&self, row: &[f64]) -> f64 {
        self(row)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    LinearRidge,
    DecisionTree,
    RandomForest,
    GradientBoosting,
    KNearestNeighbors,
}

impl Family {
    /// Round-robin order used by the search.
    pub const ALL: [Family; 5] = [
        Family::GradientBoosting,
        Family::RandomForest,
        Family::LinearRidge,
        Family::DecisionTree,
        Family::KNearestNeighbors,
    ];
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Family::LinearRidge => "linear_ridge",
            Family::DecisionTree => "decision_tree",
            Family::RandomForest => "random_forest",
            Family::GradientBoosting => "gradient_boosting",
            Family::KNearestNeighbors => "k_nearest_neighbors",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum HyperValue {
    Number(f64),
    Text(String),
}

impl From<f64> for HyperValue {
    fn from(v: f64) -> Self {
        HyperValue::Number(v)
    }
}

impl From<usize> for HyperValue {
    fn from(v: usize) -> Self {
        HyperValue::Number(v as f64)
    }
}

impl From<&str> for HyperValue {
    fn from(v: &str) -> Self {
        HyperValue::Text(v.to_string())
    }
}

impl fmt::Display for HyperValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HyperValue::Number(v) => write!(f, "{v}"),
            HyperValue::Text(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regressor {
    Linear(LinearRidge),
    Tree(RegressionTree),
    Forest(RandomForest),
    Boosting(GradientBoosting),
    Knn(KNearest),
}

impl Regressor {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match self {
            Regressor::Linear(m) => m.predict_row(row),
            Regressor::Tree(m) => m.predict_row(row),
            Regressor::Forest(m) => m.predict_row(row),
            Regressor::Boosting(m) => m.predict_row(row),
            Regressor::Knn(m) => m.predict_row(row),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub id: usize,
    pub family: Family,
    pub hyperparameters: BTreeMap<String, HyperValue>,
    pub n_features: usize,
    pub regressor: Regressor,
    /// Holdout RMSE.
    pub score: f64,
}

impl Predictor for TrainedModel {
    fn predict_row(&self, row: &[f64]) -> f64 {
        self.regressor.predict_row(row)
    }
}

impl TrainedModel {
    pub fn predict_batch(&self, rows: &Matrix) -> Result<Vec<f64>> {
        predict_batch(self, rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBudget {
    pub max_models: usize,
    pub max_runtime_secs: f64,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_models: 20,
            max_runtime_secs: 360.0,
            seed: 42,
        }
    }
}

pub fn rmse(predictions: &[f64], truth: &[f64]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            actual: predictions.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::invalid("rmse of empty vectors"));
    }
    let sse: f64 = predictions
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((sse / truth.len() as f64).sqrt())
}

pub fn predict_batch(model: &TrainedModel, rows: &Matrix) -> Result<Vec<f64>> {
    if rows.n_rows() > 0 && rows.n_cols() != model.n_features {
        return Err(Error::LengthMismatch {
            expected: model.n_features,
            actual: rows.n_cols(),
        });
    }
    Ok(rows.rows().map(|r| model.predict_row(r)).collect())
}

/// A family plus drawn hyperparameters, before fitting.
#[derive(Debug, Clone)]
struct Candidate {
    family: Family,
    hyperparameters: BTreeMap<String, HyperValue>,
    spec: FitSpec,
    fit_seed: u64,
}

#[derive(Debug, Clone)]
enum FitSpec {
    Linear { lambda: f64 },
    Tree(TreeParams),
    Forest { n_trees: usize, tree: TreeParams },
    Boosting(BoostingParams),
    Knn { k: usize, weighting: Weighting },
}

fn draw_candidate(family: Family, p: usize, rng: &mut ChaCha8Rng) -> Candidate {
    let mut hp: BTreeMap<String, HyperValue> = BTreeMap::new();
    let spec = match family {
        Family::LinearRidge => {
            let lambda = 10f64.powf(rng.random_range(-6.0..=1.0));
            hp.insert("lambda".into(), lambda.into());
            FitSpec::Linear { lambda }
        }
        Family::DecisionTree => {
            let max_depth = rng.random_range(2..=12usize);
            let min_samples_leaf = rng.random_range(1..=20usize);
            hp.insert("max_depth".into(), max_depth.into());
            hp.insert("min_samples_leaf".into(), min_samples_leaf.into());
            FitSpec::Tree(TreeParams {
                max_depth,
                min_samples_leaf,
                max_features: None,
            })
        }
        Family::RandomForest => {
            let n_trees = rng.random_range(50..=300usize);
            let (rule, max_features) = if rng.random_bool(0.5) {
                ("sqrt", (p as f64).sqrt().floor() as usize)
            } else {
                ("third", p / 3)
            };
            let min_samples_leaf = rng.random_range(1..=5usize);
            hp.insert("n_trees".into(), n_trees.into());
            hp.insert("max_features".into(), rule.into());
            hp.insert("min_samples_leaf".into(), min_samples_leaf.into());
            FitSpec::Forest {
                n_trees,
                tree: TreeParams {
                    max_depth: usize::MAX,
                    min_samples_leaf,
                    max_features: Some(max_features.max(1)),
                },
            }
        }
        Family::GradientBoosting => {
            let n_trees = rng.random_range(50..=500usize);
            let learning_rate = rng.random_range(0.01..=0.3);
            let max_depth = rng.random_range(2..=6usize);
            let min_samples_leaf = rng.random_range(1..=10usize);
            let subsample = rng.random_range(0.5..=1.0);
            hp.insert("n_trees".into(), n_trees.into());
            hp.insert("learning_rate".into(), learning_rate.into());
            hp.insert("max_depth".into(), max_depth.into());
            hp.insert("min_samples_leaf".into(), min_samples_leaf.into());
            hp.insert("subsample".into(), subsample.into());
            FitSpec::Boosting(BoostingParams {
                n_trees,
                learning_rate,
                subsample,
                tree: TreeParams {
                    max_depth,
                    min_samples_leaf,
                    max_features: None,
                },
            })
        }
        Family::KNearestNeighbors => {
            let k = rng.random_range(3..=25usize);
            let weighting = if rng.random_bool(0.5) {
                Weighting::Uniform
            } else {
                Weighting::InverseDistance
            };
            hp.insert("k".into(), k.into());
            hp.insert("weights".into(), weighting.as_str().into());
            FitSpec::Knn { k, weighting }
        }
    };
    Candidate {
        family,
        hyperparameters: hp,
        spec,
        fit_seed: rng.next_u64(),
    }
}

fn fit_candidate(c: &Candidate, x: &Matrix, y: &[f64], rows: &[usize]) -> Regressor {
    match &c.spec {
        FitSpec::Linear { lambda } => Regressor::Linear(LinearRidge::fit(x, y, rows, *lambda)),
        FitSpec::Tree(params) => {
            let mut rng = ChaCha8Rng::seed_from_u64(c.fit_seed);
            Regressor::Tree(RegressionTree::fit(x, y, rows, params, &mut rng))
        }
        FitSpec::Forest { n_trees, tree } => {
            Regressor::Forest(RandomForest::fit(x, y, rows, *n_trees, tree, c.fit_seed))
        }
        FitSpec::Boosting(params) => {
            Regressor::Boosting(GradientBoosting::fit(x, y, rows, params, c.fit_seed))
        }
        FitSpec::Knn { k, weighting } => Regressor::Knn(KNearest::fit(x, y, rows, *k, *weighting)),
    }
}

/// Fits a single model of the given family with hyperparameters drawn from
/// `seed`. Used by the pool search and handy for tests.
pub fn fit_family(
    family: Family,
    ds: &Dataset,
    sp: &Split,
    seed: u64,
    id: usize,
) -> Result<TrainedModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let candidate = draw_candidate(family, ds.n_features(), &mut rng);
    finish(candidate, ds, sp, id)
}

/// Wraps an explicitly constructed regressor, scoring it on the test rows.
pub fn score_regressor(
    regressor: Regressor,
    family: Family,
    hyperparameters: BTreeMap<String, HyperValue>,
    ds: &Dataset,
    sp: &Split,
    id: usize,
) -> Result<TrainedModel> {
    let mut model = TrainedModel {
        id,
        family,
        hyperparameters,
        n_features: ds.n_features(),
        regressor,
        score: 0.0,
    };
    model.score = test_rmse(&model, ds, sp)?;
    Ok(model)
}

pub fn test_rmse(model: &TrainedModel, ds: &Dataset, sp: &Split) -> Result<f64> {
    let preds = predict_batch(model, &ds.features.select_rows(&sp.test_indices))?;
    let truth: Vec<f64> = sp.test_indices.iter().map(|&i| ds.target[i]).collect();
    rmse(&preds, &truth)
}

fn finish(c: Candidate, ds: &Dataset, sp: &Split, id: usize) -> Result<TrainedModel> {
    let regressor = fit_candidate(&c, &ds.features, &ds.target, &sp.train_indices);
    score_regressor(regressor, c.family, c.hyperparameters, ds, sp, id)
}

/// Randomized search over the model zoo.
///
/// Families are visited round-robin, so every family is tried once the
/// budget allows five models. Model `i` draws its hyperparameters from a
/// stream derived from `(budget.seed, i)`. The wall clock is checked
/// before each fit; a fit that has started always completes.
pub fn train_pool(ds: &Dataset, sp: &Split, budget: &SearchBudget) -> Result<Vec<TrainedModel>> {
    if budget.max_models == 0 {
        return Err(Error::invalid("max_models must be at least 1"));
    }
    if !(budget.max_runtime_secs > 0.0) {
        return Err(Error::invalid("max_runtime_secs must be positive"));
    }
    if sp.train_indices.is_empty() || sp.test_indices.is_empty() {
        return Err(Error::DegenerateSplit("empty train or test rows".into()));
    }
    let deadline = Duration::try_from_secs_f64(budget.max_runtime_secs).unwrap_or(Duration::MAX);
    let start = Instant::now();
    let mut pool = Vec::with_capacity(budget.max_models);
    for i in 0..budget.max_models {
        if start.elapsed() >= deadline {
            break;
        }
        let family = Family::ALL[i % Family::ALL.len()];
        let model = fit_family(
            family,
            ds,
            sp,
            derive_seed(budget.seed, i as u64),
            pool.len(),
        )?;
        if !model.score.is_finite() {
            return Err(Error::invalid(format!(
                "model {i} produced a non-finite score"
            )));
        }
        pool.push(model);
    }
    if pool.is_empty() {
        return Err(Error::NoModels);
    }
    Ok(pool)
}

const ARCHIVE_FORMAT: &str = "rpdp-model-pool";
const ARCHIVE_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct PoolArchive {
    format: String,
    version: u32,
    feature_names: Vec<String>,
    models: Vec<TrainedModel>,
}

/// Writes the pool as a versioned JSON archive.
pub fn save_pool(path: impl AsRef<Path>, pool: &[TrainedModel], ds: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let archive = PoolArchive {
        format: ARCHIVE_FORMAT.into(),
        version: ARCHIVE_VERSION,
        feature_names: ds.feature_names.clone(),
        models: pool.to_vec(),
    };
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer(BufWriter::new(file), &archive).map_err(|e| Error::Archive(e.to_string()))
}

/// Reads an archive written by [`save_pool`], checking it matches `ds`.
pub fn load_pool(path: impl AsRef<Path>, ds: &Dataset) -> Result<Vec<TrainedModel>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let archive: PoolArchive =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::Archive(e.to_string()))?;
    if archive.format != ARCHIVE_FORMAT {
        return Err(Error::Archive(format!(
            "unknown format `{}`",
            archive.format
        )));
    }
    if archive.version != ARCHIVE_VERSION {
        return Err(Error::Archive(format!(
            "unsupported version {}",
            archive.version
        )));
    }
    if archive.feature_names != ds.feature_names {
        return Err(Error::Archive(
            "feature names differ from the dataset".into(),
        ));
    }
    if archive.models.is_empty() {
        return Err(Error::NoModels);
    }
    Ok(archive.models)
}

/// Per-column mean and standard deviation over `rows`; zero spreads map to 1.
fn column_moments(x: &Matrix, rows: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let p = x.n_cols();
    let mut means = vec![0.0; p];
    for &i in rows {
        for (j, m) in means.iter_mut().enumerate() {
            *m += x.get(i, j);
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut scales = vec![0.0; p];
    for &i in rows {
        for (j, s) in scales.iter_mut().enumerate() {
            let d = x.get(i, j) - means[j];
            *s += d * d;
        }
    }
    for s in &mut scales {
        *s = (*s / n).sqrt();
        if !(*s > 1e-12) {
            *s = 1.0;
        }
    }
    (means, scales)
}

fn target_range(y: &[f64], rows: &[usize]) -> (f64, f64) {
    rows.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            (lo.min(y[i]), hi.max(y[i]))
        })
}
