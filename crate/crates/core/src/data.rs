//! Tabular regression data: CSV loading, holdout splits and feature grids.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{format_g17, quantile_sorted};

pub const DEFAULT_TEST_FRACTION: f64 = 0.25;
pub const DEFAULT_GRID_SIZE: usize = 20;
const GRID_LOWER_Q: f64 = 0.01;
const GRID_UPPER_Q: f64 = 0.99;

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl Matrix {
    pub fn new(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n_rows * n_cols {
            return Err(Error::LengthMismatch {
                expected: n_rows * n_cols,
                actual: values.len(),
            });
        }
        Ok(Matrix {
            n_rows,
            n_cols,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * n_cols);
        for row in rows {
            if row.len() != n_cols {
                return Err(Error::LengthMismatch {
                    expected: n_cols,
                    actual: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Ok(Matrix {
            n_rows: rows.len(),
            n_cols,
            values,
        })
    }

    /// An empty matrix with a fixed column count.
    pub fn empty(n_cols: usize) -> Self {
        Matrix {
            n_rows: 0,
            n_cols,
            values: Vec::new(),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on a zero chunk size
        let width = self.n_cols.max(1);
        self.values
            .chunks_exact(width)
            .take(if self.n_cols == 0 { 0 } else { self.n_rows })
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n_rows).map(|i| self.get(i, j)).collect()
    }

    /// Copies the selected rows into a new matrix.
    pub fn select_rows(&self, indices: &[usize]) -> Matrix {
        let mut values = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Matrix {
            n_rows: indices.len(),
            n_cols: self.n_cols,
            values,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub features: Matrix,
    pub feature_names: Vec<String>,
    pub target: Vec<f64>,
    pub target_name: String,
}

impl Dataset {
    /// Builds a dataset and checks its invariants.
    pub fn new(
        name: impl Into<String>,
        features: Matrix,
        feature_names: Vec<String>,
        target: Vec<f64>,
        target_name: impl Into<String>,
    ) -> Result<Self> {
        let ds = Dataset {
            name: name.into(),
            features,
            feature_names,
            target,
            target_name: target_name.into(),
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_index(&self, name: &str) -> Result<usize> {
        self.feature_names
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| Error::UnknownFeature(name.to_string()))
    }

    fn validate(&self) -> Result<()> {
        let n = self.target.len();
        if n < 2 {
            return Err(Error::TooFewRows(n));
        }
        if self.feature_names.is_empty() {
            return Err(Error::NoFeatures);
        }
        if self.features.n_rows() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                actual: self.features.n_rows(),
            });
        }
        if self.features.n_cols() != self.feature_names.len() {
            return Err(Error::LengthMismatch {
                expected: self.feature_names.len(),
                actual: self.features.n_cols(),
            });
        }
        let mut seen = HashSet::new();
        for name in self.feature_names.iter().chain([&self.target_name]) {
            if name.is_empty() || !seen.insert(name.as_str()) {
                return Err(Error::BadColumnName(name.clone()));
            }
        }
        for (row, &y) in self.target.iter().enumerate() {
            if !y.is_finite() {
                return Err(Error::InvalidTarget {
                    row,
                    value: y.to_string(),
                });
            }
        }
        for (row, values) in self.features.rows().enumerate() {
            if let Some(j) = values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteFeature {
                    column: self.feature_names[j].clone(),
                    row,
                    value: values[j].to_string(),
                });
            }
        }
        Ok(())
    }
}

/// Loads a dataset from a CSV file; the dataset is named after the file stem.
pub fn load_csv(path: impl AsRef<Path>, target_column: &str) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    read_csv(file, &name, target_column)
}

/// Parses CSV with a header row. Every column other than the target must be
/// numeric; row numbers in errors are 0-based data rows.
pub fn read_csv<R: Read>(reader: R, name: &str, target_column: &str) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let target_idx = header
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingColumn(target_column.to_string()))?;
    let feature_cols: Vec<usize> = (0..header.len()).filter(|&c| c != target_idx).collect();
    let feature_names: Vec<String> = feature_cols.iter().map(|&c| header[c].clone()).collect();

    let mut values = Vec::new();
    let mut target = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let raw_y = &record[target_idx];
        match raw_y.parse::<f64>() {
            Ok(y) if y.is_finite() => target.push(y),
            _ => {
                return Err(Error::InvalidTarget {
                    row,
                    value: raw_y.to_string(),
                })
            }
        }
        for &c in &feature_cols {
            let raw = &record[c];
            let v: f64 = raw.parse().map_err(|_| Error::NonNumericFeature {
                column: header[c].clone(),
                row,
                value: raw.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature {
                    column: header[c].clone(),
                    row,
                    value: raw.to_string(),
                });
            }
            values.push(v);
        }
    }
    let n = target.len();
    if n < 2 {
        return Err(Error::TooFewRows(n));
    }
    let features = Matrix::new(n, feature_cols.len(), values)?;
    Dataset::new(name, features, feature_names, target, target_column)
}

/// Writes features followed by the target column, 17 significant digits.
pub fn write_csv<W: Write>(ds: &Dataset, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = ds.feature_names.iter().map(String::as_str).collect();
    header.push(&ds.target_name);
    wtr.write_record(&header)?;
    for (row, y) in ds.features.rows().zip(&ds.target) {
        let rec: Vec<String> = row.iter().chain([y]).map(|v| format_g17(*v)).collect();
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_csv(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_csv(ds, file)
}

/// Holdout split: disjoint, non-empty train and test row sets covering `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
}

/// Shuffles `0..n` with the seed; the first `floor(n * test_fraction)` rows
/// of the permutation become the test set. Both index lists are returned
/// sorted ascending.
pub fn split(n: usize, test_fraction: f64, seed: u64) -> Result<Split> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::DegenerateSplit(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let n_test = (n as f64 * test_fraction).floor() as usize;
    if n_test < 1 || n - n_test < 1 {
        return Err(Error::DegenerateSplit(format!(
            "{n} rows with test fraction {test_fraction} gives {n_test} test rows"
        )));
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    perm.shuffle(&mut rng);
    let mut test_indices = perm[..n_test].to_vec();
    let mut train_indices = perm[n_test..].to_vec();
    test_indices.sort_unstable();
    train_indices.sort_unstable();
    Ok(Split {
        train_indices,
        test_indices,
        seed,
    })
}

/// Evaluation grid for feature `j` computed over `rows`.
///
/// Columns with at most `m` distinct values use those values directly.
/// Otherwise the grid is `m` equally spaced points between the type-7 1% and
/// 99% quantiles, widening to the observed range if those coincide.
pub fn feature_grid(ds: &Dataset, rows: &[usize], j: usize, m: usize) -> Result<Vec<f64>> {
    if m < 2 {
        return Err(Error::invalid(format!("grid size must be >= 2, got {m}")));
    }
    if j >= ds.n_features() {
        return Err(Error::invalid(format!("feature index {j} out of range")));
    }
    if rows.is_empty() {
        return Err(Error::invalid("feature grid over an empty row set"));
    }
    let mut col: Vec<f64> = rows.iter().map(|&i| ds.features.get(i, j)).collect();
    col.sort_by(f64::total_cmp);
    let mut distinct = col.clone();
    distinct.dedup();
    if distinct.len() < 2 {
        return Err(Error::ConstantFeature(ds.feature_names[j].clone()));
    }
    if distinct.len() <= m {
        return Ok(distinct);
    }

    let (mut lo, mut hi) = (
        quantile_sorted(&col, GRID_LOWER_Q),
        quantile_sorted(&col, GRID_UPPER_Q),
    );
    if hi <= lo {
        lo = col[0];
        hi = col[col.len() - 1];
    }
    let step = (hi - lo) / (m - 1) as f64;
    let mut grid: Vec<f64> = (0..m)
        .map(|l| if l == m - 1 { hi } else { lo + step * l as f64 })
        .collect();
    grid.dedup();
    Ok(grid)
}
