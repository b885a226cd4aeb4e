//! End-to-end orchestration and the files it writes.
//!
//! A dataset run writes into its output directory:
//!
//! * `summary.csv` - one summary row (same schema as the suite table)
//! * `profile_<feature>.csv` - grid, best, mean, band and member curves
//! * `profile_<feature>.svg` - the profile plot
//! * `metrics.json` - pool, Rashomon set, per-feature metrics, warnings
//! * `config.echo` - the effective configuration
//!
//! File names and contents are a pure function of the configuration.

mod svg;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

pub use svg::{render_profile, render_scatter, PlotLabels};

use crate::config::RunConfig;
use crate::data::{load_csv, split};
use crate::error::{Error, Result};
use crate::learners::{load_pool, save_pool, train_pool, HyperValue, SearchBudget, TrainedModel};
use crate::metrics::{explanation_metrics, spearman, CorrelationResult, ExplanationMetrics};
use crate::numeric::format_g17;
use crate::pdp::{run_algorithm1, PdpParams, RashomonPdpResult};
use crate::rashomon::{form_set, RashomonSet};

pub const SUMMARY_HEADER: [&str; 7] = ["dataset", "BMP", "MSS", "RSS", "RR", "MWCI", "CR"];
const NA: &str = "-";
/// Fewest defined rows the rank correlation is run on.
pub const MIN_CORRELATION_ROWS: usize = 4;

/// One line of the dataset summary table. Ratio and band metrics are `None`
/// when the Rashomon set is a singleton.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteSummaryRow {
    pub dataset: String,
    pub bmp: f64,
    pub mss: usize,
    pub rss: usize,
    pub rr: Option<f64>,
    pub mwci: Option<f64>,
    pub cr: Option<f64>,
}

impl SuiteSummaryRow {
    pub fn is_defined(&self) -> bool {
        self.rr.is_some() && self.cr.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct FeatureReport {
    pub result: RashomonPdpResult,
    pub metrics: ExplanationMetrics,
}

#[derive(Debug, Clone)]
pub struct DatasetReport {
    pub row: SuiteSummaryRow,
    pub rashomon: RashomonSet,
    pub pool: Vec<TrainedModel>,
    pub features: Vec<FeatureReport>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Reuse a previously saved pool instead of training.
    pub load_pool: Option<PathBuf>,
    pub save_pool: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationReport {
    pub n_rows: usize,
    pub n_defined: usize,
    pub correlation: Option<CorrelationResult>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub rows: Vec<SuiteSummaryRow>,
    pub correlation: CorrelationReport,
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents).map_err(|e| Error::io(path, e))
}

/// Keeps file names portable: anything outside `[A-Za-z0-9._-]` becomes `_`.
pub fn sanitize(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || "._-".contains(c) {
                c
            } else {
                '_'
            }
        })
        .collect();
    if s.is_empty() {
        "_".into()
    } else {
        s
    }
}

fn opt_cell(v: Option<f64>) -> String {
    v.map_or_else(|| NA.to_string(), format_g17)
}

pub fn write_summary_csv<W: Write>(rows: &[SuiteSummaryRow], writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(SUMMARY_HEADER)?;
    for r in rows {
        wtr.write_record([
            r.dataset.clone(),
            format_g17(r.bmp),
            r.mss.to_string(),
            r.rss.to_string(),
            opt_cell(r.rr),
            opt_cell(r.mwci),
            opt_cell(r.cr),
        ])?;
    }
    wtr.flush().map_err(|e| Error::io("<summary writer>", e))?;
    Ok(())
}

fn parse_cell(raw: &str, column: &str, row: usize) -> Result<Option<f64>> {
    if raw == NA {
        return Ok(None);
    }
    raw.parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .map(Some)
        .ok_or_else(|| Error::NonNumericFeature {
            column: column.to_string(),
            row,
            value: raw.to_string(),
        })
}

/// Reads a summary table (`dataset,BMP,MSS,RSS,RR,MWCI,CR`, `-` for n/a).
pub fn read_summary_csv<R: std::io::Read>(reader: R) -> Result<Vec<SuiteSummaryRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != SUMMARY_HEADER {
        return Err(Error::Config(format!(
            "summary header must be {}, got {}",
            SUMMARY_HEADER.join(","),
            header.join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let count = |c: usize| -> Result<usize> {
            rec[c].parse().map_err(|_| Error::NonNumericFeature {
                column: SUMMARY_HEADER[c].into(),
                row: i,
                value: rec[c].to_string(),
            })
        };
        rows.push(SuiteSummaryRow {
            dataset: rec[0].to_string(),
            bmp: parse_cell(&rec[1], "BMP", i)?.ok_or_else(|| Error::NonNumericFeature {
                column: "BMP".into(),
                row: i,
                value: NA.into(),
            })?,
            mss: count(2)?,
            rss: count(3)?,
            rr: parse_cell(&rec[4], "RR", i)?,
            mwci: parse_cell(&rec[5], "MWCI", i)?,
            cr: parse_cell(&rec[6], "CR", i)?,
        });
    }
    Ok(rows)
}

pub fn load_summary_csv(path: impl AsRef<Path>) -> Result<Vec<SuiteSummaryRow>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_summary_csv(file)
}

/// Profile table: `grid, best, mean, ci_lo, ci_hi, model_<id>...`.
pub fn write_profile_csv<W: Write>(result: &RashomonPdpResult, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = ["grid", "best", "mean", "ci_lo", "ci_hi"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(result.per_model.iter().map(|c| {
        format!(
            "model_{}",
            c.model_id.map_or(String::from("na"), |id| id.to_string())
        )
    }));
    wtr.write_record(&header)?;
    for l in 0..result.grid.len() {
        let mut rec = vec![
            format_g17(result.grid[l]),
            format_g17(result.best_curve.values[l]),
            format_g17(result.mean[l]),
            format_g17(result.ci_lo[l]),
            format_g17(result.ci_hi[l]),
        ];
        rec.extend(result.per_model.iter().map(|c| format_g17(c.values[l])));
        wtr.write_record(&rec)?;
    }
    wtr.flush().map_err(|e| Error::io("<profile writer>", e))?;
    Ok(())
}

pub fn emit_svg(
    result: &RashomonPdpResult,
    labels: &PlotLabels,
    path: impl AsRef<Path>,
) -> Result<()> {
    write_file(path.as_ref(), render_profile(result, labels).as_bytes())
}

/// Summary row for a dataset. Band metrics are averaged over the profiled
/// features.
pub fn summarize(dataset: &str, rset: &RashomonSet, features: &[FeatureReport]) -> SuiteSummaryRow {
    let defined = !rset.is_singleton() && !features.is_empty();
    let avg = |f: fn(&ExplanationMetrics) -> f64| {
        defined.then(|| features.iter().map(|r| f(&r.metrics)).sum::<f64>() / features.len() as f64)
    };
    SuiteSummaryRow {
        dataset: dataset.to_string(),
        bmp: rset.best_score,
        mss: rset.pool_size,
        rss: rset.rss,
        rr: (!rset.is_singleton()).then_some(rset.rr),
        mwci: avg(|m| m.mwci),
        cr: avg(|m| m.cr),
    }
}

#[derive(Serialize)]
struct PoolEntry<'a> {
    id: usize,
    family: String,
    hyperparameters: &'a std::collections::BTreeMap<String, HyperValue>,
    score: f64,
    member: bool,
}

#[derive(Serialize)]
struct FeatureEntry<'a> {
    feature: &'a str,
    index: usize,
    grid_points: usize,
    pdp_rows: usize,
    mwci: f64,
    cr: f64,
    defined: bool,
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    dataset: &'a str,
    config: std::collections::BTreeMap<&'static str, String>,
    pool: Vec<PoolEntry<'a>>,
    rashomon: &'a RashomonSet,
    features: Vec<FeatureEntry<'a>>,
    summary: &'a SuiteSummaryRow,
    warnings: &'a [String],
}

fn metrics_json(cfg: &RunConfig, report: &DatasetReport) -> Result<String> {
    let file = MetricsFile {
        dataset: &report.row.dataset,
        config: cfg.echo_pairs().into_iter().collect(),
        pool: report
            .pool
            .iter()
            .map(|m| PoolEntry {
                id: m.id,
                family: m.family.to_string(),
                hyperparameters: &m.hyperparameters,
                score: m.score,
                member: report.rashomon.contains(m.id),
            })
            .collect(),
        rashomon: &report.rashomon,
        features: report
            .features
            .iter()
            .map(|f| FeatureEntry {
                feature: &f.result.feature_name,
                index: f.result.feature_index,
                grid_points: f.result.grid.len(),
                pdp_rows: f.result.n_rows,
                mwci: f.metrics.mwci,
                cr: f.metrics.cr,
                defined: f.metrics.defined,
            })
            .collect(),
        summary: &report.row,
        warnings: &report.warnings,
    };
    let mut s = serde_json::to_string_pretty(&file).map_err(|e| Error::invalid(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Runs the whole pipeline for one dataset and writes its output directory.
pub fn run_dataset(cfg: &RunConfig) -> Result<DatasetReport> {
    run_dataset_with(cfg, &RunOptions::default())
}

pub fn run_dataset_with(cfg: &RunConfig, opts: &RunOptions) -> Result<DatasetReport> {
    cfg.validate()?;
    let name = cfg.dataset_name();
    run_inner(cfg, opts, &name).map_err(|e| e.in_dataset(&name))
}

fn run_inner(cfg: &RunConfig, opts: &RunOptions, name: &str) -> Result<DatasetReport> {
    let mut ds = load_csv(&cfg.data_path, &cfg.target_column)?;
    ds.name = name.to_string();

    let explicit = !cfg.features.is_empty();
    let features: Vec<usize> = if explicit {
        cfg.features
            .iter()
            .map(|f| ds.feature_index(f))
            .collect::<Result<_>>()?
    } else {
        (0..ds.n_features()).collect()
    };

    let sp = split(ds.n_rows(), cfg.test_fraction, cfg.seed)?;
    let pool = match &opts.load_pool {
        Some(path) => load_pool(path, &ds)?,
        None => train_pool(
            &ds,
            &sp,
            &SearchBudget {
                max_models: cfg.max_models,
                max_runtime_secs: cfg.max_runtime_secs,
                seed: cfg.seed,
            },
        )?,
    };
    if let Some(path) = &opts.save_pool {
        save_pool(path, &pool, &ds)?;
    }
    let rset = form_set(&pool, cfg.epsilon)?;

    let params = PdpParams {
        grid_size: cfg.grid_m,
        bootstrap: cfg.bootstrap_b,
        alpha: cfg.alpha,
        seed: cfg.seed,
        max_rows: cfg.pdp_rows,
    };
    let mut warnings = Vec::new();
    if rset.is_singleton() {
        warnings.push("Rashomon set has a single member; band metrics are not applicable".into());
    }
    let mut reports = Vec::with_capacity(features.len());
    for &j in &features {
        match run_algorithm1(&pool, &rset, &ds, &sp, j, &params) {
            Ok(result) => {
                let metrics = explanation_metrics(&result, rset.rss)?;
                reports.push(FeatureReport { result, metrics });
            }
            Err(Error::ConstantFeature(f)) if !explicit => {
                warnings.push(format!("skipped feature `{f}`: constant on training rows"));
            }
            Err(e) => return Err(e),
        }
    }

    let report = DatasetReport {
        row: summarize(name, &rset, &reports),
        rashomon: rset,
        pool,
        features: reports,
        warnings,
    };
    write_dataset_outputs(cfg, &report)?;
    Ok(report)
}

fn write_dataset_outputs(cfg: &RunConfig, report: &DatasetReport) -> Result<()> {
    let out = &cfg.out_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let labels = PlotLabels {
        dataset: report.row.dataset.clone(),
        target: cfg.target_column.clone(),
        epsilon: cfg.epsilon,
        show_members: true,
    };
    for f in &report.features {
        let stem = format!("profile_{}", sanitize(&f.result.feature_name));
        let mut buf = Vec::new();
        write_profile_csv(&f.result, &mut buf)?;
        write_file(&out.join(format!("{stem}.csv")), &buf)?;
        emit_svg(&f.result, &labels, out.join(format!("{stem}.svg")))?;
    }
    let mut buf = Vec::new();
    write_summary_csv(std::slice::from_ref(&report.row), &mut buf)?;
    write_file(&out.join("summary.csv"), &buf)?;
    write_file(
        &out.join("metrics.json"),
        metrics_json(cfg, report)?.as_bytes(),
    )?;
    write_file(&out.join("config.echo"), cfg.echo().as_bytes())?;
    Ok(())
}

/// Rank correlation of RR against CR over rows with defined metrics.
pub fn correlate_rows(rows: &[SuiteSummaryRow]) -> Result<CorrelationReport> {
    let defined: Vec<&SuiteSummaryRow> = rows.iter().filter(|r| r.is_defined()).collect();
    let mut warnings = Vec::new();
    let correlation = if defined.len() < MIN_CORRELATION_ROWS {
        warnings.push(format!(
            "correlation skipped: {} defined rows, need at least {MIN_CORRELATION_ROWS}",
            defined.len()
        ));
        None
    } else {
        let rr: Vec<f64> = defined.iter().map(|r| r.rr.expect("defined")).collect();
        let cr: Vec<f64> = defined.iter().map(|r| r.cr.expect("defined")).collect();
        match spearman(&rr, &cr) {
            Ok(c) => Some(c),
            Err(e) => {
                warnings.push(format!("correlation skipped: {e}"));
                None
            }
        }
    };
    Ok(CorrelationReport {
        n_rows: rows.len(),
        n_defined: defined.len(),
        correlation,
        warnings,
    })
}

fn write_correlation_outputs(
    out: &Path,
    rows: &[SuiteSummaryRow],
    report: &CorrelationReport,
) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let mut json =
        serde_json::to_string_pretty(report).map_err(|e| Error::invalid(e.to_string()))?;
    json.push('\n');
    write_file(&out.join("correlation.json"), json.as_bytes())?;

    let caption = match &report.correlation {
        Some(c) => format!(
            "Spearman rho = {:.2}, 95% CI [{:.2}, {:.2}], p = {:.3}, n = {}",
            c.rho, c.ci_lo, c.ci_hi, c.p_value, c.n_pairs
        ),
        None => "Spearman correlation not computed".to_string(),
    };
    let points: Vec<(String, f64, f64)> = rows
        .iter()
        .filter(|r| r.is_defined())
        .map(|r| {
            (
                r.dataset.clone(),
                r.rr.expect("defined"),
                r.cr.expect("defined"),
            )
        })
        .collect();
    write_file(
        &out.join("correlation.svg"),
        render_scatter(&points, &caption).as_bytes(),
    )
}

/// Analysis-only mode: correlation over a precomputed summary table.
pub fn correlate(summary: impl AsRef<Path>, out: impl AsRef<Path>) -> Result<CorrelationReport> {
    let rows = load_summary_csv(summary)?;
    if rows.is_empty() {
        return Err(Error::invalid("summary table has no rows"));
    }
    let report = correlate_rows(&rows)?;
    write_correlation_outputs(out.as_ref(), &rows, &report)?;
    Ok(report)
}

/// Runs every dataset into `out/<dataset>/`, then writes the combined
/// `summary.csv` and the correlation outputs into `out`.
pub fn run_suite(configs: &[RunConfig], out: impl AsRef<Path>) -> Result<SuiteReport> {
    if configs.is_empty() {
        return Err(Error::Config("suite has no datasets".into()));
    }
    let out = out.as_ref();
    let mut rows = Vec::with_capacity(configs.len());
    for cfg in configs {
        let mut cfg = cfg.clone();
        cfg.out_dir = out.join(sanitize(&cfg.dataset_name()));
        rows.push(run_dataset(&cfg)?.row);
    }
    let mut buf = Vec::new();
    write_summary_csv(&rows, &mut buf)?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    write_file(&out.join("summary.csv"), &buf)?;
    let correlation = correlate_rows(&rows)?;
    write_correlation_outputs(out, &rows, &correlation)?;
    Ok(SuiteReport { rows, correlation })
}

/// Reads a suite file: one config path per line, relative to the suite
/// file, with `#` comments.
pub fn load_suite(path: impl AsRef<Path>) -> Result<Vec<RunConfig>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| RunConfig::from_file(dir.join(l)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(name: &str, rss: usize, rr: Option<f64>, cr: Option<f64>) -> SuiteSummaryRow {
        SuiteSummaryRow {
            dataset: name.into(),
            bmp: 1.5,
            mss: 10,
            rss,
            rr,
            mwci: cr.map(|_| 0.25),
            cr,
        }
    }

    #[test]
    fn summary_csv_round_trips_with_na() {
        let rows = vec![row("a", 3, Some(0.3), Some(0.1)), row("b", 1, None, None)];
        let mut buf = Vec::new();
        write_summary_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dataset,BMP,MSS,RSS,RR,MWCI,CR\n"));
        assert!(text.contains("b,1.5,10,1,-,-,-"));
        assert_eq!(read_summary_csv(buf.as_slice()).unwrap(), rows);
    }

    #[test]
    fn summary_header_checked() {
        assert!(read_summary_csv("name,BMP\nx,1\n".as_bytes()).is_err());
    }

    #[test]
    fn three_rows_skip_correlation() {
        let rows = vec![
            row("a", 3, Some(0.3), Some(0.1)),
            row("b", 2, Some(0.2), Some(0.5)),
            row("c", 4, Some(0.4), Some(0.2)),
            row("d", 1, None, None),
        ];
        let rep = correlate_rows(&rows).unwrap();
        assert!(rep.correlation.is_none());
        assert_eq!(rep.n_defined, 3);
        assert_eq!(rep.warnings.len(), 1);
    }

    #[test]
    fn sanitize_names() {
        assert_eq!(sanitize("x1"), "x1");
        assert_eq!(sanitize("surface area/m²"), "surface_area_m_");
        assert_eq!(sanitize(""), "_");
    }

    #[test]
    fn empty_suite_rejected() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(run_suite(&[], dir.path()), Err(Error::Config(_))));
    }
}
