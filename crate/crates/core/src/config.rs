//! Run configuration and its flat `key = value` text form.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::numeric::format_g17;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Dataset label; defaults to the data file stem.
    pub name: Option<String>,
    pub data_path: PathBuf,
    pub target_column: String,
    /// Features to profile; empty means every feature.
    pub features: Vec<String>,
    pub epsilon: f64,
    pub max_models: usize,
    pub max_runtime_secs: f64,
    pub test_fraction: f64,
    pub grid_m: usize,
    pub bootstrap_b: usize,
    pub alpha: f64,
    pub seed: u64,
    pub pdp_rows: usize,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            name: None,
            data_path: PathBuf::new(),
            target_column: String::new(),
            features: Vec::new(),
            epsilon: crate::rashomon::DEFAULT_EPSILON,
            max_models: 20,
            max_runtime_secs: 360.0,
            test_fraction: crate::data::DEFAULT_TEST_FRACTION,
            grid_m: crate::data::DEFAULT_GRID_SIZE,
            bootstrap_b: crate::pdp::DEFAULT_BOOTSTRAP,
            alpha: crate::pdp::DEFAULT_ALPHA,
            seed: 42,
            pdp_rows: crate::pdp::DEFAULT_MAX_PDP_ROWS,
            out_dir: PathBuf::from("out"),
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value for `{key}`: `{value}`")))
}

impl RunConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "name" => self.name = Some(value.to_string()),
            "data" => self.data_path = PathBuf::from(value),
            "target" => self.target_column = value.to_string(),
            "features" => {
                self.features = value
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect()
            }
            "epsilon" => self.epsilon = parse_num(key, value)?,
            "max_models" => self.max_models = parse_num(key, value)?,
            "max_runtime_secs" => self.max_runtime_secs = parse_num(key, value)?,
            "test_fraction" => self.test_fraction = parse_num(key, value)?,
            "grid" => self.grid_m = parse_num(key, value)?,
            "bootstrap" => self.bootstrap_b = parse_num(key, value)?,
            "alpha" => self.alpha = parse_num(key, value)?,
            "seed" => self.seed = parse_num(key, value)?,
            "pdp_rows" => self.pdp_rows = parse_num(key, value)?,
            "out" => self.out_dir = PathBuf::from(value),
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` text on top of the defaults. Blank lines and
    /// `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Reads a config file; a relative `data` path is taken relative to the
    /// file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = RunConfig::parse(&text)?;
        if cfg.data_path.is_relative() {
            if let Some(dir) = path.parent() {
                cfg.data_path = dir.join(&cfg.data_path);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.data_path.as_os_str().is_empty() {
            return fail("missing `data`");
        }
        if self.target_column.is_empty() {
            return fail("missing `target`");
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return fail("`epsilon` must be positive");
        }
        if self.max_models == 0 {
            return fail("`max_models` must be at least 1");
        }
        if !(self.max_runtime_secs > 0.0) {
            return fail("`max_runtime_secs` must be positive");
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return fail("`test_fraction` must lie in (0, 1)");
        }
        if self.grid_m < 2 {
            return fail("`grid` must be at least 2");
        }
        if self.bootstrap_b == 0 {
            return fail("`bootstrap` must be at least 1");
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return fail("`alpha` must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn dataset_name(&self) -> String {
        self.name.clone().unwrap_or_else(|| {
            self.data_path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "dataset".into())
        })
    }

    /// Effective settings as ordered `(key, value)` pairs. The output
    /// directory is left out so that outputs depend only on the analysis.
    pub fn echo_pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("name", self.dataset_name()),
            ("data", self.data_path.display().to_string()),
            ("target", self.target_column.clone()),
            ("features", self.features.join(",")),
            ("epsilon", format_g17(self.epsilon)),
            ("max_models", self.max_models.to_string()),
            ("max_runtime_secs", format_g17(self.max_runtime_secs)),
            ("test_fraction", format_g17(self.test_fraction)),
            ("grid", self.grid_m.to_string()),
            ("bootstrap", self.bootstrap_b.to_string()),
            ("alpha", format_g17(self.alpha)),
            ("seed", self.seed.to_string()),
            ("pdp_rows", self.pdp_rows.to_string()),
        ]
    }

    pub fn echo(&self) -> String {
        self.echo_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
