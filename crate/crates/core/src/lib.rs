//! Rashomon partial dependence profiles.
//!
//! Train a pool of regression models under a budget, keep the models whose
//! holdout RMSE is within a multiplicative tolerance of the best one, and
//! compare the best model's partial dependence profile against the mean
//! profile of that near-optimal set with percentile-bootstrap bands.
//!
//! ```no_run
//! use rpdp_core::{data, learners, rashomon, pdp, metrics};
//!
//! let ds = data::load_csv("housing.csv", "price")?;
//! let sp = data::split(ds.n_rows(), 0.25, 42)?;
//! let pool = learners::train_pool(&ds, &sp, &learners::SearchBudget::default())?;
//! let set = rashomon::form_set(&pool, 0.05)?;
//! let result = pdp::run_algorithm1(&pool, &set, &ds, &sp, 0, &pdp::PdpParams::default())?;
//! println!("coverage {}", metrics::coverage_rate(&result)?);
//! # Ok::<(), rpdp_core::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod data;
mod error;
pub mod learners;
pub mod metrics;
pub mod numeric;
pub mod pdp;
pub mod rashomon;
pub mod report;
pub mod synthetic;

pub use config::RunConfig;
pub use data::{Dataset, Matrix, Split};
pub use error::{Error, ErrorKind, Result};
pub use learners::{Family, Predictor, SearchBudget, TrainedModel};
pub use metrics::{CorrelationResult, ExplanationMetrics};
pub use pdp::{PdpCurve, PdpParams, RashomonPdpResult};
pub use rashomon::RashomonSet;
pub use report::{PlotLabels, SuiteSummaryRow};
