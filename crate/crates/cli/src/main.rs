//! `rpdp`: Rashomon partial dependence profiles from the command line.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 runtime failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rpdp_core::numeric::format_g17;
use rpdp_core::report::{self, RunOptions};
use rpdp_core::{Error, ErrorKind, RunConfig};

#[derive(Parser)]
#[command(name = "rpdp", version, about = "Rashomon partial dependence profiles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

// parsed once per process, so the variant size does not matter
#[allow(clippy::large_enum_variant)]
#[derive(Subcommand)]
enum Command {
    /// Train a model pool on one dataset and profile its Rashomon set.
    #[command(allow_negative_numbers = true)]
    Explain(ExplainArgs),
    /// Run every dataset listed in a suite file, then correlate RR with CR.
    Suite {
        /// File with one config path per line (relative to the file).
        #[arg(long)]
        configs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank-correlate RR against CR over an existing summary table.
    Correlate {
        #[arg(long)]
        summary: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ExplainArgs {
    /// `key = value` config file; flags given here override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    target: Option<String>,
    /// Feature to profile; repeat for several. Defaults to every feature.
    #[arg(long = "feature")]
    features: Vec<String>,
    /// Dataset label used in outputs; defaults to the data file stem.
    #[arg(long)]
    name: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_models: Option<usize>,
    #[arg(long)]
    max_runtime_secs: Option<f64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    bootstrap: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Cap on training rows averaged per grid point (0 = all).
    #[arg(long)]
    pdp_rows: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the trained pool to this archive.
    #[arg(long)]
    save_pool: Option<PathBuf>,
    /// Skip training and reuse a pool archive.
    #[arg(long)]
    load_pool: Option<PathBuf>,
}

impl ExplainArgs {
    fn to_config(&self) -> rpdp_core::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_file(path).map_err(|e| match e {
                // an unreadable config file is a usage problem, not a data one
                Error::Io { .. } => Error::Config(e.to_string()),
                e => e,
            })?,
            None => RunConfig::default(),
        };
        if let Some(v) = &self.data {
            cfg.data_path = v.clone();
        }
        if let Some(v) = &self.target {
            cfg.target_column = v.clone();
        }
        if !self.features.is_empty() {
            cfg.features = self.features.clone();
        }
        if let Some(v) = &self.name {
            cfg.name = Some(v.clone());
        }
        if let Some(v) = &self.out {
            cfg.out_dir = v.clone();
        } else if self.config.is_none() {
            return Err(Error::Config("missing `--out`".into()));
        }
        macro_rules! take {
            ($($flag:ident => $field:ident),*) => {
                $(if let Some(v) = self.$flag { cfg.$field = v; })*
            };
        }
        take!(
            epsilon => epsilon,
            max_models => max_models,
            max_runtime_secs => max_runtime_secs,
            test_fraction => test_fraction,
            grid => grid_m,
            bootstrap => bootstrap_b,
            alpha => alpha,
            seed => seed,
            pdp_rows => pdp_rows
        );
        cfg.validate()?;
        Ok(cfg)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_g17).unwrap_or_else(|| "-".into())
}

fn explain(args: &ExplainArgs) -> rpdp_core::Result<()> {
    let cfg = args.to_config()?;
    let opts = RunOptions {
        load_pool: args.load_pool.clone(),
        save_pool: args.save_pool.clone(),
    };
    let rep = report::run_dataset_with(&cfg, &opts)?;
    for w in &rep.warnings {
        eprintln!("warning: {w}");
    }
    let r = &rep.row;
    println!(
        "{}: BMP {} MSS {} RSS {} RR {} MWCI {} CR {}",
        r.dataset,
        format_g17(r.bmp),
        r.mss,
        r.rss,
        opt(r.rr),
        opt(r.mwci),
        opt(r.cr)
    );
    for f in &rep.features {
        println!(
            "  {}: MWCI {} CR {}",
            f.result.feature_name,
            format_g17(f.metrics.mwci),
            format_g17(f.metrics.cr)
        );
    }
    println!("outputs in {}", cfg.out_dir.display());
    Ok(())
}

fn print_correlation(c: &report::CorrelationReport) {
    for w in &c.warnings {
        eprintln!("warning: {w}");
    }
    match &c.correlation {
        Some(r) => println!(
            "Spearman rho {:.4}, 95% CI [{:.4}, {:.4}], p {:.4e}, n {} of {} rows",
            r.rho, r.ci_lo, r.ci_hi, r.p_value, r.n_pairs, c.n_rows
        ),
        None => println!(
            "correlation not computed ({} defined of {} rows)",
            c.n_defined, c.n_rows
        ),
    }
}

fn run(cli: Cli) -> rpdp_core::Result<()> {
    match cli.command {
        Command::Explain(args) => explain(&args),
        Command::Suite { configs, out } => {
            let cfgs = report::load_suite(&configs).map_err(|e| match e {
                Error::Io { .. } => Error::Config(e.to_string()),
                e => e,
            })?;
            let rep = report::run_suite(&cfgs, &out)?;
            for r in &rep.rows {
                println!(
                    "{}: RSS {} RR {} CR {}",
                    r.dataset,
                    r.rss,
                    opt(r.rr),
                    opt(r.cr)
                );
            }
            print_correlation(&rep.correlation);
            println!("outputs in {}", out.display());
            Ok(())
        }
        Command::Correlate { summary, out } => {
            let rep = report::correlate(&summary, &out)?;
            print_correlation(&rep);
            println!("outputs in {}", out.display());
            Ok(())
        }
    }
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 1,
        ErrorKind::Data => 2,
        ErrorKind::Runtime => 3,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
