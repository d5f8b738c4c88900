//! Workflow runner: ingestion, knot selection, basis construction,
//! projection, training, hyperparameter search, classification, evaluation,
//! scenario comparison, and report emission.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numeric failure.

mod commands;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "splinet",
    version,
    about = "Functional-data classification on orthonormal spline bases"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct ConfigArgs {
    /// TOML pipeline configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scenario override: S1, S2 or S3.
    #[arg(long)]
    scenario: Option<String>,
    /// Root seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Internal knot budget override.
    #[arg(long)]
    budget: Option<usize>,
    /// Spline order override.
    #[arg(long)]
    order: Option<usize>,
    /// Use the complete dataset instead of the desk-scale subsets.
    #[arg(long)]
    full_scale: bool,
    /// Cache directory override (also honors SPLINET_CACHE_DIR).
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Read, pad, flatten and split the image data; write curve files.
    Ingest {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "out/ingest")]
        out: PathBuf,
    },
    /// Data-driven knot selection for one class.
    Knots {
        #[command(flatten)]
        config: ConfigArgs,
        /// Class label to select knots for.
        #[arg(long)]
        class: usize,
        /// Selection stage: mean or centered.
        #[arg(long, default_value = "centered")]
        stage: String,
        /// Greedy steps to record.
        #[arg(long)]
        r_max: Option<usize>,
        /// Monte-Carlo replications for the reference curve.
        #[arg(long, default_value_t = 100)]
        replications: usize,
        /// Per-step bootstrap fraction of curves.
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        #[arg(long, default_value = "out/knots")]
        out: PathBuf,
    },
    /// Build a spline basis and emit its dyadic-net table.
    Basis {
        /// JSON knot file: a knot-selection record or a plain array.
        #[arg(long)]
        knots: Option<PathBuf>,
        /// Equidistant alternative: internal knot count over --range.
        #[arg(long)]
        equidistant: Option<usize>,
        /// Range for --equidistant, as "lo,hi".
        #[arg(long, default_value = "0,1")]
        range: String,
        #[arg(long, default_value_t = 3)]
        order: usize,
        /// Basis type: bspline, gram_schmidt, two_sided or splinet.
        #[arg(long = "type", default_value = "splinet")]
        basis_type: String,
        #[arg(long, default_value = "out/basis")]
        out: PathBuf,
    },
    /// Project discretized curves onto a spline space.
    Project {
        /// Common-grid curve file (value columns, argument column last).
        #[arg(long)]
        curves: Option<PathBuf>,
        /// Per-curve two-column files.
        #[arg(long, num_args = 1..)]
        per_curve: Vec<PathBuf>,
        /// JSON knot file as in `basis`.
        #[arg(long)]
        knots: PathBuf,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long = "type", default_value = "splinet")]
        basis_type: String,
        #[arg(long, default_value = "out/project")]
        out: PathBuf,
    },
    /// Select knots and fit every class model.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "out/train")]
        out: PathBuf,
    },
    /// Eigencount search on the validation split against trained models.
    Search {
        #[command(flatten)]
        config: ConfigArgs,
        /// Directory produced by `train`.
        #[arg(long)]
        models: PathBuf,
        #[arg(long, default_value = "out/search")]
        out: PathBuf,
    },
    /// Classify curves with trained models.
    Classify {
        #[command(flatten)]
        config: ConfigArgs,
        /// Directory produced by `train`.
        #[arg(long)]
        models: PathBuf,
        /// Eigenvalue counts per class, comma-separated; defaults to the
        /// outcome stored by `search`.
        #[arg(long)]
        counts: Option<String>,
        /// Search directory holding the stored counts.
        #[arg(long)]
        search: Option<PathBuf>,
        /// Curve file to classify; defaults to the configured test split.
        #[arg(long)]
        curves: Option<PathBuf>,
        #[arg(long, default_value = "out/classify")]
        out: PathBuf,
    },
    /// Metrics from stored prediction and target files.
    Evaluate {
        /// One predicted label per line.
        #[arg(long)]
        predictions: PathBuf,
        /// One target label per line.
        #[arg(long)]
        targets: PathBuf,
        #[arg(long, default_value_t = 10)]
        classes: usize,
        #[arg(long, default_value = "out/evaluate")]
        out: PathBuf,
    },
    /// Full scenario run: knots, training, search, test evaluation, report.
    Scenario {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, default_value = "out/scenario")]
        out: PathBuf,
    },
    /// Render report files from stored run artifacts.
    Report {
        /// Directory holding artifacts.json.
        #[arg(long)]
        artifacts: PathBuf,
        #[arg(long, default_value = "out/report")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
