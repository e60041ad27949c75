//! Command-line front end: argument parsing, config resolution and output
//! files. Every output starts with the tool version and the resolved
//! configuration, so identical headers mean identical runs.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use config::{CliError, CliResult, ConfigFile, Resolver};
use config::{EXIT_CONFIG, EXIT_OK};

#[derive(Debug, Parser)]
#[command(name = "sle-kappa", version, about = "SLE traces and exponent checks")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Dyadic level of the Brownian sample (2^level steps on [0, 1]).
    #[arg(long, global = true)]
    pub level: Option<u32>,
    /// Radial cutoff for trace points.
    #[arg(long, global = true)]
    pub y0: Option<f64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat key=value file; flags take precedence.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DriverArg {
    Zero,
    Constant,
    Linear,
    Sqrt,
    Brownian,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Trace points gamma(t) as CSV.
    Trace(TraceArgs),
    /// Exponent table as CSV.
    Exponents(ExponentsArgs),
    /// Perturbation bound check on a pair of Brownian chains (JSON).
    VerifyBounds(VerifyArgs),
    /// Moments of |F'| at corner points (JSON).
    MomentScan(ScanArgs),
    /// Tail frequencies of |F'| at corner points (JSON).
    TailScan(ScanArgs),
    /// Sup distance between traces for nearby kappa (JSON).
    ContinuityScan(ContinuityArgs),
    /// Box image diameters (CSV) and decay fit (JSON).
    WhitneyScan(WhitneyArgs),
}

#[derive(Debug, Args)]
pub struct TraceArgs {
    #[arg(long, value_enum)]
    pub driver: Option<DriverArg>,
    /// Coefficient of the deterministic driver.
    #[arg(long)]
    pub c: Option<f64>,
    /// Steps of a deterministic driver.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Horizon of a deterministic driver.
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Comma-separated kappa values for the Brownian driver.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub kappa: Vec<f64>,
    /// Number of time intervals in the output grid.
    #[arg(long)]
    pub points: Option<usize>,
    /// Read the driving function from a file instead.
    #[arg(long)]
    pub driving_file: Option<PathBuf>,
    /// Write the (first) driving function to this file.
    #[arg(long)]
    pub save_driving: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExponentsArgs {
    /// Explicit kappa values; overrides the grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub kappa: Vec<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa_min: Option<f64>,
    #[arg(long)]
    pub kappa_max: Option<f64>,
    #[arg(long)]
    pub kappa_steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    /// Second kappa; defaults to kappa + 2^-6.
    #[arg(long, allow_hyphen_values = true)]
    pub kappa2: Option<f64>,
    /// Number of t values k/t_points, k = 1..t_points.
    #[arg(long)]
    pub t_points: Option<usize>,
    /// y values 2^-1 .. 2^-y_exp.
    #[arg(long)]
    pub y_exp: Option<u32>,
    /// Real parts of the evaluation points.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub n: Option<u32>,
    /// Comma-separated j values.
    #[arg(long, value_delimiter = ',')]
    pub j_list: Vec<u64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// 1000 samples unless --samples is given.
    #[arg(long)]
    pub quick: bool,
    /// Per-sample |F'| values as CSV.
    #[arg(long)]
    pub raw: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ContinuityArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub kappa_base: Option<f64>,
    /// Comma-separated kappa increments.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub dkappa: Vec<f64>,
    /// Time grid k/t_points, k = 0..t_points.
    #[arg(long)]
    pub t_points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct WhitneyArgs {
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa_max: Option<f64>,
    #[arg(long)]
    pub n_min: Option<u32>,
    #[arg(long)]
    pub n_max: Option<u32>,
    #[arg(long)]
    pub boxes: Option<usize>,
    /// Sub-grid size per axis.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub box_seed: Option<u64>,
    /// JSON summary path (defaults to the CSV path with a .json extension).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

/// Runs the tool and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}

fn execute(cli: Cli) -> CliResult<()> {
    let file = match &cli.common.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let mut res = Resolver::new(file);
    let threads = res.get_quiet("threads", cli.common.threads)?;
    if threads == Some(0) {
        return Err(CliError::config("--threads must be at least 1"));
    }
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            b = b.num_threads(n);
        }
        b.build()
            .map_err(|e| CliError::config(format!("thread pool: {e}")))?
    };
    pool.install(|| commands::dispatch(&cli, &mut res))
}
