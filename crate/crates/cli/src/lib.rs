//! `defectkit`: command-line front end for the defect-dynamics library.
//!
//! Exit codes: 0 success, 1 validation or domain error, 2 I/O error,
//! 3 numerical non-convergence.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod output;

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Io(String),
    NonConvergence(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
            CliError::NonConvergence(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Validation(m) | CliError::Io(m) | CliError::NonConvergence(m) => m,
        }
    }
}

impl From<defect_dynamics::Error> for CliError {
    fn from(e: defect_dynamics::Error) -> Self {
        use defect_dynamics::ErrorKind;
        let msg = e.to_string();
        match e.kind() {
            ErrorKind::Validation => CliError::Validation(msg),
            ErrorKind::Io => CliError::Io(msg),
            ErrorKind::NonConvergence => CliError::NonConvergence(msg),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "defectkit",
    version,
    about = "Defect metrics, revision forecasts and arrival fits"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a defects CSV against a product registry and write a ledger.
    Ingest(IngestArgs),
    /// Quality metrics per product from a ledger.
    Metrics(MetricsArgs),
    /// Revisions to sign-off for given injection and removal rates.
    Forecast(ForecastArgs),
    /// Expected issues from model size, or fit both size models to data.
    Estimate(EstimateArgs),
    /// Fit a Rayleigh curve to a defect-arrival series.
    FitArrival(FitArrivalArgs),
    /// Metrics, arrival fit and an SVG chart for a ledger.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub defects: PathBuf,
    #[arg(long)]
    pub products: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long)]
    pub ledger: PathBuf,
    #[arg(long)]
    pub product: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Trailing window for the removal rate, in days.
    #[arg(long, default_value_t = 7)]
    pub window_days: u32,
}

#[derive(Debug, Args)]
pub struct ForecastArgs {
    /// Units of work (unique formulas).
    #[arg(long)]
    pub units: Option<u64>,
    /// Defect injection rate as a fraction, e.g. 0.07.
    #[arg(long)]
    pub dir: Option<f64>,
    /// Defect removal efficiency as a fraction, e.g. 0.75.
    #[arg(long)]
    pub dre: Option<f64>,
    /// Named preset: end-user, audited, informal-review, formal-inspection.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long, default_value_t = defect_dynamics::revision::DEFAULT_THRESHOLD)]
    pub threshold: f64,
    #[arg(long, requires = "seed")]
    pub monte_carlo: bool,
    #[arg(long, default_value_t = 10_000, requires = "monte_carlo")]
    pub trials: u64,
    #[arg(long, requires = "monte_carlo")]
    pub seed: Option<u64>,
    /// Emit the DRE × DIR revision table and its comparison with the
    /// published values instead of a single forecast.
    #[arg(long, conflicts_with_all = ["monte_carlo", "dir", "dre", "preset"])]
    pub table: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Also write the trajectory as an SVG chart.
    #[arg(long, conflicts_with = "table")]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelChoice {
    Linear,
    Sqrt,
    Both,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[arg(long, required_unless_present = "fit", conflicts_with = "fit")]
    pub uf: Option<u64>,
    /// Scatter CSV with columns uf,issues.
    #[arg(long)]
    pub fit: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "both")]
    pub model: ModelChoice,
    /// Chart of the scatter and fitted curves (with --fit).
    #[arg(long, requires = "fit")]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArrivalArgs {
    /// CSV with columns bucket_start,count.
    #[arg(long)]
    pub series: PathBuf,
    #[arg(long)]
    pub bucket_days: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Residual defect count that counts as releasable.
    #[arg(long)]
    pub residual: Option<f64>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub ledger: PathBuf,
    #[arg(long)]
    pub svg: PathBuf,
    #[arg(long)]
    pub product: Option<String>,
    #[arg(long, default_value_t = 7.0)]
    pub bucket_days: f64,
}

/// Parses `argv` (program name first) and runs the command. Documents go to
/// `stdout` or their files; diagnostics go to `stderr`.
pub fn run<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => 0,
                _ => 1,
            };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    match commands::dispatch(cli.command, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message());
            e.exit_code()
        }
    }
}
