//! `smoothcd` command-line front end.

mod bench;
mod check;
mod constants;
mod solve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Failure classes with their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration (exit 2).
    Usage(String),
    /// The command ran but failed (exit 1).
    Runtime(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Runtime(m) => m,
        }
    }
}

/// Configuration problems are usage errors; everything else is a runtime failure.
impl From<smoothcd::Error> for CliError {
    fn from(e: smoothcd::Error) -> Self {
        use smoothcd::Error as E;
        match e {
            E::Argument(_) | E::Config(_) | E::Json(_) | E::Toml(_) | E::Dimension { .. } => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "smoothcd", version, about = "Randomized coordinate descent on smoothed composite problems")]
#[command(after_help = "Environment:\n  SMOOTHCD_THREADS  cap on the worker pool used by `bench` (default: all cores)\n\n\
Exit codes:\n  0 success, 1 runtime failure, 2 usage or configuration error")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one problem described by a run configuration file.
    Solve(SolveArgs),
    /// Run an experiment grid (smoothings x solvers x repeats).
    Bench(BenchArgs),
    /// Run the invariant check suites.
    Check(CheckArgs),
    /// Evaluate the rate-constant calculators.
    #[command(subcommand)]
    Constants(constants::ConstantsCmd),
}

/// Overrides shared by `solve` and `bench`. Precedence: flag, then file, then default.
#[derive(Args, Debug, Default, Clone)]
pub struct Overrides {
    /// Smoothing parameter (file value, else 1 for moreau, 0.5/L for fb and dr, 0.1/(2 D) for ns)
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Sampling exponent in [0, 1] (file value, else 0)
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Solver seed (file value, else 0); for `bench` also the problem seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Gradient-norm tolerance (file value, else 0.1)
    #[arg(long)]
    pub tol: Option<f64>,
    /// Epoch budget (file value, else 1000)
    #[arg(long)]
    pub epochs: Option<usize>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Run configuration (JSON)
    config: PathBuf,
    /// Smoothing: moreau, fb, dr or ns (file value, required for composite problems)
    #[arg(long)]
    smoothing: Option<String>,
    /// Solver: cd, accd or restart (file value, else cd)
    #[arg(long)]
    solver: Option<String>,
    /// Trace CSV path (file value, else trace.csv in the working directory)
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Experiment spec (JSON, or TOML with a .toml extension)
    spec: PathBuf,
    /// Output directory (file value)
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Debug)]
struct CheckArgs {
    /// Run only this suite: prox, smoothing, lipschitz, solvers or bregman (default: all)
    #[arg(long)]
    suite: Option<String>,
    /// Seed of the sampled instances
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Multiply every published L_i by this factor before the Lipschitz suite (fault injection)
    #[arg(long, default_value_t = 1.0)]
    lipschitz_scale: f64,
}

fn dispatch(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve(a) => solve::run(&a.config, a.smoothing.as_deref(), a.solver.as_deref(), a.out, &a.overrides),
        Command::Bench(a) => bench::run(&a.spec, a.out, &a.overrides),
        Command::Check(a) => check::run(a.suite.as_deref(), a.seed, a.lipschitz_scale),
        Command::Constants(c) => constants::run(c),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
