//! `blexpo`: command-line frontend for strong Brascamp-Lieb exponent computations.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use blexpo_core::surfaces::{Bound, Letter};

/// Exit code for a successful run.
pub const EXIT_OK: u8 = 0;
/// Exit code for malformed command lines.
pub const EXIT_USAGE: u8 = 1;
/// Exit code for numerical non-convergence.
pub const EXIT_CONVERGENCE: u8 = 2;
/// Exit code for invalid distributions, orders or levels.
pub const EXIT_INVALID: u8 = 3;
/// Exit code when any verified bound fails.
pub const EXIT_VERIFICATION: u8 = 4;

#[derive(Debug, Parser)]
#[command(name = "blexpo", version, about = "Strong Brascamp-Lieb exponents on finite alphabets")]
struct Cli {
    #[command(flatten)]
    run: RunArgs,
    #[command(subcommand)]
    command: Command,
}

/// Logarithm base of the reported values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
pub enum Base {
    /// Natural logarithm (nats).
    #[value(name = "e")]
    E,
    /// Binary logarithm (bits).
    #[value(name = "2")]
    Two,
}

impl Base {
    /// Factor converting nats to this base.
    pub fn factor(self) -> f64 {
        match self {
            Base::E => 1.0,
            Base::Two => std::f64::consts::LOG2_E,
        }
    }
}

fn parse_resolution(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v < 11 {
        return Err(format!("resolution must be at least 11, got {v}"));
    }
    Ok(v)
}

fn parse_tol(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(v > 0.0 && v <= 1e-2) {
        return Err(format!("tol must lie in (0, 1e-2], got {v}"));
    }
    Ok(v)
}

/// Options shared by every subcommand.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// Joint distribution JSON file (`{"pxy": [[...], ...]}`).
    #[arg(long, global = true, value_name = "FILE", conflicts_with = "dsbs")]
    pub dist: Option<PathBuf>,
    /// Doubly symmetric binary source with correlation RHO.
    #[arg(long, global = true, value_name = "RHO", allow_negative_numbers = true)]
    pub dsbs: Option<f64>,
    /// Logarithm base of inputs and outputs (default e; 2 for fig1).
    #[arg(long, global = true, value_enum)]
    pub base: Option<Base>,
    /// Grid points per divergence axis.
    #[arg(long, global = true, default_value = "201", value_parser = parse_resolution)]
    pub resolution: usize,
    /// Solver and verification tolerance.
    #[arg(long, global = true, default_value = "1e-9", value_parser = parse_tol)]
    pub tol: f64,
    /// Worker threads (0 picks the number of cores).
    #[arg(long, global = true, env = "BLEXPO_WORKERS", default_value = "0")]
    pub workers: usize,
    /// Seed for every sampled set.
    #[arg(long, global = true, default_value = "0")]
    pub seed: u64,
    /// Directory receiving one CSV file per table instead of stdout.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// File receiving a JSON summary of the run.
    #[arg(long, global = true, value_name = "FILE")]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SurfaceKind {
    Lower,
    Upper,
    PhiR,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThetaKind {
    Lower,
    Upper,
    R,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundArg {
    Upper,
    Lower,
}

impl From<BoundArg> for Bound {
    fn from(b: BoundArg) -> Bound {
        match b {
            BoundArg::Upper => Bound::Upper,
            BoundArg::Lower => Bound::Lower,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LetterArg {
    Single,
    Star,
}

impl From<LetterArg> for Letter {
    fn from(l: LetterArg) -> Letter {
        match l {
            LetterArg::Single => Letter::Single,
            LetterArg::Star => Letter::Star,
        }
    }
}

/// Orders and levels of a two-function exponent.
#[derive(Debug, Clone, Args)]
pub struct QueryArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub p: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub phat: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub q: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub qhat: f64,
    /// Entropy level of the X function.
    #[arg(long)]
    pub alpha: f64,
    /// Entropy level of the Y function.
    #[arg(long)]
    pub beta: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Level surfaces phi_lower, phi_upper or the curve phi_r.
    Surface {
        #[arg(long, value_enum, default_value = "all")]
        which: SurfaceKind,
        /// Order of phi_r.
        #[arg(long, allow_negative_numbers = true)]
        r: Option<f64>,
    },
    /// Theta_lower, Theta_upper or Theta_r at a point or on the grid.
    Theta {
        #[arg(long, value_enum, default_value = "lower")]
        which: ThetaKind,
        /// Order of Theta_r.
        #[arg(long, allow_negative_numbers = true)]
        r: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
    },
    /// Minimum relative entropy coupling of two marginals, with dual potentials.
    Coupling {
        #[arg(long, value_delimiter = ',', required = true)]
        qx: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true)]
        qy: Vec<f64>,
        #[arg(long, default_value = "100000")]
        max_iter: usize,
    },
    /// One-shot and star forward exponents of a query.
    Lambda {
        #[command(flatten)]
        query: QueryArgs,
    },
    /// Renyi concentration curve.
    Gerber {
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
        #[arg(long, allow_negative_numbers = true)]
        q: f64,
        #[arg(long, value_enum, default_value = "upper")]
        bound: BoundArg,
        #[arg(long, value_enum, default_value = "star")]
        letter: LetterArg,
        /// Levels to evaluate (default: the uniform grid up to the largest level).
        #[arg(long, value_delimiter = ',')]
        alpha: Option<Vec<f64>>,
    },
    /// Theta_{q'} curve and finite-n q-stability checks.
    Qstab {
        #[arg(long, allow_negative_numbers = true)]
        q: f64,
        #[arg(long, default_value = "2")]
        n: usize,
        /// Sampled sets when the product alphabet is too large to enumerate.
        #[arg(long, default_value = "1000")]
        samples: usize,
    },
    /// Small-set expansion sandwich checks on the n-fold product.
    VerifySse {
        #[arg(long, default_value = "2")]
        n: usize,
        /// Sampled set pairs when the product alphabets are too large to enumerate.
        #[arg(long, default_value = "10000")]
        samples: usize,
    },
    /// Convergence table of the type-function constructions.
    Construct {
        #[command(flatten)]
        query: QueryArgs,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
        ns: Vec<usize>,
    },
    /// The four DSBS figure surfaces.
    Fig1 {
        #[arg(long, default_value = "2", allow_negative_numbers = true)]
        q: f64,
    },
    /// Quick invariant suite.
    Selftest,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Surface { .. } => "surface",
            Command::Theta { .. } => "theta",
            Command::Coupling { .. } => "coupling",
            Command::Lambda { .. } => "lambda",
            Command::Gerber { .. } => "gerber",
            Command::Qstab { .. } => "qstab",
            Command::VerifySse { .. } => "verify-sse",
            Command::Construct { .. } => "construct",
            Command::Fig1 { .. } => "fig1",
            Command::Selftest => "selftest",
        }
    }
}

/// Failures mapped to exit codes.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] blexpo_core::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Core(e) if e.is_convergence() => EXIT_CONVERGENCE,
            CliError::Core(_) | CliError::Io(_) => EXIT_INVALID,
        }
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(cli.run.workers)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    let outcome = commands::dispatch(&cli.run, &cli.command)?;
    output::emit(&outcome.tables, cli.run.out.as_deref())?;
    if let Some(path) = &cli.run.summary {
        let summary = json!({
            "command": cli.command.name(),
            "config": {
                "base": outcome.base,
                "resolution": cli.run.resolution,
                "tol": cli.run.tol,
                "workers": cli.run.workers,
                "seed": cli.run.seed,
            },
            "failures": outcome.failures,
            "result": outcome.summary,
        });
        std::fs::write(path, serde_json::to_string_pretty(&summary).expect("summary serializes"))?;
    }
    if outcome.failures > 0 {
        eprintln!("{} check(s) failed", outcome.failures);
        return Ok(EXIT_VERIFICATION);
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
