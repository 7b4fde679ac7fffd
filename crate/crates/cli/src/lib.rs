//! Command-line front end: reads a JSON problem spec, runs one computation
//! and writes a JSON report (CSV for sweeps).

pub mod commands;
pub mod failure;
pub mod format;
pub mod problem;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{Command, Settings};
pub use failure::{ErrorBody, Failure, FailureKind};
pub use problem::{Problem, ProblemSpec};

#[derive(Debug, Parser)]
#[command(
    name = "sanov",
    version,
    about = "Exact tail probabilities of empirical types"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// ln P(A), the marginal ω, total correlation and the identity residual.
    Exact(CommonArgs),
    /// Exact rate with the surrounding upper and lower bounds.
    Bounds(CommonArgs),
    /// I-projection, duals and Pythagorean residuals at test points.
    Iproject(CommonArgs),
    /// CSV of rates and bounds over n_values.
    Sweep(CommonArgs),
    /// Every identity and bound check with residuals.
    Verify(CommonArgs),
    /// Monte Carlo estimate with a Wilson interval.
    Mc(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Problem specification (JSON).
    #[arg(long, value_name = "PATH")]
    pub spec: PathBuf,
    /// Maximum number of types to enumerate.
    #[arg(long, value_name = "INT")]
    pub budget: Option<u64>,
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    #[arg(long, value_name = "INT")]
    pub trials: Option<u64>,
    /// Include the subset bound (uses subset_constraints, or A itself).
    #[arg(long)]
    pub subset: bool,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[arg(long, hide = true, default_value_t = 0.0)]
    pub corrupt_omega: f64,
}

impl Sub {
    fn split(&self) -> (Command, &CommonArgs) {
        match self {
            Sub::Exact(a) => (Command::Exact, a),
            Sub::Bounds(a) => (Command::Bounds, a),
            Sub::Iproject(a) => (Command::Iproject, a),
            Sub::Sweep(a) => (Command::Sweep, a),
            Sub::Verify(a) => (Command::Verify, a),
            Sub::Mc(a) => (Command::Mc, a),
        }
    }
}

/// What the process should print and return.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl Outcome {
    fn failed(failure: Failure) -> Self {
        Self {
            stdout: String::new(),
            code: failure.exit_code(),
            stderr: format::to_json(&failure.into_body()),
        }
    }
}

/// Parses `args` and runs the command; `env_budget` is the raw budget variable.
pub fn execute<I, T>(args: I, env_budget: Option<String>) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            return Outcome {
                stdout: e.to_string(),
                stderr: String::new(),
                code: 0,
            }
        }
        Err(e) => return Outcome::failed(Failure::validation(None, e.to_string().trim().into())),
    };
    let (command, args) = cli.command.split();
    let settings = Settings {
        budget: args.budget,
        seed: args.seed,
        trials: args.trials,
        subset: args.subset,
        env_budget,
        corrupt_omega: args.corrupt_omega,
    };
    let rendered = match ProblemSpec::from_path(&args.spec)
        .and_then(ProblemSpec::validate)
        .and_then(|problem| commands::run(command, &problem, &settings))
    {
        Ok(r) => r,
        Err(f) => return Outcome::failed(f),
    };
    let stdout = match &args.out {
        Some(path) => match std::fs::write(path, &rendered.text) {
            Ok(()) => String::new(),
            Err(e) => {
                return Outcome::failed(Failure::validation(
                    Some("--out".into()),
                    format!("{}: {e}", path.display()),
                ))
            }
        },
        None => rendered.text,
    };
    match rendered.failure {
        Some(f) => Outcome {
            stdout,
            code: f.exit_code(),
            stderr: format::to_json(&f.into_body()),
        },
        None => Outcome {
            stdout,
            stderr: String::new(),
            code: 0,
        },
    }
}
