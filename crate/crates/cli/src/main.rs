mod commands;
mod params;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

/// Matched-asymptotics toolkit for two-peak chemotactic blow-up.
#[derive(Debug, Parser)]
#[command(name = "kslab", version)]
struct Cli {
    #[command(flatten)]
    io: Io,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Io {
    /// Output file (standard output when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// JSON object of parameter values for the command; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Line,
    Polygon,
    Center,
    Asym5,
    Newton,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stationary peak configurations.
    Configs {
        #[arg(long, value_enum)]
        family: Option<Family>,
        /// Total number of peaks.
        #[arg(long)]
        n: Option<usize>,
        /// Newton seed: `{"points": [[x, y], ...]}` or an earlier `configs` output.
        #[arg(long)]
        seed_file: Option<PathBuf>,
    },
    /// Connection constants and Wronskians of the linearised inner modes.
    Modes {
        /// Angular index, a range such as `2..4`, or a comma list.
        #[arg(long = "L")]
        l: Option<String>,
    },
    /// Explicit inner corrections and the cos 2θ / cos 4θ solves.
    Corrections {
        #[arg(long, allow_negative_numbers = true)]
        eps: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        tau: Option<f64>,
        /// Outer constant setting the width law used for ε_τ.
        #[arg(long = "A", allow_negative_numbers = true)]
        a: Option<f64>,
    },
    /// Outer elliptic problem and the constants A and B.
    Outer {
        #[arg(long, allow_negative_numbers = true)]
        d1: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        d2: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long = "R")]
        r_outer: Option<f64>,
        #[arg(long)]
        levels: Option<u32>,
    },
    /// Peak-width dynamics and the blow-up rate.
    Epsilon {
        #[arg(long = "A", allow_negative_numbers = true)]
        a: Option<f64>,
        #[arg(long = "B", allow_negative_numbers = true)]
        b: Option<f64>,
        #[arg(long)]
        tau_max: Option<f64>,
        #[arg(long)]
        tau0: Option<f64>,
        #[arg(long)]
        eps0: Option<f64>,
        /// Read A and B from an `outer` JSON report (explicit flags still win).
        #[arg(long)]
        from_outer: Option<PathBuf>,
    },
    /// Outer → epsilon and modes → corrections in one report.
    Pipeline {
        /// Default resolutions instead of the quick ones.
        #[arg(long)]
        full: bool,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Configs { .. } => "configs",
            Command::Modes { .. } => "modes",
            Command::Corrections { .. } => "corrections",
            Command::Outer { .. } => "outer",
            Command::Epsilon { .. } => "epsilon",
            Command::Pipeline { .. } => "pipeline",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Numerical(kslab_core::Error),
    #[error(transparent)]
    Io(#[from] anyhow::Error),
}

impl From<kslab_core::Error> for Failure {
    fn from(e: kslab_core::Error) -> Self {
        use kslab_core::Error as E;
        match e {
            E::InvalidInput(_) | E::CoincidentPoints { .. } | E::NotIncreasing { .. } => Failure::Usage(e.to_string()),
            e => Failure::Numerical(e),
        }
    }
}

const THREADS_VAR: &str = "KSLAB_THREADS";

fn threads() -> Result<usize, Failure> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(1),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{THREADS_VAR} must be a non-negative integer, got {v:?}"))),
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    kslab_core::set_threads(threads()?);
    let mut resolver = params::Resolver::load(cli.io.config.as_deref())?;
    let plan = commands::plan(&cli.command, cli.io.format, &mut resolver)?;
    let echo = resolver.finish()?;
    let name = cli.command.name();
    match commands::execute(&plan) {
        Ok(rep) => {
            match cli.io.format {
                Format::Json => report::write_json(cli.io.out.as_deref(), &report::envelope(name, &echo, Ok(&rep)))?,
                Format::Csv => report::write_csv(cli.io.out.as_deref(), &rep.table)?,
            }
            Ok(true)
        }
        Err(Failure::Numerical(e)) => {
            let msg = e.to_string();
            report::write_json(cli.io.out.as_deref(), &report::envelope(name, &echo, Err(&msg)))?;
            eprintln!("error: numerical failure: {msg}");
            Ok(false)
        }
        Err(e) => Err(e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(Failure::Usage(msg)) => {
            eprintln!(
                "error: {msg}\n\nFor more information, try 'kslab {} --help'.",
                cli.command.name()
            );
            ExitCode::from(2)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("error: numerical failure: {e}");
            ExitCode::from(3)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
