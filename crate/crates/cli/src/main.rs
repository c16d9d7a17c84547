mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;

use output::{emit, Format};

/// Exit statuses.
const EXIT_VALIDATION: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;
const EXIT_USAGE: u8 = 64;
const EXIT_NO_INPUT: u8 = 66;
const EXIT_IO: u8 = 74;

#[derive(Parser)]
#[command(version, about = "Default cascades on multiplex networks of debts with different seniority")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON config; omitted fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed of stochastic commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file (stdout if omitted). Extra CSV tables go next to it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sample a multiplex network and list its edges.
    Generate,
    /// Replicated cascade simulations.
    Simulate,
    /// Iterate the level recursion to its fixed point.
    FixedPoint,
    /// Cascade region over junior/senior mean degrees.
    Region,
    /// Cascade window along one seniority ratio.
    Window,
    /// Seniority ratio with the smallest cascade window.
    OptimalRatio,
    /// Optimal ratio across recovery thresholds.
    SweepThreshold,
    /// Cascade regions for M seniority levels.
    Mlayer,
    /// Heavy-tailed graph split over junior fractions.
    JuniorFraction,
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }
}

impl From<seniority_cascade::Error> for Failure {
    fn from(e: seniority_cascade::Error) -> Self {
        Failure::validation(e.to_string())
    }
}

fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_NO_INPUT,
        message: format!("cannot read config {}: {e}", path.display()),
    })?;
    serde_json::from_str(&text).map_err(|e| Failure::validation(format!("invalid config {}: {e}", path.display())))
}

fn run(cli: &Cli) -> Result<output::Report, Failure> {
    let cfg = cli.config.as_deref();
    match cli.command {
        Command::Generate => {
            let mut c: config::GenerateConfig = load(cfg)?;
            if let Some(s) = cli.seed {
                c.seed = s;
            }
            commands::generate_cmd(c)
        }
        Command::Simulate => {
            let mut c: config::SimulateConfig = load(cfg)?;
            if let Some(s) = cli.seed {
                c.master_seed = s;
            }
            commands::simulate_cmd(c)
        }
        Command::JuniorFraction => {
            let mut c: config::JuniorFractionConfig = load(cfg)?;
            if let Some(s) = cli.seed {
                c.master_seed = s;
            }
            commands::junior_fraction_cmd(c)
        }
        Command::FixedPoint => commands::fixed_point_cmd(load(cfg)?),
        Command::Region => commands::region_cmd(load(cfg)?),
        Command::Window => commands::window_cmd(load(cfg)?),
        Command::OptimalRatio => commands::optimal_ratio_cmd(load(cfg)?),
        Command::SweepThreshold => commands::sweep_cmd(load(cfg)?),
        Command::Mlayer => commands::mlayer_cmd(load(cfg)?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let report = match run(&cli) {
        Ok(r) => r,
        Err(f) => {
            eprintln!("error: {}", f.message);
            return ExitCode::from(f.code);
        }
    };
    if let Err(e) = emit(&report, cli.format, cli.out.as_deref()) {
        eprintln!("error: cannot write output: {e}");
        return ExitCode::from(EXIT_IO);
    }
    if !report.provenance.converged {
        eprintln!("warning: iteration did not converge; partial results written");
        return ExitCode::from(EXIT_NOT_CONVERGED);
    }
    ExitCode::SUCCESS
}
