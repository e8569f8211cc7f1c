use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use telelocal::commands::{Command, Format, Grid, RunConfig, DEFAULT_SAMPLES, DEFAULT_SEED};
use telelocal::{emit, run, EXIT_CHECK_FAILED, EXIT_ERROR, EXIT_PASS};

/// Teleportation, Bell inequalities and local hidden variables, checked
/// numerically.
#[derive(Debug, Parser)]
#[command(name = "telelocal", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// Werner mixing parameter α in [0, 1] (teleport, lhv).
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Monte-Carlo sample count.
    #[arg(long, global = true, default_value_t = DEFAULT_SAMPLES)]
    samples: u64,

    /// RNG seed.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    seed: u64,

    /// α grid for `scan`, as LO:HI:STEP.
    #[arg(long, global = true)]
    grid: Option<Grid>,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,

    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Cmd {
    /// Run every headline check.
    Reproduce,
    /// Scan the CH value of Werner states over an α grid.
    Scan,
    /// Simulate the teleportation Bell test with Werner's local model.
    Lhv,
    /// Verify the local toy theory exhaustively.
    Hardy,
    /// Classical fidelity baselines.
    Gisin,
    /// Teleport through a Werner resource.
    Teleport,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

impl From<Cli> for RunConfig {
    fn from(cli: Cli) -> Self {
        RunConfig {
            command: match cli.command {
                Cmd::Reproduce => Command::Reproduce,
                Cmd::Scan => Command::Scan,
                Cmd::Lhv => Command::Lhv,
                Cmd::Hardy => Command::Hardy,
                Cmd::Gisin => Command::Gisin,
                Cmd::Teleport => Command::Teleport,
            },
            alpha: cli.alpha,
            samples: cli.samples,
            seed: cli.seed,
            grid: cli.grid,
            format: match cli.format {
                FormatArg::Json => Format::Json,
                FormatArg::Csv => Format::Csv,
            },
            out: cli.out,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                EXIT_ERROR as u8
            } else {
                EXIT_PASS as u8
            });
        }
    };
    let cfg = RunConfig::from(cli);
    let report = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("telelocal: {e}");
            return ExitCode::from(EXIT_ERROR as u8);
        }
    };
    if let Err(e) = emit(&report, &cfg) {
        eprintln!("telelocal: {e}");
        return ExitCode::from(EXIT_ERROR as u8);
    }
    if report.all_pass() {
        ExitCode::from(EXIT_PASS as u8)
    } else {
        for row in report.failures() {
            eprintln!("telelocal: check failed: {} = {}", row.name, row.value);
        }
        ExitCode::from(EXIT_CHECK_FAILED as u8)
    }
}
