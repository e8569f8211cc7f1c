//! Library side of the `telelocal` command-line tool: run configuration,
//! subcommands and report encoding.

pub mod commands;
pub mod report;

pub use commands::{run, Command, Format, Grid, RunConfig};
pub use report::{Report, ResultRow};

/// Exit code when every check passes.
pub const EXIT_PASS: i32 = 0;
/// Exit code when at least one check fails.
pub const EXIT_CHECK_FAILED: i32 = 1;
/// Exit code for usage, configuration and I/O errors.
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] telelocal_core::Error),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON encoding failed: {0}")]
    Json(#[from] serde_json::Error),
    #[error("CSV encoding failed: {0}")]
    Csv(#[from] csv::Error),
}

/// Encodes `report` in the configured format.
pub fn render(report: &Report, format: Format) -> Result<String, CliError> {
    Ok(match format {
        Format::Json => report.to_json()?,
        Format::Csv => report.to_csv(),
    })
}

/// Writes the rendered report to the configured path, or stdout.
pub fn emit(report: &Report, cfg: &RunConfig) -> Result<(), CliError> {
    let text = render(report, cfg.format)?;
    match &cfg.out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}
