//! `becgate <scenario> [--config FILE] [--out DIR] [--seed N] [--svg]`
//!
//! Exit codes: 0 success, 1 failing validation criterion, 2 configuration or I/O error,
//! 3 numerical failure.

mod output;
mod scenarios;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use becgate::config::Settings;
use clap::Parser;

use output::OutputDir;
use scenarios::{Context, Scenario};

#[derive(Debug, Parser)]
#[command(
    name = "becgate",
    version,
    about = "Matter-wave four-wave-mixing and light-retrieval simulator"
)]
struct Cli {
    #[arg(value_enum)]
    scenario: Scenario,
    /// `key = value` settings file; defaults apply to every key it leaves out.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Overrides `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Also write SVG plots.
    #[arg(long)]
    svg: bool,
}

#[derive(Debug)]
pub enum Failure {
    /// Bad settings, unreadable input or unwritable output.
    Setup(String),
    Numerical(String),
}

pub type Outcome<T> = Result<T, Failure>;

pub fn config_failure(e: becgate::Error) -> Failure {
    Failure::Setup(e.to_string())
}

/// Wraps a core error with the operation and the parameters it ran with.
pub fn numerical(
    operation: &'static str,
    parameters: String,
) -> impl FnOnce(becgate::Error) -> Failure {
    move |e| Failure::Numerical(format!("{operation} failed ({parameters}): {e}"))
}

fn load_settings(cli: &Cli) -> Outcome<Settings> {
    let mut settings = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::Setup(format!("cannot read {}: {e}", path.display())))?;
            Settings::parse(&text)
                .map_err(|e| Failure::Setup(format!("{}: {e}", path.display())))?
        }
        None => Settings::default(),
    };
    if let Some(seed) = cli.seed {
        settings.seed = seed;
    }
    Ok(settings)
}

fn run(cli: &Cli) -> Outcome<bool> {
    let settings = load_settings(cli)?;
    let mut out = OutputDir::create(&cli.out)?;
    let passed = scenarios::run(
        cli.scenario,
        &mut Context {
            settings: &settings,
            out: &mut out,
            svg: cli.svg,
        },
    )?;
    let manifest = out.finish(&cli.scenario.name(), &settings.to_config_text())?;
    log::info!("wrote {}", manifest.display());
    Ok(passed)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("validation failed");
            ExitCode::from(1)
        }
        Err(Failure::Setup(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
