use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use dabsig::SurfaceLabel;
use dabsig_cli::commands::{self, BodeModel, Method};
use dabsig_cli::{CliError, ConfigFile, EXIT_FAILURE};

#[derive(Parser)]
#[command(name = "dabsig", version, about = "Dual-active-bridge steady state and small-signal transfer functions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Full,
    Half,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Fix,
    Sc,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Periodic operating point as JSON.
    SteadyState {
        config: PathBuf,
        #[arg(long, value_enum, default_value = "full")]
        method: MethodArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the identity suite and print a pass/fail table.
    Verify { config: PathBuf },
    /// Frequency response CSV on one sampling surface.
    Bode {
        config: PathBuf,
        #[arg(long, default_value = "P+", value_parser = parse_surface)]
        surface: SurfaceLabel,
        #[arg(long, value_enum, default_value = "fix")]
        model: ModelArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// One steady-state period from the time-domain oracle, as CSV.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Closed-form transfer function against injection measurements.
    Compare {
        config: PathBuf,
        #[arg(long, value_parser = parse_surface)]
        surface: Option<SurfaceLabel>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_surface(s: &str) -> Result<SurfaceLabel, String> {
    s.parse().map_err(|e: dabsig::Error| e.to_string())
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::SteadyState { config, method, out } => {
            let method = match method {
                MethodArg::Full => Method::Full,
                MethodArg::Half => Method::Half,
            };
            commands::steady_state(&ConfigFile::load(&config)?, method, &out)?;
        }
        Command::Verify { config } => {
            if !commands::verify(&ConfigFile::load(&config)?)? {
                return Ok(EXIT_FAILURE);
            }
        }
        Command::Bode { config, surface, model, out } => {
            let model = match model {
                ModelArg::Fix => BodeModel::Fix,
                ModelArg::Sc => BodeModel::Sc,
                ModelArg::Both => BodeModel::Both,
            };
            commands::bode(&ConfigFile::load(&config)?, surface, model, &out)?;
        }
        Command::Simulate { config, out } => commands::simulate(&ConfigFile::load(&config)?, &out)?,
        Command::Compare { config, surface, out } => commands::compare(&ConfigFile::load(&config)?, surface, &out)?,
    }
    Ok(0)
}

fn main() -> ExitCode {
    let code = match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    };
    ExitCode::from(code as u8)
}
