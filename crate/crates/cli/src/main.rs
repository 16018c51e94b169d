use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tns_cli::run::{cmd_analyze, cmd_run};
use tns_cli::verify::cmd_verify;

/// Spectral Navier-Stokes runs with mode-filtered regularity diagnostics.
#[derive(Parser)]
#[command(name = "tns", version)]
struct Cli {
    /// More log output; repeat for debug.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver with the monitors of a config file.
    Run { config: PathBuf },
    /// Recompute monitor reports from snapshot files.
    Analyze {
        spec: PathBuf,
        files: Vec<PathBuf>,
    },
    /// Sample the embedding inequalities and check their stability.
    Verify { spec: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match &cli.command {
        Command::Run { config } => cmd_run(config),
        Command::Analyze { spec, files } => cmd_analyze(spec, files),
        Command::Verify { spec } => cmd_verify(spec),
    };
    match result {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("tns: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
