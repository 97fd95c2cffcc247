use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

mod config;
mod runner;

use config::{parse_config, Command};
use runner::RunError;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Cmd {
    Resolvent,
    Evolve,
    Infsup,
    Verify,
}

/// Resolvent, semigroup and inf-sup runs for the composite-structure FSI model.
#[derive(Parser, Debug)]
#[command(name = "multifsi", version)]
struct Cli {
    #[arg(value_enum)]
    command: Cmd,
    /// Flat `section.key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `geometry.refinement_level`.
    #[arg(long)]
    refine: Option<u32>,
    /// Overrides `run.output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::Resolvent => Command::Resolvent,
        Cmd::Evolve => Command::Evolve,
        Cmd::Infsup => Command::InfSup,
        Cmd::Verify => Command::Verify,
    };
    let result = std::fs::read_to_string(&cli.config)
        .map_err(|e| RunError::Config(format!("cannot read {}: {e}", cli.config.display())))
        .and_then(|text| parse_config(&text).map_err(RunError::from))
        .and_then(|mut cfg| {
            if let Some(k) = cli.refine {
                cfg.geometry.refinement_level = k;
            }
            if let Some(out) = cli.out {
                cfg.output_dir = out;
            }
            runner::run(command, &cfg)
        });
    match result {
        Ok(out) => {
            print!("{}", out.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("multifsi: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
