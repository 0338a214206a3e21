use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use blockade_sim::config::load_config;
use blockade_sim::runner::{run, Command, RunOptions};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Subcommand {
    Simulate,
    Sweep,
    DesignPulse,
    Validate,
    Rsn,
}

impl From<Subcommand> for Command {
    fn from(s: Subcommand) -> Self {
        match s {
            Subcommand::Simulate => Command::Simulate,
            Subcommand::Sweep => Command::Sweep,
            Subcommand::DesignPulse => Command::DesignPulse,
            Subcommand::Validate => Command::Validate,
            Subcommand::Rsn => Command::Rsn,
        }
    }
}

/// Collective single-photon excitation under Rydberg blockade.
#[derive(Debug, Parser)]
#[command(name = "blockade-sim", version)]
struct Cli {
    #[arg(value_enum)]
    command: Subcommand,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `[output] dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps and validation.
    #[arg(long, value_parser = clap::value_parser!(u16).range(1..))]
    jobs: Option<u16>,
    /// Omit the timestamp comment line from CSV files.
    #[arg(long)]
    no_timestamp: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("ERROR: {}", e.to_string().trim_start_matches("error: ").trim_end());
            return ExitCode::from(1);
        }
    };
    let opts = RunOptions {
        out: cli.out,
        jobs: cli.jobs.map(usize::from),
        no_timestamp: cli.no_timestamp,
    };
    let outcome = load_config(&cli.config).and_then(|config| run(cli.command.into(), &config, &opts));
    match outcome {
        Ok(outcome) => {
            for w in &outcome.warnings {
                eprintln!("WARNING: {w}");
            }
            for m in &outcome.messages {
                println!("{m}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            for e in &outcome.errors {
                eprintln!("ERROR: {e}");
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("ERROR: {e}");
            ExitCode::from(1)
        }
    }
}
