//! `archsearch`: enumerate architecture spaces, generate synthetic market
//! data, run sweeps and analyze them.

mod commands;
mod config;
mod error;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Overrides;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "archsearch",
    version,
    about = "Exhaustive MLP architecture sweeps and their statistics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print every architecture label in the space, then the total.
    Enumerate {
        #[arg(long, default_value_t = 6)]
        n_max: u32,
        #[arg(long, default_value_t = 5)]
        k_max: u32,
    },
    /// Write seeded synthetic asset and index price CSVs.
    SynthData {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 750)]
        n_days: usize,
        #[arg(long, default_value = "data")]
        out: PathBuf,
    },
    /// Train every architecture described by a run config.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        n_max: Option<u32>,
        #[arg(long)]
        k_max: Option<u32>,
        /// Global training seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        top_m: Option<usize>,
        #[arg(long)]
        parallelism: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Population-vs-sample statistics for a sweep CSV.
    Analyze {
        sweep_csv: PathBuf,
        #[arg(long, default_value_t = 40)]
        top_m: usize,
        /// Output directory (default: `analysis/` beside the sweep CSV).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render an analysis directory as markdown.
    Report {
        dir: PathBuf,
        /// Write to this file instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Enumerate { n_max, k_max } => commands::enumerate(n_max, k_max),
        Command::SynthData { seed, n_days, out } => commands::synth_data(seed, n_days, &out),
        Command::Sweep {
            config,
            n_max,
            k_max,
            seed,
            top_m,
            parallelism,
            out,
        } => {
            let overrides = Overrides {
                n_max,
                k_max,
                seed,
                top_m,
                parallelism,
                out,
            };
            let path = commands::sweep(&config, &overrides)?;
            println!("{}", path.display());
            Ok(())
        }
        Command::Analyze { sweep_csv, top_m, out } => {
            let dir = commands::analyze(&sweep_csv, top_m, out.as_deref())?;
            println!("{}", dir.display());
            Ok(())
        }
        Command::Report { dir, out } => commands::report(&dir, out.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            let err = CliError::usage(first.trim_start_matches("error: "));
            eprintln!("{err}");
            return ExitCode::from(err.exit);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{err}");
            ExitCode::from(err.exit)
        }
    }
}
