use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use delayed_acceptance::experiment::{self, ExperimentConfig};
use delayed_acceptance::scaling::Family;
use delayed_acceptance::Result;

#[derive(Parser)]
#[command(name = "da-bench", about = "Delayed-acceptance MCMC experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the chains of one configuration and write traces and reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: u64,
        /// Output directory; `DA_BENCH_OUT_DIR` takes precedence when set.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the optimal acceptance table for a scaling family.
    ScalingTable {
        #[arg(long)]
        family: String,
        /// `log:A:B:N`, `lin:A:B:N` or a comma separated list.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare configurations against the first one.
    Compare {
        #[arg(long)]
        out: PathBuf,
        #[arg(required = true, num_args = 2..)]
        configs: Vec<PathBuf>,
    },
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, out } => {
            let config = ExperimentConfig::load(&config)?;
            let out = experiment::resolve_out_dir(out)?;
            let summary = experiment::run(&config, seed, &out)?;
            print!("{}", summary.text);
        }
        Command::ScalingTable { family, grid, out } => {
            let family = Family::parse(&family)?;
            let grid = experiment::parse_grid(&grid)?;
            fs::write(out, experiment::scaling_table(family, &grid)?)?;
        }
        Command::Compare { out, configs } => {
            let configs = configs
                .iter()
                .map(|p| ExperimentConfig::load(p))
                .collect::<Result<Vec<_>>>()?;
            let text = experiment::compare(&configs, None)?.to_text();
            fs::write(out, &text)?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("da-bench: {e}");
            ExitCode::FAILURE
        }
    }
}
