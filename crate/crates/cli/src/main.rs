//! `spectral-stop`: run oracle computations, stopping rules and Monte Carlo
//! experiments from JSON configs. See the README for the config schema.

mod commands;
mod config;
mod error;
mod plot;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::Value;

use crate::commands::Output;
use crate::error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "spectral-stop", version, about = "Early-stopped truncated SVD experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, env = "SPECTRAL_STOP_OUT_DIR", default_value = ".")]
    out: PathBuf,

    /// Dotted-path override, e.g. `noise.delta=0.02`. Repeatable; applied in order.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Base seed (`base_seed`, or `seed` for lazysvd).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for Monte Carlo runs.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Balanced, proxy and classical oracle indices.
    Oracles,
    /// Residual stopping rule on one simulated observation.
    Stop,
    /// Two-step estimator (strong and weak AIC fallback) on one simulated observation.
    TwoStep,
    /// Monte Carlo efficiency experiment: writes mc.csv and report.json.
    Mc,
    /// Sequential solve with lazily computed singular triplets.
    Lazysvd,
    /// Right-hand sides of the oracle inequalities.
    Bounds,
    /// Lower-bound adversary construction.
    Adversary,
    /// Efficiency box plot (SVG) from an mc.csv file.
    Plot {
        csv: PathBuf,
        #[arg(long, default_value = "Relative efficiency")]
        title: String,
    },
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    }
    let out = Output::new(cli.out.clone())?;
    if let Command::Plot { csv, title } = &cli.command {
        return commands::plot(csv, title, &out);
    }
    let mut raw = config::load(cli.config.as_deref(), &cli.set)?;
    if let Some(seed) = cli.seed {
        let key = if matches!(cli.command, Command::Lazysvd) { "seed" } else { "base_seed" };
        config::set_path(&mut raw, key, Value::from(seed))?;
    }
    match cli.command {
        Command::Oracles => commands::oracles(raw, &out),
        Command::Stop => commands::stop(raw, &out),
        Command::TwoStep => commands::two_step_cmd(raw, &out),
        Command::Bounds => commands::bounds(raw, &out),
        Command::Adversary => commands::adversary(raw, &out),
        Command::Lazysvd => commands::lazysvd(raw, &out),
        Command::Mc => match commands::mc(raw, &out)? {
            0 => Ok(()),
            n => Err(CliError::FailedRuns(n)),
        },
        Command::Plot { .. } => unreachable!("handled above"),
    }
}

fn fail(e: &CliError) -> ! {
    eprintln!("{}", e.record());
    std::process::exit(e.exit_code())
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => e.exit(),
        Err(e) => fail(&CliError::Usage(e.render().to_string().trim_end().to_string())),
    };
    if let Err(e) = run(cli) {
        fail(&e);
    }
}
