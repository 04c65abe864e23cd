use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, CommandFactory, Parser};
use uvlab_cli::config::{Overrides, RunConfig, Subcommand};

/// Environment variable holding the worker-thread count.
const WORKERS_ENV: &str = "UVLAB_WORKERS";

#[derive(Parser)]
#[command(name = "uvlab", version, about = "UV limits of bounded interactions: quadrature, limits and Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Subcommand)]
enum Command {
    /// Cutoff covariance at zero lag and the renormalization scales over the grid.
    Propagator(RunArgs),
    /// Closed-form cutoff-removed functional for the configured regime.
    Limits(RunArgs),
    /// Finite-cutoff one-point values against the limit along a grid.
    Sweep(RunArgs),
    /// Factorization gap over a cutoff grid.
    Factorization(RunArgs),
    /// Smeared connected Schwinger function with J as every test function.
    Schwinger(RunArgs),
    /// Monte Carlo estimate of the connected functional at one cutoff.
    Mc(RunArgs),
    /// Joint UV and classical-limit probe.
    Classical(RunArgs),
    /// Run a config file (or manifest) using the subcommand it names.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration, or a JSON manifest from an earlier run.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

fn resolve(command: Command) -> Result<RunConfig> {
    let (sub, args) = match command {
        Command::Propagator(a) => (Some(Subcommand::Propagator), a),
        Command::Limits(a) => (Some(Subcommand::Limits), a),
        Command::Sweep(a) => (Some(Subcommand::Sweep), a),
        Command::Factorization(a) => (Some(Subcommand::Factorization), a),
        Command::Schwinger(a) => (Some(Subcommand::Schwinger), a),
        Command::Mc(a) => (Some(Subcommand::Mc), a),
        Command::Classical(a) => (Some(Subcommand::Classical), a),
        Command::Run(a) => (None, a),
    };
    let mut cfg = match (&args.config, sub) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Some(s)) => RunConfig::new(s),
        (None, None) => anyhow::bail!("`run` needs --config"),
    };
    if let Some(s) = sub {
        cfg.subcommand = s;
    }
    args.overrides.apply(&mut cfg)?;
    Ok(cfg)
}

fn init_workers() -> Result<()> {
    let n = match std::env::var(WORKERS_ENV) {
        Ok(text) => text
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .with_context(|| format!("{WORKERS_ENV} must be a positive integer, got `{text}`"))?,
        Err(_) => std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
    };
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let unknown = e.kind() == clap::error::ErrorKind::InvalidSubcommand;
            let _ = e.print();
            if unknown {
                let names: Vec<String> =
                    Cli::command().get_subcommands().map(|c| c.get_name().to_string()).collect();
                eprintln!("valid subcommands: {}", names.join(", "));
            }
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    let result = init_workers().and_then(|_| resolve(cli.command)).and_then(|cfg| uvlab_cli::run(&cfg));
    match result {
        Ok(manifest) => {
            println!("{}", manifest.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
