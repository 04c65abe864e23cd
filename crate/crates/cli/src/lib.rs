//! Library side of the `uvlab` binary: configuration, dispatch and outputs.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use uvlab_core::lattice::derive_seed;

use config::{Format, RunConfig, Subcommand};
use output::{write_table, Manifest};

/// Runs one configuration, writing the table and its manifest. Returns the
/// manifest path.
pub fn run(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.validate()?;
    let start = Instant::now();
    let outcome = match cfg.subcommand {
        Subcommand::Propagator => commands::propagator(cfg),
        Subcommand::Limits => commands::limits(cfg),
        Subcommand::Sweep => commands::sweep(cfg),
        Subcommand::Factorization => commands::factorization(cfg),
        Subcommand::Schwinger => commands::schwinger(cfg),
        Subcommand::Mc => commands::mc(cfg),
        Subcommand::Classical => commands::classical(cfg),
    }?;
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = cfg.stem();
    let ext = match cfg.output.format {
        Format::Csv => "csv",
        Format::Json => "json",
    };
    let table = dir.join(format!("{stem}.{ext}"));
    write_table(&table, outcome.header, &outcome.rows, cfg.output.format)?;

    let batch_seeds = if outcome.sampled {
        (0..cfg.mc.n_batches() as u64)
            .map(|b| derive_seed(cfg.mc.master_seed, b))
            .collect()
    } else {
        Vec::new()
    };
    let manifest = Manifest {
        tool: "uvlab",
        version: env!("CARGO_PKG_VERSION"),
        core_version: uvlab_core::VERSION,
        subcommand: cfg.subcommand.name(),
        config: cfg.clone(),
        master_seed: cfg.mc.master_seed,
        batch_seeds,
        workers: rayon::current_num_threads(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        outputs: vec![table],
        summary: outcome.summary,
    };
    let path = dir.join(format!("{stem}.manifest.json"));
    manifest.write(&path)?;
    Ok(path)
}
