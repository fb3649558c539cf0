//! `spinquench`: spectra, quench dynamics, effective-dimension sweeps and
//! eigenstate checks for the XY chain in a transverse field.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, Subcommand};

use config::{Manifest, RunConfig, RunInfo};
use output::Outputs;

#[derive(Parser)]
#[command(name = "spinquench", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration (a previous `manifest.json` also works).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to the available hardware threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Directory for cached spectra.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Seed for sampled gap diagnostics.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, Subcommand)]
enum Command {
    /// Eigenvalues and degenerate-gap diagnostics.
    Spectrum,
    /// Time trace of an observable after a quench from a product state.
    Evolve,
    /// Normalized energy and effective dimension over a (θ, φ) grid.
    Sweep,
    /// Exponential growth rate of the effective dimension with N.
    Scaling,
    /// Eigenstate expectation values, shell averages and off-diagonal elements.
    Eth,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Evolve => "evolve",
            Command::Sweep => "sweep",
            Command::Scaling => "scaling",
            Command::Eth => "eth",
        }
    }
}

fn resolve(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut config = match &cli.config {
        Some(path) => config::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        config.output_dir = Some(out.clone());
    }
    if let Some(k) = cli.workers {
        anyhow::ensure!(k >= 1, "--workers must be at least 1");
        config.workers = Some(k);
    }
    if let Some(dir) = &cli.cache {
        config.cache_dir = Some(dir.clone());
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let start = Instant::now();
    let config = resolve(&cli)?;
    let out_dir = config
        .output_dir
        .clone()
        .context("no output directory: pass --out or set output_dir")?;
    let workers = config.workers.unwrap_or_else(|| {
        std::thread::available_parallelism().map_or(1, |n| n.get())
    });
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;

    let mut outputs = Outputs::default();
    pool.install(|| match cli.command {
        Command::Spectrum => commands::spectrum(&config, &mut outputs),
        Command::Evolve => commands::evolve(&config, &mut outputs),
        Command::Sweep => commands::sweep(&config, &mut outputs),
        Command::Scaling => commands::scaling(&config, &mut outputs),
        Command::Eth => commands::eth(&config, &mut outputs),
    })?;

    let mut names = outputs.names();
    names.push("manifest.json".into());
    let manifest = Manifest {
        run: RunInfo {
            command: cli.command.name().into(),
            version: env!("CARGO_PKG_VERSION").into(),
            chain: config.model.chain()?,
            workers,
            wall_clock_seconds: start.elapsed().as_secs_f64(),
            outputs: names,
        },
        config,
    };
    outputs.json("manifest.json", &manifest)?;
    outputs.commit(&out_dir)?;
    log::info!("wrote {}", out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
