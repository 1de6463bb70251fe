use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod config;
mod reproduce;

use config::{ConfigError, RunConfig};

/// Photon statistics of light stored in a partially blockaded Rydberg ensemble.
#[derive(Parser, Debug)]
#[command(name = "rydfock", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalArgs {
    /// `key = value` configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// RNG seed (overrides `rng_seed`)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory (overrides `out_dir`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo blockade matrix with per-column statistics
    Blockade(commands::BlockadeArgs),
    /// Raw and noise-corrected g² of a click file
    G2(commands::G2Args),
    /// Synthetic click file from a photon-number distribution
    Synth(commands::SynthArgs),
    /// Model curves as CSV tables
    Reproduce(reproduce::ReproduceArgs),
    /// Fit the spontaneous-emission branching ratio to read-click data
    FitPeg(commands::FitPegArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Figure {
    #[value(name = "fig3")]
    Fig3,
    #[value(name = "fig4")]
    Fig4,
    #[value(name = "figS3")]
    FigS3,
    #[value(name = "figS5")]
    FigS5,
}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(err) = cause.downcast_ref::<rydfock::Error>() {
            return if err.is_numerical() { EXIT_NUMERICAL } else { EXIT_DATA };
        }
        if cause.downcast_ref::<ConfigError>().is_some() {
            return EXIT_DATA;
        }
    }
    EXIT_DATA
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = match &cli.global.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.global.seed {
        cfg.rng_seed = seed;
    }
    if let Some(out) = &cli.global.out {
        cfg.out_dir = out.clone();
    }
    cfg.pipeline.blockade.rng_seed = cfg.rng_seed;
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    match cli.command {
        Command::Blockade(args) => commands::blockade(cfg, args),
        Command::G2(args) => commands::g2(cfg, args),
        Command::Synth(args) => commands::synth(cfg, args),
        Command::Reproduce(args) => reproduce::run(cfg, args),
        Command::FitPeg(args) => commands::fit_peg(cfg, args),
    }
}
