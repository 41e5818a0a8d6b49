//! Command-line driver for the occupation-network pipeline.
//!
//! `jobnet <subcommand> --config run.toml` runs one stage; `pipeline` runs
//! them all and writes `manifest.json`. Exit codes: 0 success, 2 config or
//! validation error, 3 data error, 4 internal error.

pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod stages;
pub mod synth;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use jobnet_core::graph::Weighting;

use crate::config::{BaselineMode, Overrides, RunConfig};
use crate::error::CliError;
use crate::stages::Run;

#[derive(Debug, Parser)]
#[command(name = "jobnet", version, about = "Occupation similarity networks and their polarization over time")]
pub struct Cli {
    /// Worker threads for every parallel step (default: one per core).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse raw editions into entry records and corpus statistics.
    Parse(RunArgs),
    /// Score description words against a lexicon.
    Spellcheck(RunArgs),
    /// Average word vectors over every description.
    Embed(RunArgs),
    /// Train the classifier and label every entry.
    Classify(RunArgs),
    /// Build thresholded similarity networks.
    Graph(RunArgs),
    /// Modularity, adjusted polarization and bootstrap intervals.
    Polarize(RunArgs),
    /// Title persistence and similarity decay across editions.
    Longitudinal(RunArgs),
    /// Polarization across thresholds and weightings.
    Sweep(SweepArgs),
    /// Every stage in order, then the run manifest.
    Pipeline(RunArgs),
    /// Write a synthetic three-edition fixture and a config for it.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, short)]
    pub config: PathBuf,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub weighting: Option<Weighting>,
    /// Bootstrap replicates; 0 disables the bootstrap.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Bootstrap seed.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub baseline: Option<BaselineMode>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Comma-separated thresholds (overrides `sweep.thresholds`).
    #[arg(long, value_delimiter = ',')]
    pub thresholds: Option<Vec<f64>>,
    /// Comma-separated weightings (overrides `sweep.weightings`).
    #[arg(long, value_delimiter = ',')]
    pub weightings: Option<Vec<Weighting>>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory to write the fixture into.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 240)]
    pub jobs_per_edition: usize,
    /// Bootstrap replicates written into the generated config.
    #[arg(long, default_value_t = 1000)]
    pub bootstrap: usize,
}

impl RunArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            output_dir: self.out.clone(),
            threshold: self.threshold,
            weighting: self.weighting,
            bootstrap: self.bootstrap,
            seed: self.seed,
            baseline: self.baseline,
            thresholds: None,
            weightings: None,
        }
    }

    fn load(&self, extra: impl FnOnce(&mut Overrides)) -> Result<Run, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        let mut o = self.overrides();
        extra(&mut o);
        cfg.apply(&o);
        Run::new(cfg)
    }
}

/// Run a parsed command line inside a pool of `--jobs` workers.
pub fn run(cli: Cli) -> Result<(), CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::config("--jobs must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(CliError::internal)?;
    pool.install(|| dispatch(cli.command))
}

fn dispatch(command: Command) -> Result<(), CliError> {
    use stages::*;
    let single = |args: RunArgs, name: &'static str, stage: fn(&Run) -> Result<(), CliError>| {
        args.load(|_| {})?.timed(name, stage)
    };
    match command {
        Command::Parse(a) => single(a, PARSE, Run::parse),
        Command::Spellcheck(a) => single(a, SPELLCHECK, Run::spellcheck),
        Command::Embed(a) => single(a, EMBED, Run::embed),
        Command::Classify(a) => single(a, CLASSIFY, Run::classify),
        Command::Graph(a) => single(a, GRAPH, Run::graph),
        Command::Polarize(a) => single(a, POLARIZE, Run::polarize),
        Command::Longitudinal(a) => single(a, LONGITUDINAL, Run::longitudinal),
        Command::Sweep(a) => {
            let mut run = a.run.load(|o| {
                o.thresholds = a.thresholds.clone();
                o.weightings = a.weightings.clone();
            })?;
            run.timed(SWEEP, Run::sweep).map(|_| ())
        }
        Command::Pipeline(a) => a.load(|_| {})?.pipeline().map(|_| ()),
        Command::Synth(a) => synth::write_fixture(&a.out, a.seed, a.jobs_per_edition, a.bootstrap).map(|_| ()),
    }
}
