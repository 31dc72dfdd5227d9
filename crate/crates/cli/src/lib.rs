//! Command-line front end for quantum-circuit parametric t-SNE.

pub mod commands;
pub mod config;
pub mod error;
pub mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{execute, Command, Report};
pub use config::RunSettings;
pub use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "qtsne", version, about = "Parametric t-SNE with a simulated quantum circuit as the embedding map")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Subcmd,
}

#[derive(Debug, Subcommand)]
pub enum Subcmd {
    /// Simulate annealing-schedule Ising dynamics and write snapshot states.
    GenerateIsing(Flags),
    /// Train the circuit embedding on a classical table, a state file, or `iris`.
    Embed(Flags),
    /// Plain t-SNE on the same similarities, for comparison.
    Baseline(Flags),
    /// Cost landscape around the end of an embed run, from its output directory.
    Landscape(Flags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Input file, `iris`, or (for landscape) an embed output directory.
    pub input: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub backend: Option<String>,
    #[arg(long)]
    pub perplexity: Option<f64>,
    #[arg(long = "scale-a")]
    pub scale_a: Option<f64>,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub snapshot: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub resolution: Option<usize>,
}

impl Flags {
    fn as_settings(&self) -> RunSettings {
        RunSettings {
            input: self.input.clone(),
            out: self.out.clone(),
            seed: self.seed,
            backend: self.backend.clone(),
            perplexity: self.perplexity,
            scale_a: self.scale_a,
            depth: self.depth,
            epochs: self.epochs,
            snapshot: self.snapshot,
            samples: self.samples,
            resolution: self.resolution,
            ..RunSettings::default()
        }
    }

    /// Config file values with flags layered on top.
    pub fn resolve(&self) -> Result<RunSettings, CliError> {
        let base = match &self.config {
            Some(path) => RunSettings::load(path)?,
            None => RunSettings::default(),
        };
        Ok(base.overlay(&self.as_settings()))
    }
}

pub fn run(cli: Cli) -> Result<Report, CliError> {
    let (command, flags) = match &cli.command {
        Subcmd::GenerateIsing(f) => (Command::GenerateIsing, f),
        Subcmd::Embed(f) => (Command::Embed, f),
        Subcmd::Baseline(f) => (Command::Baseline, f),
        Subcmd::Landscape(f) => (Command::Landscape, f),
    };
    execute(command, flags.resolve()?)
}
