//! Command-line driver: ingest, graph building, prediction, evaluation,
//! beta sweeps, discovery histograms and synthetic fixtures.

pub mod commands;
pub mod config;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::{RunArgs, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad or missing settings; exit code 2.
    #[error("{0}")]
    Usage(String),
    /// Input data could not be processed; exit code 1.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

macro_rules! data_errors {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Data(e.to_string())
            }
        }
    )*};
}

data_errors!(
    hypogen::CorpusError,
    hypogen::EmbeddingError,
    hypogen::GraphError,
    hypogen::RankError,
    hypogen::evaluation::EvalError
);

impl From<hypogen::synth::SynthError> for CliError {
    fn from(e: hypogen::synth::SynthError) -> Self {
        match e {
            hypogen::synth::SynthError::Params(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "hypogen", version, about = "Alien hypothesis generation over a literature hypergraph")]
pub struct Cli {
    /// More log output on stderr (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate a corpus, report its size.
    Ingest(RunArgs),
    /// Build the pre-cutoff hypergraph and write the binary cache.
    BuildGraph(RunArgs),
    /// Rank candidates for one beta.
    Predict(RunArgs),
    /// Score a predictions file against ground truth.
    Evaluate(RunArgs),
    /// Predict and evaluate over a beta grid.
    Sweep(RunArgs),
    /// Distribution of discoveries over hop distance from the property.
    Histogram(RunArgs),
    /// Write a synthetic corpus bundle.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args)]
#[command(rename_all = "snake_case")]
pub struct SynthArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_authors: Option<usize>,
    #[arg(long)]
    pub n_communities: Option<usize>,
    #[arg(long)]
    pub n_concepts: Option<usize>,
    #[arg(long)]
    pub n_papers_pre: Option<usize>,
    #[arg(long)]
    pub n_papers_post: Option<usize>,
    #[arg(long)]
    pub property_community: Option<usize>,
    #[arg(long)]
    pub discovery_bias: Option<f64>,
    #[arg(long)]
    pub embedding_dim: Option<usize>,
    /// independent or gradient
    #[arg(long)]
    pub plausibility_field: Option<String>,
    #[arg(long)]
    pub discovery_fraction: Option<f64>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(a) => commands::ingest(&RunConfig::from_args(&a)?),
        Command::BuildGraph(a) => commands::build_graph(&RunConfig::from_args(&a)?),
        Command::Predict(a) => commands::predict(&RunConfig::from_args(&a)?),
        Command::Evaluate(a) => commands::evaluate(&RunConfig::from_args(&a)?),
        Command::Sweep(a) => commands::sweep(&RunConfig::from_args(&a)?),
        Command::Histogram(a) => commands::histogram(&RunConfig::from_args(&a)?),
        Command::Synth(a) => commands::synth(&a),
    }
}
