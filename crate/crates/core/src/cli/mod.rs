//! Command-line front end. `run` parses arguments, resolves the
//! configuration and dispatches; the binary is a thin wrapper around it.
//!
//! Exit codes: 0 success, 1 bad input, 2 usage error, 3 invariant violation.

use std::io::Write;
use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod manifest;

pub use config::{Overrides, RunConfig};
pub use manifest::{Manifest, MANIFEST_FILE};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

macro_rules! input_error {
    ($($t:ty),*) => { $( impl From<$t> for CliError { fn from(e: $t) -> Self { CliError::Input(e.to_string()) } } )* };
}
input_error!(
    crate::corpus::CorpusError,
    crate::graph::GraphError,
    crate::model::checkpoint::CheckpointError,
    crate::syntax::ParseError,
    crate::slicer::SliceError,
    crate::syntax::ReconstructError
);

impl From<crate::model::TrainError> for CliError {
    fn from(e: crate::model::TrainError) -> Self {
        use crate::model::TrainError as T;
        match e {
            T::Config(_) => CliError::Usage(e.to_string()),
            T::Diverged { .. } => CliError::Internal(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

impl From<crate::model::GradCheckError> for CliError {
    fn from(e: crate::model::GradCheckError) -> Self {
        match e {
            crate::model::GradCheckError::BadEpsilon(_) => CliError::Usage(e.to_string()),
            _ => CliError::Internal(e.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dualslice", version, about = "Slice-based context extraction and one-edit program repair")]
pub struct Cli {
    #[command(flatten)]
    pub overrides: Overrides,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Side {
    Buggy,
    Fixed,
    Both,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Backward-slice a file from a line, or a buggy/fixed pair from its changed line
    Slice {
        file: PathBuf,
        line: u32,
        /// Fixed version of FILE; slices the pair
        #[arg(long)]
        fixed: Option<PathBuf>,
        /// Slice the fixed file from its own changed line
        #[arg(long, requires = "fixed")]
        dual: bool,
        /// Print kept line numbers
        #[arg(long, conflicts_with = "emit_source")]
        emit_lines: bool,
        /// Print the reconstructed source (default)
        #[arg(long)]
        emit_source: bool,
        /// Which side of a pair to print
        #[arg(long, value_enum, default_value = "both")]
        side: Side,
    },
    /// Filter, dedup, split and slice a corpus directory
    Dataset {
        corpus: PathBuf,
        /// train,test,validation fractions
        #[arg(long)]
        split: Option<String>,
    },
    /// Train a model on a dataset
    Train,
    /// Grid search over layers, learning rate and dropout
    Tune {
        #[arg(long, value_delimiter = ',', default_values_t = [2usize, 3, 4])]
        grid_layers: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.1, 0.01, 0.001])]
        grid_lr: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.1, 0.2])]
        grid_dropout: Vec<f64>,
    },
    /// Predict top-k patches for a buggy file and line, or a pair directory
    Infer { path: PathBuf, line: Option<u32> },
    /// Top-k exact-match accuracy on a dataset split
    Eval {
        /// Split to evaluate: train, validation or test
        #[arg(long, default_value = "test")]
        on: String,
        /// Another run's eval.json to compare against
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Context reduction statistics for a corpus or dataset directory
    Stats {
        input: PathBuf,
        /// Also write per-datapoint rows as CSV
        #[arg(long)]
        emit_csv: bool,
    },
    /// Compare analytic gradients with central differences
    GradCheck {
        #[arg(long, default_value_t = 1e-4)]
        epsilon: f64,
        /// Number of samples to check
        #[arg(long, default_value_t = 5)]
        samples: usize,
        /// Entries checked per parameter block
        #[arg(long, default_value_t = 8)]
        per_block: usize,
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
    },
    /// Re-run a command from its manifest and compare outputs
    Replay { manifest: PathBuf },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Slice { .. } => "slice",
            Command::Dataset { .. } => "dataset",
            Command::Train => "train",
            Command::Tune { .. } => "tune",
            Command::Infer { .. } => "infer",
            Command::Eval { .. } => "eval",
            Command::Stats { .. } => "stats",
            Command::GradCheck { .. } => "grad-check",
            Command::Replay { .. } => "replay",
        }
    }
}

/// Runs one invocation. `args` excludes the program name.
pub fn run(args: &[String], out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> i32 {
    let cli = match Cli::try_parse_from(std::iter::once("dualslice".to_string()).chain(args.iter().cloned())) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 { write!(out, "{e}") } else { write!(err, "{e}") };
            return code;
        }
    };
    match execute(cli, args, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: Cli, args: &[String], out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)) -> Result<(), CliError> {
    let mut rec = manifest::Recorder::new(None);
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.overrides.config {
        let text = rec.read(path)?;
        cfg.apply_file(&text, path)?;
    }
    cfg.apply_flags(&cli.overrides);
    cfg.validate()?;
    rec.set_out(cfg.out.clone());
    let name = cli.command.name();
    let work = |rec: &mut manifest::Recorder, out: &mut (dyn Write + Send), err: &mut (dyn Write + Send)| {
        commands::dispatch(&cli.command, &cfg, rec, out, err)
    };
    match cfg.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Internal(e.to_string()))?;
            pool.install(|| work(&mut rec, out, err))?
        }
        None => work(&mut rec, out, err)?,
    }
    if !matches!(cli.command, Command::Replay { .. }) {
        rec.finish(name, args, &cfg)?;
    }
    Ok(())
}
