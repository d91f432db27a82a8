//! Run configuration: defaults, then a `key = value` file, then flags.
//!
//! File format: one `key = value` per line, `#` starts a comment, blank
//! lines are ignored. Keys are the long flag names (`vocab-size` and
//! `vocab_size` are both accepted).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::corpus::SplitSpec;
use crate::graph::DEFAULT_K;
use crate::model::ModelConfig;
use crate::slicer::SliceMode;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub model: ModelConfig,
    /// `None` until set by a file or flag, so commands can fall back to
    /// what a checkpoint was trained with.
    pub mode: Option<SliceMode>,
    pub k: usize,
    pub vocab_size: usize,
    pub split: [f64; 3],
    pub threads: Option<usize>,
    pub data: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default(),
            mode: None,
            k: 5,
            vocab_size: DEFAULT_K,
            split: [0.8, 0.1, 0.1],
            threads: None,
            data: None,
            checkpoint: None,
            out: None,
        }
    }
}

/// Flag values that override the file. All optional.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// key=value configuration file
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Slicing mode: single, dual or none
    #[arg(long, global = true)]
    pub mode: Option<SliceMode>,
    /// Beam size
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub epochs: Option<usize>,
    #[arg(long, global = true)]
    pub layers: Option<usize>,
    /// Embedding width
    #[arg(long, global = true)]
    pub dim: Option<usize>,
    #[arg(long, global = true)]
    pub lr: Option<f64>,
    #[arg(long, global = true)]
    pub dropout: Option<f64>,
    #[arg(long, global = true)]
    pub batch: Option<usize>,
    #[arg(long, global = true)]
    pub edit_steps: Option<usize>,
    /// Number of values kept in the vocabulary
    #[arg(long, global = true)]
    pub vocab_size: Option<usize>,
    /// Worker threads; 1 gives bit-reproducible runs
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Dataset directory (train/validation/test jsonl)
    #[arg(long, global = true)]
    pub data: Option<PathBuf>,
    /// Directory written by `train`
    #[arg(long, global = true)]
    pub checkpoint: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse().map_err(|_| usage(format!("bad value for `{key}`: `{v}`")))
}

/// Parses `a,b,c` fractions for train, test and validation.
pub fn parse_split(v: &str) -> Result<[f64; 3], CliError> {
    let parts: Vec<f64> = v
        .split(',')
        .map(|p| num::<f64>("split", p.trim()))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(parts).map_err(|_| usage("split needs three fractions: train,test,validation"))
}

impl RunConfig {
    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train: self.split[0],
            test: self.split[1],
            validation: self.split[2],
            seed: self.model.seed,
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let m = &mut self.model;
        match key.replace('_', "-").as_str() {
            "mode" => self.mode = Some(value.parse().map_err(usage)?),
            "k" => self.k = num(key, value)?,
            "seed" => m.seed = num(key, value)?,
            "epochs" => m.epochs = num(key, value)?,
            "layers" => m.layers = num(key, value)?,
            "dim" => m.dim = num(key, value)?,
            "lr" | "learning-rate" => m.learning_rate = num(key, value)?,
            "dropout" => m.dropout = num(key, value)?,
            "batch" | "batch-size" => m.batch_size = num(key, value)?,
            "edit-steps" => m.edit_steps = num(key, value)?,
            "vocab-size" => self.vocab_size = num(key, value)?,
            "split" => self.split = parse_split(value)?,
            "threads" => self.threads = Some(num(key, value)?),
            "data" => self.data = Some(value.into()),
            "checkpoint" => self.checkpoint = Some(value.into()),
            "out" => self.out = Some(value.into()),
            _ => return Err(usage(format!("unknown config key `{key}`"))),
        }
        Ok(())
    }

    pub fn apply_file(&mut self, text: &str, path: &Path) -> Result<(), CliError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("{}:{}: expected key = value", path.display(), i + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn apply_flags(&mut self, o: &Overrides) {
        let m = &mut self.model;
        macro_rules! over {
            ($($src:ident => $dst:expr),* $(,)?) => { $( if let Some(v) = o.$src.clone() { $dst = v; } )* };
        }
        over!(
            seed => m.seed, epochs => m.epochs, layers => m.layers, dim => m.dim, lr => m.learning_rate,
            dropout => m.dropout, batch => m.batch_size, edit_steps => m.edit_steps,
            k => self.k, vocab_size => self.vocab_size,
        );
        if o.mode.is_some() {
            self.mode = o.mode;
        }
        if o.threads.is_some() {
            self.threads = o.threads;
        }
        if o.data.is_some() {
            self.data = o.data.clone();
        }
        if o.checkpoint.is_some() {
            self.checkpoint = o.checkpoint.clone();
        }
        if o.out.is_some() {
            self.out = o.out.clone();
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.model.validate().map_err(usage)?;
        if self.k == 0 {
            return Err(usage("k must be at least 1"));
        }
        if self.vocab_size == 0 {
            return Err(usage("vocab-size must be at least 1"));
        }
        if self.threads == Some(0) {
            return Err(usage("threads must be at least 1"));
        }
        self.split_spec().validate().map_err(|e| usage(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let mut c = RunConfig::default();
        c.apply_file("# comment\nepochs = 3\nvocab_size=10 # trailing\n\nmode = single\n", Path::new("x"))
            .unwrap();
        assert_eq!((c.model.epochs, c.vocab_size, c.mode), (3, 10, Some(SliceMode::Single)));
        let o = Overrides {
            epochs: Some(7),
            ..Default::default()
        };
        c.apply_flags(&o);
        assert_eq!(c.model.epochs, 7);
        assert_eq!(c.vocab_size, 10);
    }

    #[test]
    fn bad_keys_and_values_are_usage_errors() {
        let mut c = RunConfig::default();
        assert!(matches!(c.set("colour", "red"), Err(CliError::Usage(_))));
        assert!(matches!(c.set("epochs", "many"), Err(CliError::Usage(_))));
        assert!(matches!(c.apply_file("epochs 3", Path::new("x")), Err(CliError::Usage(_))));
        assert!(parse_split("0.8,0.2").is_err());
        c.k = 0;
        assert!(c.validate().is_err());
    }
}
