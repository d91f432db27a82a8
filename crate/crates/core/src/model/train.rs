use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::beam::beam_infer;
use super::net::{loss_and_grad, LossError};
use super::params::{init_params, Grads, ModelParams};
use super::ModelConfig;
use crate::eval::exact_match;
use crate::graph::{Sample, Vocabulary};

/// Adam with the usual defaults.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(lr: f64, n: usize) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= self.lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_top1: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct History {
    pub epochs: Vec<EpochStats>,
    pub best_epoch: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("empty {0} set")]
    Empty(&'static str),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("sample {id}: {source}")]
    Sample {
        id: String,
        #[source]
        source: LossError,
    },
    #[error("loss became non-finite in epoch {epoch} (sample {id})")]
    Diverged { epoch: usize, id: String },
}

fn sample_seed(seed: u64, epoch: usize, slot: usize) -> u64 {
    seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ (slot as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)
}

/// Mean loss without dropout.
pub fn mean_loss(samples: &[Sample], params: &ModelParams) -> Result<f64, TrainError> {
    let losses: Vec<f64> = samples
        .par_iter()
        .map(|s| {
            loss_and_grad(&s.graph, &s.gold, params, None, None).map_err(|source| TrainError::Sample {
                id: s.id.clone(),
                source,
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(losses.iter().sum::<f64>() / samples.len().max(1) as f64)
}

/// Fraction of samples whose top-1 prediction exactly matches the gold edit.
pub fn top1_accuracy(samples: &[Sample], params: &ModelParams, vocab: &Vocabulary) -> f64 {
    let hits: usize = samples
        .par_iter()
        .map(|s| {
            let p = beam_infer(&s.graph, params, vocab, 1);
            p.top().is_some_and(|e| exact_match(e, &s.gold).overall) as usize
        })
        .sum();
    hits as f64 / samples.len().max(1) as f64
}

/// One mini-batch gradient, averaged; per-sample gradients are computed in
/// parallel and summed in batch order.
fn batch_grad(
    batch: &[&Sample],
    params: &ModelParams,
    seed: u64,
    epoch: usize,
    first_slot: usize,
) -> Result<(f64, Grads), (String, Option<LossError>)> {
    let parts: Vec<(f64, Grads)> = batch
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let mut rng = ChaCha8Rng::seed_from_u64(sample_seed(seed, epoch, first_slot + i));
            let mut g = params.zeros_like();
            let loss = loss_and_grad(&s.graph, &s.gold, params, Some(&mut rng), Some(&mut g))
                .map_err(|e| (s.id.clone(), Some(e)))?;
            if !loss.is_finite() {
                return Err((s.id.clone(), None));
            }
            Ok((loss, g))
        })
        .collect::<Result<_, _>>()?;
    let mut total = params.zeros_like();
    let mut loss = 0.0;
    for (l, g) in &parts {
        loss += l;
        total.add_assign(g);
    }
    total.scale(1.0 / batch.len() as f64);
    Ok((loss, total))
}

/// Trains from a fresh initialization and returns the parameters of the
/// epoch with the best validation top-1 (ties: lower validation loss).
pub fn train(
    train_set: &[Sample],
    val_set: &[Sample],
    vocab: &Vocabulary,
    config: &ModelConfig,
) -> Result<(ModelParams, History), TrainError> {
    train_with(train_set, val_set, vocab, config, |_| {})
}

pub fn train_with(
    train_set: &[Sample],
    val_set: &[Sample],
    vocab: &Vocabulary,
    config: &ModelConfig,
    mut on_epoch: impl FnMut(&EpochStats),
) -> Result<(ModelParams, History), TrainError> {
    config.validate().map_err(TrainError::Config)?;
    if train_set.is_empty() {
        return Err(TrainError::Empty("training"));
    }
    if val_set.is_empty() {
        return Err(TrainError::Empty("validation"));
    }
    let mut params = init_params(vocab, config);
    let mut adam = Adam::new(config.learning_rate, params.len());
    let mut history = History::default();
    let mut best: Option<(f64, f64, ModelParams)> = None;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=config.epochs {
        order.sort_unstable();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(sample_seed(config.seed, epoch, usize::MAX)));
        let mut epoch_loss = 0.0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&Sample> = chunk.iter().map(|&i| &train_set[i]).collect();
            let (loss, g) =
                batch_grad(&batch, &params, config.seed, epoch, b * config.batch_size).map_err(|(id, e)| match e {
                    Some(source) => TrainError::Sample { id, source },
                    None => TrainError::Diverged { epoch, id },
                })?;
            epoch_loss += loss;
            adam.step(&mut params.data, &g.data);
            if !params.is_finite() {
                return Err(TrainError::Diverged {
                    epoch,
                    id: batch[0].id.clone(),
                });
            }
        }
        let stats = EpochStats {
            epoch,
            train_loss: epoch_loss / train_set.len() as f64,
            val_loss: mean_loss(val_set, &params)?,
            val_top1: top1_accuracy(val_set, &params, vocab),
        };
        on_epoch(&stats);
        let better = match &best {
            None => true,
            Some((acc, loss, _)) => stats.val_top1 > *acc || (stats.val_top1 == *acc && stats.val_loss < *loss),
        };
        if better {
            best = Some((stats.val_top1, stats.val_loss, params.clone()));
            history.best_epoch = epoch;
        }
        history.epochs.push(stats);
    }
    let params = best.map(|b| b.2).unwrap_or(params);
    Ok((params, history))
}
