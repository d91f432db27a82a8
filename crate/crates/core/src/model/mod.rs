//! Graph neural edit model.
//!
//! Node states start as kind embedding plus value embedding and go through
//! L rounds of
//!
//! ```text
//! h'_v = tanh(U h_v + Σ_{edge type, direction} W · mean_{u ∈ N(v)} h_u)
//! ```
//!
//! The graph vector averages, over layers 0..=L, the per-dimension maximum
//! over nodes. An edit is scored as location (bilinear in node state and
//! graph vector), then op, then ADD position, kind and value, each
//! conditioned on the chosen node; its log-probability is the sum.

pub mod beam;
pub mod checkpoint;
pub mod gradcheck;
pub mod net;
pub mod params;
pub mod train;

use serde::{Deserialize, Serialize};

pub use beam::{beam_infer, Candidate, Prediction};
pub use gradcheck::{grad_check, GradCheckError, GradCheckReport};
pub use net::{embed, loss_and_grad, score, EditDistribution, Embedding, LossError, Scorer, Topology};
pub use params::{init_params, Grads, ModelParams};
pub use train::{mean_loss, top1_accuracy, train, train_with, EpochStats, History, TrainError};

use crate::graph::{CodeGraph, IndexedEdit};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub dim: usize,
    pub layers: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Edit steps per datapoint. One-node corpora only ever have one.
    pub edit_steps: usize,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            layers: 4,
            learning_rate: 0.001,
            dropout: 0.1,
            batch_size: 10,
            epochs: 50,
            seed: 0,
            edit_steps: 1,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.dim < 1 {
            return Err("dim must be at least 1".into());
        }
        if self.layers < 1 {
            return Err("layers must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(format!("learning rate {} must be positive", self.learning_rate));
        }
        if self.batch_size < 1 {
            return Err("batch size must be at least 1".into());
        }
        if self.edit_steps < 1 {
            return Err("edit steps must be at least 1".into());
        }
        Ok(())
    }
}

/// Summed cross-entropy of the gold edit, dropout off.
pub fn loss(graph: &CodeGraph, gold: &IndexedEdit, params: &ModelParams) -> Result<f64, LossError> {
    loss_and_grad(graph, gold, params, None, None)
}

/// Gradient of [`loss`] with respect to every parameter.
pub fn grad(graph: &CodeGraph, gold: &IndexedEdit, params: &ModelParams) -> Result<Grads, LossError> {
    let mut g = params.zeros_like();
    loss_and_grad(graph, gold, params, None, Some(&mut g))?;
    Ok(g)
}

#[cfg(test)]
mod tests;
