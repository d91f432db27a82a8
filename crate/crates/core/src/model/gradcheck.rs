use serde::{Deserialize, Serialize};

use super::net::{embed, loss_and_grad, LossError, Topology};
use super::params::ModelParams;
use crate::graph::{CodeGraph, IndexedEdit};

/// Gradients smaller than this are compared absolutely rather than relatively.
pub const ABS_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_block: String,
    pub worst_index: usize,
    pub checked: usize,
    /// Entries skipped because the max readout switched nodes inside ±epsilon.
    #[serde(default)]
    pub kinks: usize,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GradCheckError {
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error(transparent)]
    Loss(#[from] LossError),
}

/// |a - n| / max(|a|, |n|, ABS_FLOOR).
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(ABS_FLOOR)
}

/// Compares the analytic gradient against central differences, with dropout
/// off. `per_block` limits the check to evenly spaced entries of each block.
///
/// The max readout makes the loss piecewise smooth. An entry whose two
/// probes land on different pieces measures the jump rather than the slope,
/// so it is counted in `kinks` and left out of the error.
pub fn grad_check(
    params: &ModelParams,
    graph: &CodeGraph,
    gold: &IndexedEdit,
    epsilon: f64,
    per_block: Option<usize>,
) -> Result<GradCheckReport, GradCheckError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(GradCheckError::BadEpsilon(epsilon));
    }
    let mut grads = params.zeros_like();
    loss_and_grad(graph, gold, params, None, Some(&mut grads))?;
    let topo = Topology::new(graph);
    let winners = |p: &ModelParams| embed(graph, &topo, p).readout_winners().to_vec();
    let base = winners(params);
    let mut p = params.clone();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_block: String::new(),
        worst_index: 0,
        checked: 0,
        kinks: 0,
    };
    for blk in &params.layout.blocks {
        let n = blk.len();
        let step = per_block.map_or(1, |m| n.div_ceil(m.max(1)).max(1));
        for i in (0..n).step_by(step) {
            let at = blk.offset + i;
            let orig = p.data[at];
            p.data[at] = orig + epsilon;
            let up = loss_and_grad(graph, gold, &p, None, None)?;
            let smooth_up = winners(&p) == base;
            p.data[at] = orig - epsilon;
            let down = loss_and_grad(graph, gold, &p, None, None)?;
            let smooth_down = winners(&p) == base;
            p.data[at] = orig;
            if !(smooth_up && smooth_down) {
                report.kinks += 1;
                continue;
            }
            let numeric = (up - down) / (2.0 * epsilon);
            let err = relative_error(grads.data[at], numeric);
            report.checked += 1;
            if err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst_block = blk.name.clone();
                report.worst_index = i;
            }
        }
    }
    Ok(report)
}
