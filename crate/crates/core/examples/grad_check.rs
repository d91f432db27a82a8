//! Analytic gradients against central differences on a tiny model.
//!
//!     cargo run --release --example grad_check

use dualslice::cli::commands::prepare;
use dualslice::graph::{build_vocab, encode_all, DEFAULT_K};
use dualslice::model::{grad_check, init_params, ModelConfig};
use dualslice::slicer::SliceMode;
use dualslice::synth::rename_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (dps, _, _) = prepare(&rename_corpus(5, 1), &[SliceMode::Dual]);
    let vocab = build_vocab(&dps, DEFAULT_K, true)?;
    let config = ModelConfig { dim: 4, layers: 2, ..ModelConfig::default() };
    let params = init_params(&vocab, &config);
    println!("{} parameters", params.len());
    for s in encode_all(&dps, SliceMode::Dual, &vocab)? {
        let r = grad_check(&params, &s.graph, &s.gold, 1e-4, None)?;
        println!(
            "{} ({} nodes): max relative error {:.2e} at {}[{}] over {} entries, {} at a readout kink",
            s.id,
            s.graph.len(),
            r.max_rel_error,
            r.worst_block,
            r.worst_index,
            r.checked,
            r.kinks
        );
    }
    Ok(())
}
