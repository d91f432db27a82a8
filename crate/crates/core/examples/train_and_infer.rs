//! Trains on the fixture corpus, round-trips the checkpoint and prints the
//! top-5 edits for a few datapoints.
//!
//!     cargo run --release --example train_and_infer -- 100

use std::env;

use dualslice::cli::commands::prepare;
use dualslice::corpus::load_dir;
use dualslice::eval::{exact_match, topk_accuracy};
use dualslice::graph::{build_vocab, encode_all, DEFAULT_K};
use dualslice::model::{beam_infer, checkpoint, train_with, ModelConfig};
use dualslice::slicer::SliceMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs = env::args().nth(1).map_or(Ok(100), |s| s.parse())?;
    let pairs = load_dir("fixtures/corpus".as_ref())?;
    let (dps, _, _) = prepare(&pairs, &[SliceMode::Dual]);
    let vocab = build_vocab(&dps, DEFAULT_K, true)?;
    let samples = encode_all(&dps, SliceMode::Dual, &vocab)?;
    println!("{} datapoints, {} kinds, {} values", samples.len(), vocab.n_kinds(), vocab.n_values());

    let config = ModelConfig { epochs, ..ModelConfig::default() };
    let (params, history) = train_with(&samples, &samples, &vocab, &config, |s| {
        if s.epoch % 20 == 0 {
            println!("epoch {:>4}  loss {:.4}  top-1 {:.2}", s.epoch, s.train_loss, s.val_top1);
        }
    })?;
    println!("best epoch {}", history.best_epoch);

    let bytes = checkpoint::to_bytes(&params, &vocab.hash());
    let (params, _) = checkpoint::from_bytes(&bytes)?;
    println!("checkpoint: {} bytes\n", bytes.len());

    for s in samples.iter().take(3) {
        println!("{}: gold {}", s.id, s.gold.to_graph_edit(&vocab));
        for c in beam_infer(&s.graph, &params, &vocab, 5).candidates {
            let mark = if exact_match(&c.edit, &s.gold).overall { "*" } else { " " };
            println!("  {mark} {:>8.4}  {}", c.log_prob, c.edit.to_graph_edit(&vocab));
        }
    }
    println!("\n{}", topk_accuracy(&samples, &params, &vocab, &[1, 3, 5]).table());
    Ok(())
}
