//! Trains one model on single slices and one on dual slices of a synthetic
//! identifier-rename corpus, then compares test accuracy.
//!
//!     cargo run --release --example single_vs_dual -- 120

use std::env;

use dualslice::cli::commands::prepare;
use dualslice::corpus::{split, SplitSpec};
use dualslice::eval::{compare_runs, topk_accuracy};
use dualslice::graph::{build_vocab, encode_all, DEFAULT_K};
use dualslice::model::{train, ModelConfig};
use dualslice::slicer::SliceMode;
use dualslice::synth::rename_corpus;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epochs = env::args().nth(1).map_or(Ok(120), |s| s.parse())?;
    let (dps, report, _) = prepare(&rename_corpus(300, 7), &[SliceMode::Single, SliceMode::Dual]);
    println!("{} of {} pairs kept", report.kept, report.input);
    let sp = split(dps, &SplitSpec::default())?;
    let config = ModelConfig { epochs, ..ModelConfig::default() };

    let mut reports = Vec::new();
    for mode in [SliceMode::Single, SliceMode::Dual] {
        let vocab = build_vocab(&sp.train, DEFAULT_K, mode == SliceMode::Dual)?;
        let enc = |d| encode_all(d, mode, &vocab);
        let (tr, va, te) = (enc(&sp.train)?, enc(&sp.validation)?, enc(&sp.test)?);
        let (params, history) = train(&tr, &va, &vocab, &config)?;
        let r = topk_accuracy(&te, &params, &vocab, &[1, 3, 5]);
        println!("\n{mode} slicing: {} values, best epoch {}\n{}", vocab.n_values(), history.best_epoch, r.table());
        reports.push(r);
    }
    let overlap = compare_runs(&reports[0], &reports[1], 1)?;
    println!("{}", serde_json::to_string_pretty(&overlap)?);
    Ok(())
}
