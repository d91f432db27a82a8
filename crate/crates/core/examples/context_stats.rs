//! How much context slicing removes, per datapoint and in aggregate.
//!
//!     cargo run --example context_stats -- fixtures/corpus

use std::env;
use std::path::PathBuf;

use dualslice::cli::commands::prepare;
use dualslice::corpus::load_dir;
use dualslice::eval::context_stats;
use dualslice::slicer::SliceMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = PathBuf::from(env::args().nth(1).unwrap_or_else(|| "fixtures/corpus".into()));
    let (dps, _, _) = prepare(&load_dir(&corpus)?, &[SliceMode::Dual]);
    let stats = context_stats(&dps, SliceMode::Dual);
    for r in &stats.rows {
        println!(
            "{:<32} lines {:>3} -> {:<3} tokens {:>4} -> {:<4}{}",
            r.id,
            r.lines_before,
            r.lines_after,
            r.tokens_before,
            r.tokens_after,
            if r.used_control_flow { " control flow" } else { "" }
        );
    }
    println!("\n{}", stats.table());
    Ok(())
}
