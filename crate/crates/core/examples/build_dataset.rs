//! Filters, slices and splits a directory of pairs into JSONL files.
//!
//!     cargo run --example build_dataset -- fixtures/corpus /tmp/dataset

use std::env;
use std::fs;
use std::path::PathBuf;

use dualslice::cli::commands::prepare;
use dualslice::corpus::{load_dir, split, write_jsonl, SplitSpec};
use dualslice::slicer::SliceMode;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = env::args().skip(1);
    let corpus = PathBuf::from(args.next().unwrap_or_else(|| "fixtures/corpus".into()));
    let out = args.next().map(PathBuf::from);

    let pairs = load_dir(&corpus)?;
    let (kept, report, failed) = prepare(&pairs, &[SliceMode::Single, SliceMode::Dual]);
    println!("{}", serde_json::to_string_pretty(&report)?);
    for (id, why) in failed {
        println!("slice failed: {id}: {why}");
    }

    let sp = split(kept, &SplitSpec::default())?;
    println!("train {}, validation {}, test {}", sp.train.len(), sp.validation.len(), sp.test.len());
    if let Some(dir) = out {
        fs::create_dir_all(&dir)?;
        for (name, part) in [("train", &sp.train), ("validation", &sp.validation), ("test", &sp.test)] {
            write_jsonl(part, &dir.join(format!("{name}.jsonl")))?;
        }
        println!("wrote {}", dir.display());
    }
    Ok(())
}
