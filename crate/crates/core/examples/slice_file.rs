//! Backward slice of one line of a JavaScript file.
//!
//!     cargo run --example slice_file -- fixtures/motivating/buggy.js 14

use std::env;
use std::fs;

use dualslice::slicer::Slicer;
use dualslice::syntax::{parse, reconstruct_statements, SourceFile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = env::args().skip(1);
    let path = args.next().unwrap_or_else(|| "fixtures/motivating/buggy.js".into());
    let line: u32 = args.next().map_or(Ok(14), |s| s.parse())?;

    let file = SourceFile::new(path.clone(), fs::read_to_string(&path)?);
    let tree = parse(&file)?;
    let slicer = Slicer::new(&tree);
    let criterion = slicer.criterion(line);
    let names: Vec<_> = criterion.entities.iter().map(|e| format!("{} ({:?})", e.name, e.kind)).collect();
    println!("criterion: line {line}, entities {}", names.join(", "));

    let slice = slicer.slice_with_fallback(&criterion);
    println!(
        "kept {} of {} lines (control flow: {}, whole-file fallback: {})",
        slice.context_lines.len(),
        file.line_count(),
        slice.used_control_flow,
        slice.used_fallback
    );
    println!("lines: {:?}\n", slice.context_lines);
    println!("{}", reconstruct_statements(&tree, &slice.context_lines)?);
    Ok(())
}
