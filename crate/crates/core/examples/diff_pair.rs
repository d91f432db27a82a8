//! One-node diff of a buggy/fixed pair, then its single and dual slices.
//!
//!     cargo run --example diff_pair -- fixtures/motivating/buggy.js fixtures/motivating/fixed.js

use std::env;
use std::fs;

use dualslice::diff::{ast_diff, DiffOutcome};
use dualslice::slicer::{dual_slice, single_slice};
use dualslice::syntax::{parse, SourceFile};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = env::args().skip(1);
    let bpath = args.next().unwrap_or_else(|| "fixtures/motivating/buggy.js".into());
    let fpath = args.next().unwrap_or_else(|| "fixtures/motivating/fixed.js".into());
    let buggy = SourceFile::new(bpath.clone(), fs::read_to_string(&bpath)?);
    let fixed = SourceFile::new(fpath.clone(), fs::read_to_string(&fpath)?);

    let d = match ast_diff(&parse(&buggy)?, &parse(&fixed)?) {
        DiffOutcome::Edit(d) => d,
        DiffOutcome::NoDifference => return Err("the files are structurally identical".into()),
        DiffOutcome::NotOneNode => return Err("the files differ by more than one node".into()),
    };
    println!("edit: {}", d.edit);
    println!("buggy line {}, fixed line {}\n", d.buggy_line, d.fixed_line);

    let single = single_slice(&buggy, &fixed, &d)?;
    let dual = dual_slice(&buggy, &fixed, &d)?;
    println!("// buggy slice ({} lines)\n{}\n", single.buggy_lines.len(), single.buggy_source);
    println!("// fixed side, single ({} lines)\n{}\n", single.fixed_lines.len(), single.fixed_source);
    println!("// fixed side, dual ({} lines)\n{}", dual.fixed_lines.len(), dual.fixed_source);
    println!("\nedit on the sliced buggy tree: {}", single.edit);
    Ok(())
}
