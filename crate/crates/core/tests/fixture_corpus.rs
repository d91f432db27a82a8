use std::path::PathBuf;

use dualslice::corpus::{attach_slices, filter_pairs, load_dir, Rejection};
use dualslice::diff::EditOp;
use dualslice::eval::context_stats;
use dualslice::slicer::SliceMode;
use dualslice::syntax::{parse, SourceFile};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus")
}

#[test]
fn fixture_corpus_filters_as_labelled() {
    let pairs = load_dir(&corpus_dir()).unwrap();
    let (kept, report) = filter_pairs(&pairs);
    for p in &pairs {
        let is_kept = kept.iter().any(|d| d.id == p.id);
        assert_eq!(is_kept, !p.id.starts_with("reject-"), "{}", p.id);
    }
    assert_eq!(report.rejected[&Rejection::Minified], 1);
    assert_eq!(report.rejected[&Rejection::NotOneNode], 1);
    assert_eq!(report.rejected[&Rejection::Unparseable], 1);
    assert_eq!(report.rejected_total(), report.input - report.kept);
    for op in EditOp::ALL {
        assert!(report.edit_ops.get(&op).copied().unwrap_or(0) > 0, "no {op} fixture");
    }
    for dp in &kept {
        dp.verify().unwrap();
    }
}

#[test]
fn fixture_slices_reduce_and_reparse() {
    let (kept, _) = filter_pairs(&load_dir(&corpus_dir()).unwrap());
    let n = kept.len();
    let (sliced, failed) = attach_slices(kept, &[SliceMode::Single, SliceMode::Dual]);
    assert!(failed.is_empty(), "{failed:?}");
    assert_eq!(sliced.len(), n);
    for dp in &sliced {
        for mode in [SliceMode::Single, SliceMode::Dual] {
            let s = dp.sliced(mode).unwrap();
            assert!(s.buggy_lines.len() <= dp.buggy_file().line_count(), "{}", dp.id);
            assert!(s.fixed_lines.len() <= dp.fixed_file().line_count(), "{}", dp.id);
            parse(&SourceFile::new("b.js", s.buggy_source.clone())).unwrap();
            parse(&SourceFile::new("f.js", s.fixed_source.clone())).unwrap();
            assert_eq!(s.edit.op, dp.edit.op);
        }
    }
    let stats = context_stats(&sliced, SliceMode::Dual);
    assert!(stats.all_reductions_non_negative);
    assert!(stats.line_reduction.mean > 0.0);
    let fallback = sliced.iter().find(|d| d.id == "string-literal-fallback").unwrap();
    assert!(fallback.sliced_dual.as_ref().unwrap().used_fallback);
}
