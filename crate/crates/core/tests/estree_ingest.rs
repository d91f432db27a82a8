use std::fs;
use std::path::PathBuf;

use dualslice::syntax::{ingest_estree, parse, Kind, SourceFile, SyntaxTree};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/estree")
}

fn both(name: &str) -> (SourceFile, String) {
    let js = fs::read_to_string(dir().join(format!("{name}.js"))).unwrap();
    let json = fs::read_to_string(dir().join(format!("{name}.estree.json"))).unwrap();
    (SourceFile::new(format!("{name}.js"), js), json)
}

fn shape(t: &SyntaxTree) -> Vec<(Kind, Option<String>, usize, u32)> {
    t.nodes()
        .iter()
        .map(|n| (n.kind, n.value.clone(), n.children.len(), n.span.start.line))
        .collect()
}

const SUBSET: [&str; 6] = [
    "motivating",
    "add-argument-drone",
    "for-in-to-of",
    "var-to-let-loop",
    "boolean-extended",
    "wrong-this-property",
];

#[test]
fn estree_of_subset_sources_matches_the_parser() {
    for name in SUBSET {
        let (src, json) = both(name);
        let ours = parse(&src).unwrap();
        let theirs = ingest_estree(&json).unwrap();
        let (a, b) = (shape(&ours), shape(&theirs));
        let first = a.iter().zip(&b).position(|(x, y)| x != y);
        assert!(first.is_none() && a.len() == b.len(), "{name}: first difference at {first:?}: {:?} vs {:?}", first.map(|i| &a[i]), first.map(|i| &b[i]));
    }
}

#[test]
fn syntax_outside_the_subset_becomes_foreign_nodes() {
    let (src, json) = both("class-template");
    assert!(parse(&src).is_err());
    let t = ingest_estree(&json).unwrap();
    t.validate().unwrap();
    assert!(t.nodes().iter().any(|n| n.kind == Kind::Foreign));
    let cart: Vec<_> = t.nodes().iter().filter(|n| n.value.as_deref() == Some("cart")).collect();
    assert_eq!(cart.len(), 2);
}

#[test]
fn corpus_pairs_fall_back_to_estree_files() {
    use dualslice::corpus::{attach_slices, filter_pairs, load_dir};
    use dualslice::diff::EditOp;
    use dualslice::slicer::SliceMode;

    let pairs = load_dir(&dir().join("corpus")).unwrap();
    assert!(pairs[0].buggy_estree.is_some() && pairs[0].fixed_estree.is_some());
    let (kept, report) = filter_pairs(&pairs);
    assert_eq!(report.kept, 1);
    assert_eq!(kept[0].edit.op, EditOp::RepVal);
    assert_eq!(kept[0].edit.value_token.as_deref(), Some("other"));
    assert_eq!(kept[0].buggy_line, 8);
    // Slicing rebuilds statements from the subset grammar, so these pairs stop here.
    let (sliced, failed) = attach_slices(kept, &[SliceMode::Dual]);
    assert!(sliced.is_empty());
    assert_eq!(failed.len(), 1);
}

#[test]
fn malformed_estree_is_rejected() {
    assert!(ingest_estree("{\"type\": \"Program\"}").is_err());
    assert!(ingest_estree("not json").is_err());
    assert!(ingest_estree("[]").is_err());
}
