use std::collections::BTreeSet;
use std::path::PathBuf;

use dualslice::diff::{ast_diff, DiffOutcome, EditOp};
use dualslice::slicer::{dual_slice, single_slice, EntityKind, Slicer};
use dualslice::syntax::{parse, reconstruct_statements, SourceFile};

fn fixture(name: &str) -> SourceFile {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/motivating").join(name);
    SourceFile::new(path.display().to_string(), std::fs::read_to_string(&path).unwrap())
}

fn squash(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

#[test]
fn motivating_example_parses() {
    let t = parse(&fixture("buggy.js")).unwrap();
    t.validate().unwrap();
    assert_eq!(fixture("buggy.js").line_count(), 66);
    assert_eq!(fixture("buggy.js").line(66), Some("});"));
}

#[test]
fn buggy_line_entities() {
    let t = parse(&fixture("buggy.js")).unwrap();
    let s = Slicer::new(&t);
    let ents: Vec<_> = s.entities(14).into_iter().map(|e| (e.name, e.kind)).collect();
    assert_eq!(
        ents,
        [
            ("currentUser".to_string(), EntityKind::ObjectProperty),
            ("service".to_string(), EntityKind::Function)
        ]
    );
}

#[test]
fn single_slice_context_lines() {
    let t = parse(&fixture("buggy.js")).unwrap();
    let s = Slicer::new(&t);
    let slice = s.slice_with_fallback(&s.criterion(14));
    let expected: BTreeSet<u32> = (3..=11).chain([13, 14, 66]).collect();
    assert_eq!(slice.context_lines, expected);
    assert!(!slice.used_fallback);
    assert!(!slice.used_control_flow);
    let text = reconstruct_statements(&t, &slice.context_lines).unwrap();
    assert_eq!(squash(&text), squash(&fixture("single_buggy.golden.js").content));
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn single_and_dual_pairs_match_listings() {
    let (b, f) = (fixture("buggy.js"), fixture("fixed.js"));
    let diff = match ast_diff(&parse(&b).unwrap(), &parse(&f).unwrap()) {
        DiffOutcome::Edit(d) => d,
        other => panic!("{other:?}"),
    };
    assert_eq!(diff.edit.op, EditOp::AddNode);
    assert_eq!(diff.edit.value_token.as_deref(), Some("user"));
    assert_eq!((diff.buggy_line, diff.fixed_line), (14, 14));

    let single = single_slice(&b, &f, &diff).unwrap();
    assert_eq!(squash(&single.buggy_source), squash(&fixture("single_buggy.golden.js").content));
    assert_eq!(squash(&single.fixed_source), squash(&fixture("single_fixed.golden.js").content));

    let dual = dual_slice(&b, &f, &diff).unwrap();
    assert_eq!(dual.buggy_source, single.buggy_source);
    assert_eq!(squash(&dual.fixed_source), squash(&fixture("dual_fixed.golden.js").content));
    assert_eq!(dual.fixed_source.lines().count(), 13);
    assert!(dual.fixed_source.contains("const user = get('currentUser.user');"));
    assert_eq!(dual.edit, single.edit);
    assert_eq!(dual.buggy_line, 11);
    assert_eq!(dual.fixed_line, 12);
}
