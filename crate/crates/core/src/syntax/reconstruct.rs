use std::collections::BTreeSet;

use super::{parse, Kind, ParseError, SourceFile, SyntaxTree};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReconstructError {
    #[error("tree has no attached source text")]
    NoSource,
    #[error("line {0} is outside the file")]
    LineOutOfRange(u32),
    #[error("reconstructed slice does not parse: {0}")]
    Unparseable(ParseError),
}

/// Multi-line non-root nodes; the only nodes that can force extra lines.
pub(crate) fn multiline_nodes(tree: &SyntaxTree) -> Vec<usize> {
    (1..tree.len())
        .filter(|&i| tree.node(i).span.is_multiline())
        .collect()
}

/// Lines that must accompany `line` so the constructs enclosing it stay
/// balanced: the first and last line of every multi-line node covering it.
/// For `if` and `try`, a line inside a later branch also pulls in the first
/// and last lines of the earlier branches so that `else`/`catch` still attach.
pub(crate) fn enclosing_lines(tree: &SyntaxTree, multi: &[usize], line: u32) -> Vec<u32> {
    let mut add = Vec::new();
    for &id in multi {
        let n = tree.node(id);
        if !n.span.covers_line(line) {
            continue;
        }
        add.push(n.span.start.line);
        add.push(n.span.end.line);
        if matches!(n.kind, Kind::If | Kind::Try) {
            for &c in &n.children {
                let cs = tree.node(c).span;
                if cs.covers_line(line) {
                    break;
                }
                if cs.end.line < line {
                    add.push(cs.start.line);
                    add.push(cs.end.line);
                }
            }
        }
    }
    add
}

/// Completes `lines` with the header and terminator lines of every multi-line
/// construct enclosing a selected line, until nothing changes.
pub fn closure_lines(tree: &SyntaxTree, lines: &BTreeSet<u32>) -> BTreeSet<u32> {
    let multi = multiline_nodes(tree);
    let mut out = lines.clone();
    let mut work: Vec<u32> = lines.iter().copied().collect();
    while let Some(line) = work.pop() {
        for l in enclosing_lines(tree, &multi, line) {
            if out.insert(l) {
                work.push(l);
            }
        }
    }
    out
}

/// Emits the closure-completed selection of source lines, in file order, and
/// checks that the result parses.
pub fn reconstruct_statements(
    tree: &SyntaxTree,
    context_lines: &BTreeSet<u32>,
) -> Result<String, ReconstructError> {
    let source = tree.source().ok_or(ReconstructError::NoSource)?;
    let all = source.lines();
    if let Some(&bad) = context_lines
        .iter()
        .find(|&&l| l == 0 || l as usize > all.len())
    {
        return Err(ReconstructError::LineOutOfRange(bad));
    }
    let lines = closure_lines(tree, context_lines);
    let text = lines
        .iter()
        .map(|&l| all[l as usize - 1])
        .collect::<Vec<_>>()
        .join("\n");
    parse(&SourceFile::new(source.path.clone(), text.clone()))
        .map_err(ReconstructError::Unparseable)?;
    Ok(text)
}
