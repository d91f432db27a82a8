//! Source files, span-annotated syntax trees and the JavaScript-subset front end.
//!
//! Trees are stored as a preorder arena: node `0` is always the root and a
//! node's descendants occupy the contiguous index range that follows it.
//! Operators, property names and literals are value-bearing leaves so every
//! token a repair might touch is addressable as a node.

mod estree;
mod kind;
mod lexer;
mod parser;
mod reconstruct;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use estree::ingest_estree;
pub use kind::Kind;
pub use lexer::{tokenize, Token, TokenKind};
pub use parser::parse;
pub use reconstruct::{closure_lines, reconstruct_statements, ReconstructError};
pub(crate) use reconstruct::{enclosing_lines, multiline_nodes};

/// A source file split into 1-indexed lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub path: String,
    pub content: String,
}

impl SourceFile {
    pub fn new(path: impl Into<String>, content: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            content: content.into(),
        }
    }

    pub fn lines(&self) -> Vec<&str> {
        if self.content.is_empty() {
            return Vec::new();
        }
        self.content.split('\n').collect()
    }

    /// Number of lines, not counting the empty remainder after a final newline.
    pub fn line_count(&self) -> usize {
        let n = self.lines().len();
        if self.content.ends_with('\n') {
            n - 1
        } else {
            n
        }
    }

    /// Text of the 1-indexed line `n`, without its terminator.
    pub fn line(&self, n: usize) -> Option<&str> {
        if n == 0 {
            return None;
        }
        self.content.split('\n').nth(n - 1)
    }
}

/// Line (1-based) and byte column (0-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Self { line, col }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: Pos,
    pub end: Pos,
}

impl Span {
    pub fn new(start: Pos, end: Pos) -> Self {
        Self { start, end }
    }

    pub fn point(pos: Pos) -> Self {
        Self { start: pos, end: pos }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn covers_line(&self, line: u32) -> bool {
        self.start.line <= line && line <= self.end.line
    }

    pub fn is_multiline(&self) -> bool {
        self.end.line > self.start.line
    }

    pub fn join(&self, other: &Span) -> Span {
        Span {
            start: self.start.min(other.start),
            end: self.end.max(other.end),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error, Serialize, Deserialize)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl ParseError {
    pub fn new(pos: Pos, message: impl Into<String>) -> Self {
        Self {
            line: pos.line,
            col: pos.col,
            message: message.into(),
        }
    }
}

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxNode {
    pub kind: Kind,
    pub value: Option<String>,
    pub children: Vec<NodeId>,
    pub span: Span,
}

impl SyntaxNode {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// An owned, nested node used while building or rewriting trees.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawNode {
    pub kind: Kind,
    pub value: Option<String>,
    pub span: Span,
    pub children: Vec<RawNode>,
}

impl RawNode {
    pub fn new(kind: Kind, span: Span, children: Vec<RawNode>) -> Self {
        Self {
            kind,
            value: None,
            span,
            children,
        }
    }

    pub fn leaf(kind: Kind, value: Option<String>, span: Span) -> Self {
        Self {
            kind,
            value,
            span,
            children: Vec::new(),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(RawNode::size).sum::<usize>()
    }
}

#[derive(Debug, Clone)]
pub struct SyntaxTree {
    nodes: Vec<SyntaxNode>,
    parents: Vec<Option<NodeId>>,
    source: Option<SourceFile>,
}

impl SyntaxTree {
    /// Flattens a nested tree into preorder.
    pub fn from_raw(raw: RawNode, source: Option<SourceFile>) -> Self {
        let mut nodes = Vec::with_capacity(raw.size());
        let mut parents = Vec::with_capacity(nodes.capacity());
        fn push(
            raw: RawNode,
            parent: Option<NodeId>,
            nodes: &mut Vec<SyntaxNode>,
            parents: &mut Vec<Option<NodeId>>,
        ) -> NodeId {
            let id = nodes.len();
            nodes.push(SyntaxNode {
                kind: raw.kind,
                value: raw.value,
                children: Vec::with_capacity(raw.children.len()),
                span: raw.span,
            });
            parents.push(parent);
            for child in raw.children {
                let c = push(child, Some(id), nodes, parents);
                nodes[id].children.push(c);
            }
            id
        }
        push(raw, None, &mut nodes, &mut parents);
        Self {
            nodes,
            parents,
            source,
        }
    }

    pub fn to_raw(&self) -> RawNode {
        self.raw_at(self.root())
    }

    pub fn raw_at(&self, id: NodeId) -> RawNode {
        let n = &self.nodes[id];
        RawNode {
            kind: n.kind,
            value: n.value.clone(),
            span: n.span,
            children: n.children.iter().map(|&c| self.raw_at(c)).collect(),
        }
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, id: NodeId) -> &SyntaxNode {
        &self.nodes[id]
    }

    pub fn nodes(&self) -> &[SyntaxNode] {
        &self.nodes
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.parents[id]
    }

    pub fn source(&self) -> Option<&SourceFile> {
        self.source.as_ref()
    }

    pub fn with_source(mut self, source: SourceFile) -> Self {
        self.source = Some(source);
        self
    }

    /// Index one past the last descendant of `id`.
    pub fn subtree_end(&self, id: NodeId) -> NodeId {
        let mut cur = id;
        while let Some(&last) = self.nodes[cur].children.last() {
            cur = last;
        }
        cur + 1
    }

    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.parents[id], move |&p| self.parents[p])
    }

    /// Child position of `id` within its parent.
    pub fn child_position(&self, id: NodeId) -> Option<usize> {
        let p = self.parents[id]?;
        self.nodes[p].children.iter().position(|&c| c == id)
    }

    pub fn leaves(&self) -> Vec<NodeId> {
        leaves(self)
    }

    /// Structural equality on kind, value and child order; spans are ignored.
    pub fn isomorphic(&self, other: &SyntaxTree) -> bool {
        self.subtree_eq(self.root(), other, other.root())
    }

    pub fn subtree_eq(&self, a: NodeId, other: &SyntaxTree, b: NodeId) -> bool {
        let (x, y) = (&self.nodes[a], &other.nodes[b]);
        x.kind == y.kind
            && x.value == y.value
            && x.children.len() == y.children.len()
            && x
                .children
                .iter()
                .zip(&y.children)
                .all(|(&ca, &cb)| self.subtree_eq(ca, other, cb))
    }

    /// Checks the structural invariants: preorder numbering, valid children
    /// and child spans nested inside their parent.
    pub fn validate(&self) -> Result<(), String> {
        if self.nodes.is_empty() {
            return Err("empty tree".into());
        }
        if self.parents[0].is_some() {
            return Err("root has a parent".into());
        }
        let mut expected = 1;
        fn walk(
            t: &SyntaxTree,
            id: NodeId,
            expected: &mut usize,
        ) -> Result<(), String> {
            for &c in &t.nodes[id].children {
                if c != *expected {
                    return Err(format!("node {c} out of preorder (expected {expected})"));
                }
                if t.parents[c] != Some(id) {
                    return Err(format!("node {c} has wrong parent"));
                }
                if !t.nodes[id].span.contains(&t.nodes[c].span) {
                    return Err(format!("span of node {c} escapes parent {id}"));
                }
                *expected += 1;
                walk(t, c, expected)?;
            }
            Ok(())
        }
        walk(self, 0, &mut expected)?;
        if expected != self.nodes.len() {
            return Err("unreachable nodes".into());
        }
        Ok(())
    }

    /// Source text of the tree rendered one node per line, for debugging.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        fn go(t: &SyntaxTree, id: NodeId, depth: usize, out: &mut String) {
            let n = &t.nodes[id];
            out.push_str(&"  ".repeat(depth));
            out.push_str(&format!("{id} {}", n.kind));
            if let Some(v) = &n.value {
                out.push_str(&format!(" {v:?}"));
            }
            out.push_str(&format!(" @{}:{}\n", n.span.start.line, n.span.start.col));
            for &c in &n.children {
                go(t, c, depth + 1, out);
            }
        }
        go(self, 0, 0, &mut out);
        out
    }
}

impl fmt::Display for SyntaxTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.dump())
    }
}

/// Leaf nodes in source order.
pub fn leaves(tree: &SyntaxTree) -> Vec<NodeId> {
    // Preorder already visits leaves left to right.
    (0..tree.len()).filter(|&i| tree.node(i).is_leaf() && i != tree.root()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn src(s: &str) -> SourceFile {
        SourceFile::new("t.js", s)
    }

    #[test]
    fn source_lines_are_one_indexed() {
        let f = src("a\nb\nc");
        assert_eq!(f.line(1), Some("a"));
        assert_eq!(f.line(3), Some("c"));
        assert_eq!(f.line(0), None);
        assert_eq!(f.lines().join("\n"), f.content);
        assert_eq!(f.line_count(), 3);
        assert_eq!(src("a\nb\n").line_count(), 2);
    }

    #[test]
    fn leaves_of_binary_expression() {
        let t = parse(&src("a + b")).unwrap();
        let vals: Vec<_> = t
            .leaves()
            .into_iter()
            .map(|i| t.node(i).value.clone().unwrap())
            .collect();
        assert_eq!(vals, ["a", "+", "b"]);
    }

    #[test]
    fn leaves_of_empty_program() {
        let t = parse(&src("")).unwrap();
        assert!(t.leaves().is_empty());
    }

    #[test]
    fn call_leaves_start_with_callee() {
        let t = parse(&src("sum(a, b);")).unwrap();
        let vals: Vec<_> = t
            .leaves()
            .into_iter()
            .filter_map(|i| t.node(i).value.clone())
            .collect();
        assert_eq!(vals, ["sum", "a", "b"]);
    }

    #[test]
    fn roundtrip_raw() {
        let t = parse(&src("if (a) { b = c + 1; } else { d(); }")).unwrap();
        let back = SyntaxTree::from_raw(t.to_raw(), None);
        assert!(back.isomorphic(&t));
        back.validate().unwrap();
    }
}
