//! One-node tree differencing and edit application.
//!
//! Two trees differ by one node when a single edit turns the buggy tree into
//! a tree isomorphic to the fixed one: inserting or removing one leaf,
//! changing one node's kind while keeping its value and children, or changing
//! one node's value while keeping its kind and children. Operators are leaves,
//! so `a - b` → `a + b` is a value replacement on the operator leaf.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::syntax::{Kind, NodeId, RawNode, Span, SyntaxTree};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EditOp {
    AddNode,
    DelNode,
    RepType,
    RepVal,
}

impl EditOp {
    pub const ALL: [EditOp; 4] = [EditOp::AddNode, EditOp::DelNode, EditOp::RepType, EditOp::RepVal];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<EditOp> {
        Self::ALL.get(i).copied()
    }

    pub fn label(self) -> &'static str {
        match self {
            EditOp::AddNode => "ADD_NODE",
            EditOp::DelNode => "DEL_NODE",
            EditOp::RepType => "REP_TYPE",
            EditOp::RepVal => "REP_VAL",
        }
    }

    /// Whether an edit with this op names a node kind.
    pub fn has_kind(self) -> bool {
        matches!(self, EditOp::AddNode | EditOp::RepType)
    }
}

impl fmt::Display for EditOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for EditOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|op| op.label().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown edit op `{s}`"))
    }
}

/// A single edit against a tree. For `AddNode`, `location` is the parent and
/// `child_position` the index the new leaf takes among its children.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphEdit {
    pub op: EditOp,
    pub location: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub child_position: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind_label: Option<Kind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_token: Option<String>,
}

impl GraphEdit {
    pub fn add(parent: NodeId, position: usize, kind: Kind, value: Option<String>) -> Self {
        Self {
            op: EditOp::AddNode,
            location: parent,
            child_position: Some(position),
            kind_label: Some(kind),
            value_token: value,
        }
    }

    pub fn del(node: NodeId) -> Self {
        Self {
            op: EditOp::DelNode,
            location: node,
            child_position: None,
            kind_label: None,
            value_token: None,
        }
    }

    pub fn rep_type(node: NodeId, kind: Kind) -> Self {
        Self {
            op: EditOp::RepType,
            location: node,
            child_position: None,
            kind_label: Some(kind),
            value_token: None,
        }
    }

    pub fn rep_val(node: NodeId, value: impl Into<String>) -> Self {
        Self {
            op: EditOp::RepVal,
            location: node,
            child_position: None,
            kind_label: None,
            value_token: Some(value.into()),
        }
    }

    /// Checks that exactly the fields demanded by the op are present.
    pub fn check_fields(&self) -> Result<(), EditError> {
        let ok = match self.op {
            EditOp::AddNode => {
                self.child_position.is_some()
                    && self
                        .kind_label
                        .is_some_and(|k| k.has_value() == self.value_token.is_some())
            }
            EditOp::DelNode => {
                self.child_position.is_none() && self.kind_label.is_none() && self.value_token.is_none()
            }
            EditOp::RepType => {
                self.child_position.is_none() && self.kind_label.is_some() && self.value_token.is_none()
            }
            EditOp::RepVal => {
                self.child_position.is_none() && self.kind_label.is_none() && self.value_token.is_some()
            }
        };
        if ok {
            Ok(())
        } else {
            Err(EditError::FieldMismatch(self.op))
        }
    }
}

impl fmt::Display for GraphEdit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} @{}", self.op, self.location)?;
        if let Some(p) = self.child_position {
            write!(f, "[{p}]")?;
        }
        if let Some(k) = self.kind_label {
            write!(f, " kind={k}")?;
        }
        if let Some(v) = &self.value_token {
            write!(f, " value={v:?}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffResult {
    pub edit: GraphEdit,
    pub buggy_line: u32,
    pub fixed_line: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DiffOutcome {
    Edit(DiffResult),
    NoDifference,
    NotOneNode,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EditError {
    #[error("location {0} is outside the tree")]
    BadLocation(NodeId),
    #[error("fields do not match op {0}")]
    FieldMismatch(EditOp),
    #[error("child position {0} is out of range")]
    BadPosition(usize),
    #[error("node {0} is not a leaf")]
    NotALeaf(NodeId),
    #[error("node {0} carries no value")]
    NoValue(NodeId),
    #[error("the root cannot be deleted")]
    DeleteRoot,
}

enum Local {
    Same,
    /// Edit plus the node in the fixed tree that locates the fixed line.
    One(GraphEdit, Anchor, Anchor),
    Many,
}

/// Where to read a line number from: a node's start, or a child slot of a parent.
#[derive(Clone, Copy)]
enum Anchor {
    Node(NodeId),
    Slot(NodeId, usize),
}

fn anchor_line(t: &SyntaxTree, a: Anchor) -> u32 {
    match a {
        Anchor::Node(n) => t.node(n).span.start.line,
        Anchor::Slot(parent, pos) => {
            let p = t.node(parent);
            if pos > 0 {
                t.node(p.children[pos - 1]).span.end.line
            } else if let Some(&next) = p.children.first() {
                t.node(next).span.start.line
            } else {
                p.span.start.line
            }
        }
    }
}

fn children_eq(b: &SyntaxTree, bs: &[NodeId], f: &SyntaxTree, fs: &[NodeId]) -> bool {
    bs.len() == fs.len() && bs.iter().zip(fs).all(|(&x, &y)| b.subtree_eq(x, f, y))
}

fn diff_node(b: &SyntaxTree, bi: NodeId, f: &SyntaxTree, fi: NodeId) -> Local {
    let (nb, nf) = (b.node(bi), f.node(fi));
    if nb.kind != nf.kind || nb.value != nf.value {
        if nb.kind != nf.kind && nb.value != nf.value {
            return Local::Many;
        }
        if !children_eq(b, &nb.children, f, &nf.children) {
            return Local::Many;
        }
        let edit = if nb.kind != nf.kind {
            GraphEdit::rep_type(bi, nf.kind)
        } else {
            match &nf.value {
                Some(v) if nb.value.is_some() => GraphEdit::rep_val(bi, v.clone()),
                _ => return Local::Many,
            }
        };
        return Local::One(edit, Anchor::Node(bi), Anchor::Node(fi));
    }
    let (cb, cf) = (&nb.children, &nf.children);
    if cb.len() == cf.len() {
        let mut differing = cb
            .iter()
            .zip(cf)
            .filter(|(&x, &y)| !b.subtree_eq(x, f, y));
        return match (differing.next(), differing.next()) {
            (None, _) => Local::Same,
            (Some((&x, &y)), None) => diff_node(b, x, f, y),
            _ => Local::Many,
        };
    }
    if cf.len() == cb.len() + 1 {
        for j in 0..cf.len() {
            let added = f.node(cf[j]);
            if !added.is_leaf() {
                continue;
            }
            let rest: Vec<NodeId> = cf.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &c)| c).collect();
            if children_eq(b, cb, f, &rest) {
                let edit = GraphEdit::add(bi, j, added.kind, added.value.clone());
                return Local::One(edit, Anchor::Slot(bi, j), Anchor::Node(cf[j]));
            }
        }
        return Local::Many;
    }
    if cb.len() == cf.len() + 1 {
        for j in 0..cb.len() {
            if !b.node(cb[j]).is_leaf() {
                continue;
            }
            let rest: Vec<NodeId> = cb.iter().enumerate().filter(|&(i, _)| i != j).map(|(_, &c)| c).collect();
            if children_eq(b, &rest, f, cf) {
                return Local::One(GraphEdit::del(cb[j]), Anchor::Node(cb[j]), Anchor::Slot(fi, j));
            }
        }
    }
    Local::Many
}

/// Classifies a buggy/fixed pair. When several single edits explain the
/// difference, the one with the smallest location wins, then the smallest
/// child position.
pub fn ast_diff(buggy: &SyntaxTree, fixed: &SyntaxTree) -> DiffOutcome {
    match diff_node(buggy, buggy.root(), fixed, fixed.root()) {
        Local::Same => DiffOutcome::NoDifference,
        Local::Many => DiffOutcome::NotOneNode,
        Local::One(edit, ab, af) => DiffOutcome::Edit(DiffResult {
            edit,
            buggy_line: anchor_line(buggy, ab),
            fixed_line: anchor_line(fixed, af),
        }),
    }
}

pub fn is_one_node(buggy: &SyntaxTree, fixed: &SyntaxTree) -> bool {
    matches!(ast_diff(buggy, fixed), DiffOutcome::Edit(_))
}

/// Child-position path from the root to `id`.
fn path_to(tree: &SyntaxTree, id: NodeId) -> Vec<usize> {
    let mut path = Vec::new();
    let mut cur = id;
    while let Some(p) = tree.parent(cur) {
        path.push(tree.child_position(cur).expect("child of its parent"));
        cur = p;
    }
    path.reverse();
    path
}

fn descend<'a>(mut raw: &'a mut RawNode, path: &[usize]) -> &'a mut RawNode {
    for &i in path {
        raw = &mut raw.children[i];
    }
    raw
}

/// Applies an edit; the result carries no source text.
pub fn apply_edit(tree: &SyntaxTree, edit: &GraphEdit) -> Result<SyntaxTree, EditError> {
    edit.check_fields()?;
    if edit.location >= tree.len() {
        return Err(EditError::BadLocation(edit.location));
    }
    let node = tree.node(edit.location);
    let mut raw = tree.to_raw();
    match edit.op {
        EditOp::AddNode => {
            let pos = edit.child_position.unwrap_or_default();
            if pos > node.children.len() {
                return Err(EditError::BadPosition(pos));
            }
            let at = if pos > 0 {
                tree.node(node.children[pos - 1]).span.end
            } else {
                node.span.start
            };
            let target = descend(&mut raw, &path_to(tree, edit.location));
            let kind = edit.kind_label.expect("checked");
            target
                .children
                .insert(pos, RawNode::leaf(kind, edit.value_token.clone(), Span::point(at)));
        }
        EditOp::DelNode => {
            let parent = tree.parent(edit.location).ok_or(EditError::DeleteRoot)?;
            if !node.is_leaf() {
                return Err(EditError::NotALeaf(edit.location));
            }
            let pos = tree.child_position(edit.location).expect("child of its parent");
            descend(&mut raw, &path_to(tree, parent)).children.remove(pos);
        }
        EditOp::RepType => {
            descend(&mut raw, &path_to(tree, edit.location)).kind = edit.kind_label.expect("checked");
        }
        EditOp::RepVal => {
            if node.value.is_none() {
                return Err(EditError::NoValue(edit.location));
            }
            descend(&mut raw, &path_to(tree, edit.location)).value = edit.value_token.clone();
        }
    }
    Ok(SyntaxTree::from_raw(raw, None))
}
