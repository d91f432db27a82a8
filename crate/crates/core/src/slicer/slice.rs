use std::collections::{BTreeSet, HashSet, VecDeque};

use super::{resolve_references, ContextSlice, Entity, EntityKind, RefKind, ReferenceIndex, SliceCriterion};
use crate::syntax::{closure_lines, enclosing_lines, multiline_nodes, Kind, NodeId, SyntaxTree};

/// A tree together with its reference index.
pub struct Slicer<'t> {
    tree: &'t SyntaxTree,
    index: ReferenceIndex,
    multi: Vec<NodeId>,
}

impl<'t> Slicer<'t> {
    pub fn new(tree: &'t SyntaxTree) -> Self {
        Self {
            tree,
            index: resolve_references(tree),
            multi: multiline_nodes(tree),
        }
    }

    pub fn index(&self) -> &ReferenceIndex {
        &self.index
    }

    pub fn line_count(&self) -> u32 {
        match self.tree.source() {
            Some(s) => s.line_count() as u32,
            None => self.tree.node(self.tree.root()).span.end.line,
        }
    }

    /// Entity indices named on `line`, leaving out names declared there
    /// (object-literal keys are kept).
    fn entity_ids(&self, line: u32) -> BTreeSet<usize> {
        self.index
            .on_line(line)
            .filter(|&(e, r)| {
                r.kind != RefKind::Definition
                    || self.index.entities[e].entity.kind == EntityKind::ObjectProperty
            })
            .map(|(e, _)| e)
            .collect()
    }

    pub fn entities(&self, line: u32) -> BTreeSet<Entity> {
        self.entity_ids(line)
            .into_iter()
            .map(|e| self.index.entities[e].entity.clone())
            .collect()
    }

    pub fn criterion(&self, line: u32) -> SliceCriterion {
        SliceCriterion {
            line,
            entities: self.entities(line),
        }
    }

    /// Lines entity `e` contributes when seen on `line`: its declarations,
    /// the whole declaration if it is function valued, and mutations on
    /// earlier lines.
    fn dependencies(&self, e: usize, line: u32) -> Vec<u32> {
        let info = &self.index.entities[e];
        let mut out = Vec::new();
        if let Some((s, t)) = info.body {
            out.extend(s..=t);
        }
        for r in &info.refs {
            let wanted = match r.kind {
                RefKind::Definition => true,
                RefKind::Mutation => r.line < line,
                RefKind::Use | RefKind::Call => false,
            };
            if wanted {
                out.extend(r.unit.0..=r.unit.1);
            }
        }
        out
    }

    pub fn backward_slice(&self, criterion: &SliceCriterion) -> ContextSlice {
        let mut context = BTreeSet::new();
        let mut work = VecDeque::new();
        let mut visited: HashSet<(usize, u32)> = HashSet::new();
        context.insert(criterion.line);
        work.push_back(criterion.line);
        while let Some(line) = work.pop_front() {
            let mut found = enclosing_lines(self.tree, &self.multi, line);
            for e in self.entity_ids(line) {
                if visited.insert((e, line)) {
                    found.extend(self.dependencies(e, line));
                }
            }
            for l in found {
                if context.insert(l) {
                    work.push_back(l);
                }
            }
        }
        ContextSlice {
            criterion: criterion.clone(),
            used_control_flow: uses_control_flow(self.tree, &context),
            context_lines: context,
            used_fallback: false,
        }
    }

    /// The backward slice, or the whole file when the criterion names no
    /// entity and the slice holds nothing beyond the criterion line's own
    /// enclosing constructs.
    pub fn slice_with_fallback(&self, criterion: &SliceCriterion) -> ContextSlice {
        let mut slice = self.backward_slice(criterion);
        if criterion.entities.is_empty() {
            let own = closure_lines(self.tree, &BTreeSet::from([criterion.line]));
            if slice.context_lines == own {
                slice.context_lines = (1..=self.line_count()).collect();
                slice.used_fallback = true;
            }
        }
        slice
    }
}

fn body_children(tree: &SyntaxTree, id: NodeId) -> &[NodeId] {
    let ch = &tree.node(id).children;
    match tree.node(id).kind {
        Kind::If | Kind::Conditional | Kind::While => &ch[1..],
        Kind::For | Kind::ForIn | Kind::ForOf => &ch[ch.len() - 1..],
        Kind::DoWhile => &ch[..1],
        Kind::Try | Kind::Finally => ch,
        Kind::Catch => &ch[ch.len() - 1..],
        _ => &[],
    }
}

/// Whether some line of `lines` sits in the body of a multi-line control
/// construct below its header line, so the construct's header had to be
/// pulled in by control dependence.
pub fn uses_control_flow(tree: &SyntaxTree, lines: &BTreeSet<u32>) -> bool {
    (0..tree.len()).any(|id| {
        let n = tree.node(id);
        if !n.kind.is_control() || !n.span.is_multiline() {
            return false;
        }
        body_children(tree, id).iter().any(|&b| {
            let s = tree.node(b).span;
            let lo = s.start.line.max(n.span.start.line + 1);
            lines.range(lo..=s.end.line).next().is_some()
        })
    })
}

pub fn get_entities(tree: &SyntaxTree, line: u32) -> BTreeSet<Entity> {
    Slicer::new(tree).entities(line)
}

pub fn backward_slice(tree: &SyntaxTree, criterion: &SliceCriterion) -> ContextSlice {
    Slicer::new(tree).backward_slice(criterion)
}

pub fn slice_with_fallback(tree: &SyntaxTree, criterion: &SliceCriterion) -> ContextSlice {
    Slicer::new(tree).slice_with_fallback(criterion)
}
