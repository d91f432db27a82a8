//! Backward slicing over control and data dependence.
//!
//! Starting from a criterion line, the slicer repeatedly adds
//!
//! * the declaration and earlier mutations of every entity named on an
//!   included line (whole declarations for function-valued entities),
//! * the first and last lines of every multi-line construct enclosing an
//!   included line, so the reconstructed text stays well formed,
//!
//! until nothing changes. Entities are resolved with static scoping: `var`
//! and function declarations are hoisted, `let`/`const` are block scoped,
//! object properties resolve within their literal.

mod scope;
mod slice;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::diff::{ast_diff, DiffOutcome, DiffResult, GraphEdit};
use crate::syntax::{parse, reconstruct_statements, NodeId, ParseError, ReconstructError, SourceFile, SyntaxTree};

pub use scope::resolve_references;
pub use slice::{backward_slice, get_entities, slice_with_fallback, uses_control_flow, Slicer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Variable,
    Function,
    ObjectProperty,
    Parameter,
    ImportBinding,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Entity {
    pub name: String,
    pub kind: EntityKind,
    /// Line and identifier node of the declaration; `None` for free names.
    pub declaration_site: Option<(u32, NodeId)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefKind {
    Definition,
    Use,
    Mutation,
    Call,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reference {
    pub line: u32,
    pub node: NodeId,
    pub kind: RefKind,
    /// First and last line of the smallest statement-like construct holding
    /// the reference; a definition or mutation contributes these lines.
    pub unit: (u32, u32),
}

#[derive(Debug, Clone)]
pub struct EntityInfo {
    pub entity: Entity,
    pub refs: Vec<Reference>,
    /// Whole-declaration line range for function-valued entities.
    pub body: Option<(u32, u32)>,
}

#[derive(Debug, Clone, Default)]
pub struct ReferenceIndex {
    pub entities: Vec<EntityInfo>,
    by_line: BTreeMap<u32, Vec<(usize, usize)>>,
}

impl ReferenceIndex {
    pub(crate) fn new(entities: Vec<EntityInfo>) -> Self {
        let mut by_line: BTreeMap<u32, Vec<(usize, usize)>> = BTreeMap::new();
        for (e, info) in entities.iter().enumerate() {
            for (r, reference) in info.refs.iter().enumerate() {
                by_line.entry(reference.line).or_default().push((e, r));
            }
        }
        for v in by_line.values_mut() {
            v.sort_by_key(|&(e, r)| (entities[e].refs[r].node, e));
        }
        Self { entities, by_line }
    }

    /// References whose node starts on `line`, as (entity index, reference).
    pub fn on_line(&self, line: u32) -> impl Iterator<Item = (usize, &Reference)> + '_ {
        self.by_line
            .get(&line)
            .into_iter()
            .flatten()
            .map(move |&(e, r)| (e, &self.entities[e].refs[r]))
    }

    pub fn find(&self, entity: &Entity) -> Option<usize> {
        self.entities.iter().position(|i| &i.entity == entity)
    }

    /// The entity referenced by an identifier-like node.
    pub fn entity_of(&self, node: NodeId) -> Option<&Entity> {
        self.entities
            .iter()
            .find(|i| i.refs.iter().any(|r| r.node == node))
            .map(|i| &i.entity)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SliceCriterion {
    pub line: u32,
    pub entities: BTreeSet<Entity>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextSlice {
    pub criterion: SliceCriterion,
    pub context_lines: BTreeSet<u32>,
    pub used_control_flow: bool,
    pub used_fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SliceMode {
    Single,
    #[default]
    Dual,
    /// Whole files, for ablation.
    None,
}

impl fmt::Display for SliceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SliceMode::Single => "single",
            SliceMode::Dual => "dual",
            SliceMode::None => "none",
        })
    }
}

impl FromStr for SliceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single" => Ok(SliceMode::Single),
            "dual" => Ok(SliceMode::Dual),
            "none" => Ok(SliceMode::None),
            _ => Err(format!("unknown slicing mode `{s}` (single, dual, none)")),
        }
    }
}

/// A buggy/fixed pair cut down to its slicing context.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlicedPair {
    pub buggy_source: String,
    pub fixed_source: String,
    /// Original line numbers kept on each side.
    pub buggy_lines: Vec<u32>,
    pub fixed_lines: Vec<u32>,
    /// Criterion lines renumbered within the sliced sources.
    pub buggy_line: u32,
    pub fixed_line: u32,
    /// Gold edit against the sliced buggy tree.
    pub edit: GraphEdit,
    pub used_control_flow: bool,
    pub used_fallback: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SliceError {
    #[error("parse error: {0}")]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Reconstruct(#[from] ReconstructError),
    #[error("line {0} is outside the file")]
    InvalidLine(u32),
    #[error("sliced pair no longer differs by the original single edit")]
    Mismatch,
}

fn lines_of(tree: &SyntaxTree) -> Vec<String> {
    tree.source()
        .map(|s| s.lines().into_iter().map(str::to_string).collect())
        .unwrap_or_default()
}

fn renumber(lines: &BTreeSet<u32>, line: u32) -> u32 {
    lines.range(..=line).count() as u32
}

/// Slices both sides of a one-node pair according to `mode`.
///
/// The buggy side is always sliced from the buggy line. In single mode the
/// fixed side reuses that context with the buggy line swapped for the fixed
/// line; in dual mode it is sliced independently from the fixed line. The gold
/// edit is taken against the sliced buggy tree in every mode.
pub fn slice_pair(
    buggy: &SyntaxTree,
    fixed: &SyntaxTree,
    diff: &DiffResult,
    mode: SliceMode,
) -> Result<SlicedPair, SliceError> {
    let buggy_src = buggy.source().ok_or(ReconstructError::NoSource)?;
    let fixed_src = fixed.source().ok_or(ReconstructError::NoSource)?;
    let (b_all, f_all) = (lines_of(buggy), lines_of(fixed));
    if diff.buggy_line == 0 || diff.buggy_line as usize > b_all.len() {
        return Err(SliceError::InvalidLine(diff.buggy_line));
    }
    if diff.fixed_line == 0 || diff.fixed_line as usize > f_all.len() {
        return Err(SliceError::InvalidLine(diff.fixed_line));
    }
    if mode == SliceMode::None {
        return Ok(SlicedPair {
            buggy_source: buggy_src.content.clone(),
            fixed_source: fixed_src.content.clone(),
            buggy_lines: (1..=b_all.len() as u32).collect(),
            fixed_lines: (1..=f_all.len() as u32).collect(),
            buggy_line: diff.buggy_line,
            fixed_line: diff.fixed_line,
            edit: diff.edit.clone(),
            used_control_flow: false,
            used_fallback: false,
        });
    }

    let slicer = Slicer::new(buggy);
    let bslice = slicer.slice_with_fallback(&slicer.criterion(diff.buggy_line));
    let buggy_text = reconstruct_statements(buggy, &bslice.context_lines)?;
    let blines = crate::syntax::closure_lines(buggy, &bslice.context_lines);

    // Transplant the fixed line into the buggy context.
    let transplanted: Vec<&str> = blines
        .iter()
        .map(|&l| {
            if l == diff.buggy_line {
                f_all[diff.fixed_line as usize - 1].as_str()
            } else {
                b_all[l as usize - 1].as_str()
            }
        })
        .collect();
    let transplanted = transplanted.join("\n");
    let sliced_buggy = parse(&SourceFile::new(buggy_src.path.clone(), buggy_text.clone()))?;
    let sliced_fixed = parse(&SourceFile::new(fixed_src.path.clone(), transplanted.clone()))?;
    let edit = match ast_diff(&sliced_buggy, &sliced_fixed) {
        DiffOutcome::Edit(d) if d.edit.op == diff.edit.op => d.edit,
        _ => return Err(SliceError::Mismatch),
    };
    let buggy_line = renumber(&blines, diff.buggy_line);

    let (fixed_source, fixed_lines, fixed_line) = match mode {
        SliceMode::Single => (transplanted, blines.iter().copied().collect(), buggy_line),
        _ => {
            let fslicer = Slicer::new(fixed);
            let fslice = fslicer.slice_with_fallback(&fslicer.criterion(diff.fixed_line));
            let text = reconstruct_statements(fixed, &fslice.context_lines)?;
            let flines = crate::syntax::closure_lines(fixed, &fslice.context_lines);
            let line = renumber(&flines, diff.fixed_line);
            (text, flines.into_iter().collect(), line)
        }
    };
    Ok(SlicedPair {
        buggy_source: buggy_text,
        fixed_source,
        buggy_lines: blines.into_iter().collect(),
        fixed_lines,
        buggy_line,
        fixed_line,
        edit,
        used_control_flow: bslice.used_control_flow,
        used_fallback: bslice.used_fallback,
    })
}

fn parse_both(buggy: &SourceFile, fixed: &SourceFile) -> Result<(SyntaxTree, SyntaxTree), SliceError> {
    Ok((parse(buggy)?, parse(fixed)?))
}

/// Slices the buggy file only and carries its context over to the fixed line.
pub fn single_slice(buggy: &SourceFile, fixed: &SourceFile, diff: &DiffResult) -> Result<SlicedPair, SliceError> {
    let (b, f) = parse_both(buggy, fixed)?;
    slice_pair(&b, &f, diff, SliceMode::Single)
}

/// Slices the buggy file from the buggy line and the fixed file from the fixed line.
pub fn dual_slice(buggy: &SourceFile, fixed: &SourceFile, diff: &DiffResult) -> Result<SlicedPair, SliceError> {
    let (b, f) = parse_both(buggy, fixed)?;
    slice_pair(&b, &f, diff, SliceMode::Dual)
}
