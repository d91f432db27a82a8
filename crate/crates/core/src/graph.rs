//! Code graphs over syntax trees and the vocabularies that label them.
//!
//! Syntactic nodes keep their preorder tree index as graph index; one value
//! node per value-bearing syntactic node follows them, in the same order.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Datapoint;
use crate::diff::{EditOp, GraphEdit};
use crate::slicer::{SliceMode, SlicedPair};
use crate::syntax::{parse, Kind, ParseError, SourceFile, SyntaxTree};

pub const UNKNOWN: &str = "<UNKNOWN>";
pub const UNKNOWN_ID: usize = 0;
/// Kind label of value nodes.
pub const VALUE_KIND: &str = "<value>";
pub const DEFAULT_K: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeType {
    AstChild,
    SuccToken,
    ValueLink,
}

impl EdgeType {
    pub const ALL: [EdgeType; 3] = [EdgeType::AstChild, EdgeType::SuccToken, EdgeType::ValueLink];

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GraphNode {
    pub kind_id: usize,
    pub value_id: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeGraph {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<(usize, usize, EdgeType)>,
    /// Nodes `0..syntactic` mirror the tree; the rest are value nodes.
    pub syntactic: usize,
    /// Children count per syntactic node, used to bound ADD positions.
    pub arity: Vec<usize>,
}

impl CodeGraph {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edges_of(&self, ty: EdgeType) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().filter(move |e| e.2 == ty).map(|&(s, d, _)| (s, d))
    }

    /// Children of each syntactic node, rebuilt from AstChild edges.
    pub fn ast_children(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.syntactic];
        for (s, d) in self.edges_of(EdgeType::AstChild) {
            out[s].push(d);
        }
        out
    }

    /// Nodes and edges as JSON, with kinds and values spelled out.
    pub fn dump(&self, vocab: &Vocabulary) -> serde_json::Value {
        let nodes: Vec<_> = self
            .nodes
            .iter()
            .map(|n| {
                serde_json::json!({
                    "kind": vocab.kinds[n.kind_id],
                    "value": n.value_id.map(|v| vocab.values[v].clone()),
                })
            })
            .collect();
        let edges: Vec<_> = self.edges.iter().map(|&(s, d, t)| serde_json::json!([s, d, t])).collect();
        serde_json::json!({ "nodes": nodes, "edges": edges })
    }
}

/// Kind and value dictionaries. Kind ids: 0 unknown, 1 value nodes, then
/// observed grammar kinds in grammar order. Value ids: 0 unknown, then the K
/// most frequent lexemes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "VocabFile", into = "VocabFile")]
pub struct Vocabulary {
    pub kinds: Vec<String>,
    pub values: Vec<String>,
    pub k: usize,
    kind_ids: HashMap<String, usize>,
    value_ids: HashMap<String, usize>,
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    kinds: Vec<String>,
    values: Vec<String>,
    #[serde(rename = "K")]
    k: usize,
}

impl From<VocabFile> for Vocabulary {
    fn from(f: VocabFile) -> Self {
        Vocabulary::from_parts(f.kinds, f.values, f.k)
    }
}

impl From<Vocabulary> for VocabFile {
    fn from(v: Vocabulary) -> Self {
        VocabFile {
            kinds: v.kinds,
            values: v.values,
            k: v.k,
        }
    }
}

impl Vocabulary {
    pub fn from_parts(kinds: Vec<String>, values: Vec<String>, k: usize) -> Self {
        let index = |v: &[String]| v.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        Self {
            kind_ids: index(&kinds),
            value_ids: index(&values),
            kinds,
            values,
            k,
        }
    }

    /// Ranks lexeme counts by frequency, ties lexicographically, keeping `k`.
    pub fn from_counts(kinds: impl IntoIterator<Item = Kind>, counts: HashMap<String, usize>, k: usize) -> Self {
        let mut seen: Vec<Kind> = kinds.into_iter().collect();
        seen.sort();
        seen.dedup();
        let mut kind_labels = vec![UNKNOWN.to_string(), VALUE_KIND.to_string()];
        kind_labels.extend(seen.iter().map(|k| k.label().to_string()));
        let mut ranked: Vec<(String, usize)> = counts.into_iter().filter(|(v, _)| v != UNKNOWN).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(k);
        let mut values = vec![UNKNOWN.to_string()];
        values.extend(ranked.into_iter().map(|(v, _)| v));
        Self::from_parts(kind_labels, values, k)
    }

    pub fn kind_id(&self, kind: Kind) -> usize {
        self.kind_ids.get(kind.label()).copied().unwrap_or(UNKNOWN_ID)
    }

    pub fn value_kind_id(&self) -> usize {
        self.kind_ids[VALUE_KIND]
    }

    pub fn kind_of(&self, id: usize) -> Option<Kind> {
        self.kinds.get(id).and_then(|l| l.parse().ok())
    }

    pub fn value_id(&self, value: &str) -> usize {
        self.value_ids.get(value).copied().unwrap_or(UNKNOWN_ID)
    }

    pub fn contains_value(&self, value: &str) -> bool {
        self.value_ids.contains_key(value) && value != UNKNOWN
    }

    pub fn n_kinds(&self) -> usize {
        self.kinds.len()
    }

    pub fn n_values(&self) -> usize {
        self.values.len()
    }

    /// SHA-256 of the JSON form; checkpoints record it.
    pub fn hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("vocabulary serializes");
        hex::encode(Sha256::digest(json))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum GraphError {
    #[error("datapoint {0} has no slice for the requested mode")]
    MissingSlice(String),
    #[error("datapoint {id}: {source}")]
    Parse {
        id: String,
        #[source]
        source: ParseError,
    },
    #[error("edit location {0} is outside the graph")]
    BadLocation(usize),
}

/// Sliced pair of `dp` under `mode` with both sides parsed.
pub fn sliced_trees(dp: &Datapoint, mode: SliceMode) -> Result<(SlicedPair, SyntaxTree, SyntaxTree), GraphError> {
    let pair = dp.sliced(mode).ok_or_else(|| GraphError::MissingSlice(dp.id.clone()))?;
    let parse_side = |name: &str, text: &str| {
        parse(&SourceFile::new(format!("{}/{name}", dp.id), text)).map_err(|source| GraphError::Parse {
            id: dp.id.clone(),
            source,
        })
    };
    let b = parse_side("buggy.js", &pair.buggy_source)?;
    let f = parse_side("fixed.js", &pair.fixed_source)?;
    Ok((pair, b, f))
}

/// Builds the vocabulary from a training set. Lexemes are counted over the
/// sliced buggy sources, plus the sliced fixed sources in dual mode. Kinds
/// come from both sides so every gold kind label is known.
pub fn build_vocab_for(train: &[Datapoint], k: usize, mode: SliceMode) -> Result<Vocabulary, GraphError> {
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut kinds = Vec::new();
    for dp in train {
        let (_, b, f) = sliced_trees(dp, mode)?;
        let mut count = |t: &SyntaxTree| {
            for n in t.nodes() {
                if let Some(v) = &n.value {
                    *counts.entry(v.clone()).or_default() += 1;
                }
            }
        };
        count(&b);
        if mode == SliceMode::Dual {
            count(&f);
        }
        kinds.extend(b.nodes().iter().chain(f.nodes()).map(|n| n.kind));
    }
    Ok(Vocabulary::from_counts(kinds, counts, k))
}

pub fn build_vocab(train: &[Datapoint], k: usize, use_dual: bool) -> Result<Vocabulary, GraphError> {
    build_vocab_for(train, k, if use_dual { SliceMode::Dual } else { SliceMode::Single })
}

pub fn build_graph(tree: &SyntaxTree, vocab: &Vocabulary) -> CodeGraph {
    let n = tree.len();
    let mut nodes: Vec<GraphNode> = tree
        .nodes()
        .iter()
        .map(|s| GraphNode {
            kind_id: vocab.kind_id(s.kind),
            value_id: None,
        })
        .collect();
    let mut edges = Vec::new();
    for (id, s) in tree.nodes().iter().enumerate() {
        for &c in &s.children {
            edges.push((id, c, EdgeType::AstChild));
        }
    }
    for w in tree.leaves().windows(2) {
        edges.push((w[0], w[1], EdgeType::SuccToken));
    }
    let value_kind = vocab.value_kind_id();
    for (id, s) in tree.nodes().iter().enumerate() {
        if let Some(v) = &s.value {
            edges.push((id, nodes.len(), EdgeType::ValueLink));
            nodes.push(GraphNode {
                kind_id: value_kind,
                value_id: Some(vocab.value_id(v)),
            });
        }
    }
    CodeGraph {
        nodes,
        edges,
        syntactic: n,
        arity: tree.nodes().iter().map(|s| s.children.len()).collect(),
    }
}

/// A graph edit with its location as a graph index and labels as ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IndexedEdit {
    pub op: EditOp,
    pub location: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub child_position: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind_id: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_id: Option<usize>,
}

impl IndexedEdit {
    /// Turns the ids back into labels; UNKNOWN stays as its sentinel text.
    pub fn to_graph_edit(&self, vocab: &Vocabulary) -> GraphEdit {
        GraphEdit {
            op: self.op,
            location: self.location,
            child_position: self.child_position,
            kind_label: self.kind_id.and_then(|k| vocab.kind_of(k)),
            value_token: self.value_id.map(|v| vocab.values[v].clone()),
        }
    }
}

pub fn index_edit(edit: &GraphEdit, graph: &CodeGraph, vocab: &Vocabulary) -> Result<IndexedEdit, GraphError> {
    if edit.location >= graph.syntactic {
        return Err(GraphError::BadLocation(edit.location));
    }
    let value_id = match edit.op {
        EditOp::AddNode | EditOp::RepVal => edit.value_token.as_deref().map(|v| vocab.value_id(v)),
        _ => None,
    };
    Ok(IndexedEdit {
        op: edit.op,
        location: edit.location,
        child_position: if edit.op == EditOp::AddNode { edit.child_position } else { None },
        kind_id: if edit.op.has_kind() { edit.kind_label.map(|k| vocab.kind_id(k)) } else { None },
        value_id,
    })
}

/// One model input: the sliced buggy graph with its gold edit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub graph: CodeGraph,
    pub gold: IndexedEdit,
}

pub fn encode(dp: &Datapoint, mode: SliceMode, vocab: &Vocabulary) -> Result<Sample, GraphError> {
    let (pair, b, _) = sliced_trees(dp, mode)?;
    let graph = build_graph(&b, vocab);
    let gold = index_edit(&pair.edit, &graph, vocab)?;
    Ok(Sample {
        id: dp.id.clone(),
        graph,
        gold,
    })
}

pub fn encode_all(dps: &[Datapoint], mode: SliceMode, vocab: &Vocabulary) -> Result<Vec<Sample>, GraphError> {
    use rayon::prelude::*;
    dps.par_iter().map(|dp| encode(dp, mode, vocab)).collect()
}
