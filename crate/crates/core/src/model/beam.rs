use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::net::Scorer;
use super::params::ModelParams;
use crate::diff::EditOp;
use crate::graph::{CodeGraph, IndexedEdit, Vocabulary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub edit: IndexedEdit,
    pub log_prob: f64,
}

/// Ranked edits, best first.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Prediction {
    pub candidates: Vec<Candidate>,
}

impl Prediction {
    pub fn top(&self) -> Option<&IndexedEdit> {
        self.candidates.first().map(|c| &c.edit)
    }
}

fn tie_key(e: &IndexedEdit) -> (usize, EditOp, Option<usize>, Option<usize>, Option<usize>) {
    (e.location, e.op, e.value_id, e.child_position, e.kind_id)
}

/// Higher score first, then (location, op, value id) ascending.
fn rank(a: &Candidate, b: &Candidate) -> Ordering {
    b.log_prob
        .total_cmp(&a.log_prob)
        .then_with(|| tie_key(&a.edit).cmp(&tie_key(&b.edit)))
}

struct TopK {
    k: usize,
    items: Vec<Candidate>,
}

impl TopK {
    /// Scores below this cannot enter.
    fn floor(&self) -> f64 {
        if self.items.len() < self.k {
            f64::NEG_INFINITY
        } else {
            self.items[self.k - 1].log_prob
        }
    }

    fn offer(&mut self, edit: IndexedEdit, log_prob: f64) {
        if log_prob < self.floor() {
            return;
        }
        let c = Candidate { edit, log_prob };
        let at = self.items.partition_point(|x| rank(x, &c) == Ordering::Less);
        self.items.insert(at, c);
        self.items.truncate(self.k);
    }
}

/// Indices by descending log-prob, ties by index.
fn sorted(x: &ndarray::Array1<f64>) -> Vec<(usize, f64)> {
    let mut v: Vec<_> = x.iter().copied().enumerate().collect();
    v.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    v
}

/// Kinds an edit may introduce: real grammar kinds, with or without a value.
fn kind_value_flag(vocab: &Vocabulary, id: usize) -> Option<bool> {
    vocab.kind_of(id).map(|k| k.has_value())
}

/// Exact top-k edits by joint log-probability. Every factor log-prob is at
/// most zero, so a partial sum bounds all its completions and branches whose
/// bound falls below the current k-th score are cut.
pub fn beam_infer(graph: &CodeGraph, params: &ModelParams, vocab: &Vocabulary, k: usize) -> Prediction {
    assert!(k >= 1, "beam width must be positive");
    let sc = Scorer::new(graph, params);
    let topo = &sc.topo;
    let mut top = TopK { k, items: Vec::new() };
    for (loc, lp_loc) in sorted(&sc.location()) {
        if lp_loc < top.floor() {
            break;
        }
        let current_kind = graph.nodes[loc].kind_id;
        let current_value = topo.value_of[loc];
        for (o, lp_op) in sorted(&sc.op(loc)) {
            let base = lp_loc + lp_op;
            if base < top.floor() {
                break;
            }
            let op = EditOp::from_index(o).expect("four ops");
            let edit = IndexedEdit {
                op,
                location: loc,
                child_position: None,
                kind_id: None,
                value_id: None,
            };
            match op {
                EditOp::DelNode => {
                    if loc != 0 && topo.is_leaf(loc) {
                        top.offer(edit, base);
                    }
                }
                EditOp::RepVal => {
                    if current_value.is_none() {
                        continue;
                    }
                    for (v, lp) in sorted(&sc.value(loc, op)) {
                        if base + lp < top.floor() {
                            break;
                        }
                        if Some(v) != current_value {
                            top.offer(IndexedEdit { value_id: Some(v), ..edit }, base + lp);
                        }
                    }
                }
                EditOp::RepType => {
                    for (kd, lp) in sorted(&sc.kind(loc, op)) {
                        if base + lp < top.floor() {
                            break;
                        }
                        let fits = kind_value_flag(vocab, kd) == Some(current_value.is_some());
                        if kd != current_kind && fits {
                            top.offer(IndexedEdit { kind_id: Some(kd), ..edit }, base + lp);
                        }
                    }
                }
                EditOp::AddNode => {
                    let kinds = sorted(&sc.kind(loc, op));
                    let values = sorted(&sc.value(loc, op));
                    for (j, lp_pos) in sorted(&sc.position(loc)) {
                        let with_pos = base + lp_pos;
                        if with_pos < top.floor() {
                            break;
                        }
                        for &(kd, lp_kind) in &kinds {
                            let with_kind = with_pos + lp_kind;
                            if with_kind < top.floor() {
                                break;
                            }
                            let e = IndexedEdit {
                                child_position: Some(j),
                                kind_id: Some(kd),
                                ..edit
                            };
                            match kind_value_flag(vocab, kd) {
                                None => {}
                                Some(false) => top.offer(e, with_kind),
                                Some(true) => {
                                    for &(v, lp_v) in &values {
                                        if with_kind + lp_v < top.floor() {
                                            break;
                                        }
                                        top.offer(IndexedEdit { value_id: Some(v), ..e }, with_kind + lp_v);
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Prediction { candidates: top.items }
}
