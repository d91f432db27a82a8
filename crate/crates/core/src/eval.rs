//! Exact-match accuracy, run comparison and context statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Datapoint;
use crate::diff::EditOp;
use crate::graph::{IndexedEdit, Sample, Vocabulary, UNKNOWN_ID};
use crate::model::{beam_infer, ModelParams};
use crate::slicer::SliceMode;
use crate::syntax::{tokenize, TokenKind};

pub const DEFAULT_KS: [usize; 3] = [1, 3, 5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchVerdict {
    /// Node and, for ADD_NODE, child position.
    pub location_match: bool,
    pub op_match: bool,
    /// Vacuously true when the gold op names no kind.
    pub kind_match: bool,
    /// Vacuously true when the gold op carries no value.
    pub value_match: bool,
    pub overall: bool,
}

/// Compares a predicted edit with the gold one. An UNKNOWN value never
/// matches, not even another UNKNOWN.
pub fn exact_match(pred: &IndexedEdit, gold: &IndexedEdit) -> MatchVerdict {
    let location_match = pred.location == gold.location && pred.child_position == gold.child_position;
    let op_match = pred.op == gold.op;
    let kind_match = !gold.op.has_kind() || pred.kind_id == gold.kind_id;
    let value_match = match gold.value_id {
        None => pred.value_id.is_none(),
        Some(UNKNOWN_ID) => false,
        Some(v) => pred.value_id == Some(v),
    };
    MatchVerdict {
        location_match,
        op_match,
        kind_match,
        value_match,
        overall: location_match && op_match && kind_match && value_match,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Outcome {
    pub id: String,
    pub op: EditOp,
    /// 1-based rank of the first exact match within the widest beam.
    pub rank: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub total: usize,
    pub ks: Vec<usize>,
    pub correct: BTreeMap<usize, usize>,
    pub rates: BTreeMap<usize, f64>,
    /// Per op: total and correct counts per k.
    pub per_op: BTreeMap<EditOp, (usize, BTreeMap<usize, usize>)>,
    pub outcomes: Vec<Outcome>,
}

impl AccuracyReport {
    pub fn from_outcomes(outcomes: Vec<Outcome>, ks: &[usize]) -> Self {
        let hit = |o: &Outcome, k: usize| o.rank.is_some_and(|r| r <= k);
        let mut correct = BTreeMap::new();
        let mut rates = BTreeMap::new();
        let mut per_op: BTreeMap<EditOp, (usize, BTreeMap<usize, usize>)> = BTreeMap::new();
        for o in &outcomes {
            per_op.entry(o.op).or_default().0 += 1;
        }
        for &k in ks {
            let c = outcomes.iter().filter(|o| hit(o, k)).count();
            correct.insert(k, c);
            rates.insert(k, c as f64 / outcomes.len().max(1) as f64);
            for o in &outcomes {
                *per_op.get_mut(&o.op).expect("counted").1.entry(k).or_default() += hit(o, k) as usize;
            }
        }
        Self {
            total: outcomes.len(),
            ks: ks.to_vec(),
            correct,
            rates,
            per_op,
            outcomes,
        }
    }

    pub fn rate(&self, k: usize) -> f64 {
        self.rates.get(&k).copied().unwrap_or(0.0)
    }

    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = write!(s, "{:<10} {:>6}", "op", "total");
        for k in &self.ks {
            let _ = write!(s, " {:>9}", format!("top-{k}"));
        }
        s.push('\n');
        let mut row = |name: &str, total: usize, counts: &BTreeMap<usize, usize>| {
            let _ = write!(s, "{name:<10} {total:>6}");
            for k in &self.ks {
                let c = counts.get(k).copied().unwrap_or(0);
                let _ = write!(s, " {:>8.2}%", 100.0 * c as f64 / total.max(1) as f64);
            }
            s.push('\n');
        };
        for (op, (total, counts)) in &self.per_op {
            row(op.label(), *total, counts);
        }
        row("all", self.total, &self.correct);
        s
    }
}

/// Top-k exact-match accuracy over a test set, one beam of the widest k per
/// sample.
pub fn topk_accuracy(samples: &[Sample], params: &ModelParams, vocab: &Vocabulary, ks: &[usize]) -> AccuracyReport {
    let kmax = ks.iter().copied().max().unwrap_or(1);
    let outcomes = samples
        .par_iter()
        .map(|s| {
            let pred = beam_infer(&s.graph, params, vocab, kmax);
            let rank = pred
                .candidates
                .iter()
                .position(|c| exact_match(&c.edit, &s.gold).overall)
                .map(|r| r + 1);
            Outcome {
                id: s.id.clone(),
                op: s.gold.op,
                rank,
            }
        })
        .collect();
    AccuracyReport::from_outcomes(outcomes, ks)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overlap {
    pub k: usize,
    pub both: usize,
    pub only_a: usize,
    pub only_b: usize,
    pub neither: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("runs were evaluated on different test sets")]
    MismatchedTestSets,
}

/// Which datapoints each run fixes within the top `k`.
pub fn compare_runs(a: &AccuracyReport, b: &AccuracyReport, k: usize) -> Result<Overlap, EvalError> {
    let ranks = |r: &AccuracyReport| -> BTreeMap<String, Option<usize>> {
        r.outcomes.iter().map(|o| (o.id.clone(), o.rank)).collect()
    };
    let (ra, rb) = (ranks(a), ranks(b));
    if ra.len() != a.outcomes.len() || !ra.keys().eq(rb.keys()) {
        return Err(EvalError::MismatchedTestSets);
    }
    let mut o = Overlap {
        k,
        both: 0,
        only_a: 0,
        only_b: 0,
        neither: 0,
    };
    for (id, x) in &ra {
        let fa = x.is_some_and(|r| r <= k);
        let fb = rb[id].is_some_and(|r| r <= k);
        match (fa, fb) {
            (true, true) => o.both += 1,
            (true, false) => o.only_a += 1,
            (false, true) => o.only_b += 1,
            (false, false) => o.neither += 1,
        }
    }
    Ok(o)
}

/// Figures quoted for a large mined corpus, shown next to ours.
pub const REFERENCE_MEAN_LINES: (f64, f64) = (39.0, 15.0);
pub const REFERENCE_MEDIAN_LINES: (f64, f64) = (33.0, 9.0);
pub const REFERENCE_MAX_LINES: (f64, f64) = (1087.0, 636.0);
pub const REFERENCE_CONTROL_FLOW_PERCENT: f64 = 26.96;
pub const TOKEN_UNIT: &str = "lexer tokens including punctuation and keywords; comments and whitespace stripped";

/// Tokens of a source text, trivia excluded. Unlexable text counts as zero.
pub fn token_count(src: &str) -> usize {
    tokenize(src)
        .map(|t| t.iter().filter(|t| t.kind != TokenKind::Eof).count())
        .unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextRow {
    pub id: String,
    pub lines_before: usize,
    pub lines_after: usize,
    pub tokens_before: usize,
    pub tokens_after: usize,
    pub used_control_flow: bool,
    pub used_fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Self::default();
        }
        let mut v = xs.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 {
            v[n / 2]
        } else {
            (v[n / 2 - 1] + v[n / 2]) / 2.0
        };
        Self {
            mean: v.iter().sum::<f64>() / n as f64,
            median,
            min: v[0],
            max: v[n - 1],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextStats {
    pub mode: SliceMode,
    pub token_unit: String,
    pub count: usize,
    pub lines_before: Summary,
    pub lines_after: Summary,
    pub tokens_before: Summary,
    pub tokens_after: Summary,
    pub line_reduction: Summary,
    pub token_reduction: Summary,
    pub control_flow_fraction: f64,
    pub fallback_fraction: f64,
    pub all_reductions_non_negative: bool,
    pub rows: Vec<ContextRow>,
}

/// Buggy-side context size before and after slicing. Datapoints without a
/// slice for `mode` are skipped.
pub fn context_stats(datapoints: &[Datapoint], mode: SliceMode) -> ContextStats {
    let rows: Vec<ContextRow> = datapoints
        .par_iter()
        .filter_map(|dp| {
            let s = dp.sliced(mode)?;
            Some(ContextRow {
                id: dp.id.clone(),
                lines_before: dp.buggy_file().line_count(),
                lines_after: s.buggy_lines.len(),
                tokens_before: token_count(&dp.buggy_source),
                tokens_after: token_count(&s.buggy_source),
                used_control_flow: s.used_control_flow,
                used_fallback: s.used_fallback,
            })
        })
        .collect();
    let col = |f: &dyn Fn(&ContextRow) -> f64| -> Summary { Summary::of(&rows.iter().map(f).collect::<Vec<_>>()) };
    let frac = |f: &dyn Fn(&ContextRow) -> bool| rows.iter().filter(|r| f(r)).count() as f64 / rows.len().max(1) as f64;
    ContextStats {
        mode,
        token_unit: TOKEN_UNIT.to_string(),
        count: rows.len(),
        lines_before: col(&|r| r.lines_before as f64),
        lines_after: col(&|r| r.lines_after as f64),
        tokens_before: col(&|r| r.tokens_before as f64),
        tokens_after: col(&|r| r.tokens_after as f64),
        line_reduction: col(&|r| r.lines_before as f64 - r.lines_after as f64),
        token_reduction: col(&|r| r.tokens_before as f64 - r.tokens_after as f64),
        control_flow_fraction: frac(&|r| r.used_control_flow),
        fallback_fraction: frac(&|r| r.used_fallback),
        all_reductions_non_negative: rows
            .iter()
            .all(|r| r.lines_after <= r.lines_before && r.tokens_after <= r.tokens_before),
        rows,
    }
}

impl ContextStats {
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} datapoints, {} slicing", self.count, self.mode);
        let _ = writeln!(
            s,
            "{:<16} {:>9} {:>9} {:>9} {:>9}",
            "", "mean", "median", "min", "max"
        );
        for (name, x) in [
            ("lines before", self.lines_before),
            ("lines after", self.lines_after),
            ("tokens before", self.tokens_before),
            ("tokens after", self.tokens_after),
            ("line reduction", self.line_reduction),
            ("token reduction", self.token_reduction),
        ] {
            let _ = writeln!(
                s,
                "{name:<16} {:>9.2} {:>9.2} {:>9.0} {:>9.0}",
                x.mean, x.median, x.min, x.max
            );
        }
        let _ = writeln!(s, "control flow used: {:.2}%", 100.0 * self.control_flow_fraction);
        let _ = writeln!(s, "whole-file fallback: {:.2}%", 100.0 * self.fallback_fraction);
        let _ = writeln!(s, "tokens: {}", self.token_unit);
        let _ = writeln!(
            s,
            "reference: mean lines {}→{}, median {}→{}, max {}→{}, control flow {}%",
            REFERENCE_MEAN_LINES.0,
            REFERENCE_MEAN_LINES.1,
            REFERENCE_MEDIAN_LINES.0,
            REFERENCE_MEDIAN_LINES.1,
            REFERENCE_MAX_LINES.0,
            REFERENCE_MAX_LINES.1,
            REFERENCE_CONTROL_FLOW_PERCENT
        );
        s
    }

    pub fn csv(&self) -> String {
        let mut s = String::from("id,lines_before,lines_after,tokens_before,tokens_after,used_control_flow,used_fallback\n");
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.id, r.lines_before, r.lines_after, r.tokens_before, r.tokens_after, r.used_control_flow, r.used_fallback
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{attach_slices, filter_pairs, RawPair};

    fn edit(op: EditOp, loc: usize, pos: Option<usize>, kind: Option<usize>, value: Option<usize>) -> IndexedEdit {
        IndexedEdit {
            op,
            location: loc,
            child_position: pos,
            kind_id: kind,
            value_id: value,
        }
    }

    #[test]
    fn exact_match_components() {
        let g = edit(EditOp::AddNode, 4, Some(1), Some(7), Some(3));
        assert!(exact_match(&g, &g).overall);
        let v = exact_match(&edit(EditOp::AddNode, 4, Some(1), Some(7), Some(2)), &g);
        assert!(v.location_match && v.op_match && v.kind_match && !v.value_match && !v.overall);
        assert!(!exact_match(&edit(EditOp::AddNode, 4, Some(0), Some(7), Some(3)), &g).location_match);
        let unk = edit(EditOp::RepVal, 2, None, None, Some(UNKNOWN_ID));
        assert!(!exact_match(&unk, &unk).overall);
        let del = edit(EditOp::DelNode, 2, None, None, None);
        assert!(exact_match(&del, &del).overall);
        assert!(!exact_match(&edit(EditOp::RepType, 2, None, Some(3), None), &del).overall);
    }

    fn outcome(id: &str, rank: Option<usize>) -> Outcome {
        Outcome {
            id: id.into(),
            op: EditOp::RepVal,
            rank,
        }
    }

    #[test]
    fn accuracy_is_monotone_and_runs_compare() {
        let a = AccuracyReport::from_outcomes(
            vec![outcome("x", Some(1)), outcome("y", Some(3)), outcome("z", None)],
            &DEFAULT_KS,
        );
        assert_eq!(a.correct[&1], 1);
        assert_eq!(a.correct[&3], 2);
        assert_eq!(a.correct[&5], 2);
        assert!(a.rate(1) <= a.rate(3) && a.rate(3) <= a.rate(5));
        let b = AccuracyReport::from_outcomes(
            vec![outcome("x", None), outcome("y", Some(1)), outcome("z", None)],
            &DEFAULT_KS,
        );
        let o = compare_runs(&a, &b, 1).unwrap();
        assert_eq!((o.both, o.only_a, o.only_b, o.neither), (0, 1, 1, 1));
        let same = compare_runs(&a, &a, 5).unwrap();
        assert_eq!((same.only_a, same.only_b), (0, 0));
        let c = AccuracyReport::from_outcomes(vec![outcome("q", None)], &DEFAULT_KS);
        assert_eq!(compare_runs(&a, &c, 1), Err(EvalError::MismatchedTestSets));
        assert!(a.table().contains("top-3"));
    }

    #[test]
    fn summary_values() {
        let s = Summary::of(&[1.0, 5.0, 3.0, 2.0]);
        assert_eq!((s.mean, s.median, s.min, s.max), (2.75, 2.5, 1.0, 5.0));
        assert_eq!(Summary::of(&[]), Summary::default());
    }

    #[test]
    fn tokens_skip_trivia() {
        assert_eq!(token_count("// note\nconst x = 1; /* c */"), 5);
        assert_eq!(token_count(""), 0);
    }

    #[test]
    fn one_line_corpus_has_no_reduction() {
        let (dps, _) = filter_pairs(&[RawPair::new("a", "f(x);", "f(y);"), RawPair::new("b", "g(1);", "g(2);")]);
        let (dps, _) = attach_slices(dps, &[SliceMode::Dual]);
        let st = context_stats(&dps, SliceMode::Dual);
        assert_eq!(st.count, 2);
        assert_eq!(st.line_reduction.max, 0.0);
        assert_eq!(st.token_reduction.max, 0.0);
        assert!(st.all_reductions_non_negative);
        assert!(st.csv().lines().count() == 3);
    }
}
