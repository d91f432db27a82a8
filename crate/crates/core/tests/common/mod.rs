//! Random program and tree generators with independent oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::SliceRandom;
use rand::Rng;

use dualslice::diff::GraphEdit;
use dualslice::syntax::{Kind, Pos, RawNode, Span, SyntaxTree};

// ---------------------------------------------------------------------------
// Programs whose dependences are known by construction.

#[derive(Debug, Default, Clone)]
pub struct LineFacts {
    /// Names whose definitions and earlier mutations this line depends on.
    pub reads: BTreeSet<String>,
}

#[derive(Debug, Default, Clone)]
pub struct Program {
    pub source: String,
    /// Indexed by line - 1.
    pub lines: Vec<LineFacts>,
    /// Line of each variable or parameter declaration.
    pub decl: BTreeMap<String, u32>,
    pub mutations: BTreeMap<String, Vec<u32>>,
    /// Full line range of each function.
    pub functions: BTreeMap<String, (u32, u32)>,
    /// Header and closing line of every multi-line construct.
    pub blocks: Vec<(u32, u32)>,
    pub statements: usize,
}

struct Gen<'r, R: Rng> {
    rng: &'r mut R,
    text: Vec<String>,
    p: Program,
    budget: usize,
    next: usize,
}

impl<R: Rng> Gen<'_, R> {
    fn line(&mut self, depth: usize, text: String, reads: BTreeSet<String>) -> u32 {
        self.text.push(format!("{}{}", "  ".repeat(depth), text));
        self.p.lines.push(LineFacts { reads });
        self.text.len() as u32
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.next += 1;
        format!("{prefix}{}", self.next)
    }

    fn atom(&mut self, vars: &[String], fns: &[String], reads: &mut BTreeSet<String>, allow_call: bool) -> String {
        match self.rng.gen_range(0..5) {
            0 | 1 | 3 if !vars.is_empty() => {
                let v = vars.choose(self.rng).unwrap().clone();
                reads.insert(v.clone());
                v
            }
            2 if allow_call && !fns.is_empty() => {
                let f = fns.choose(self.rng).unwrap().clone();
                reads.insert(f.clone());
                let arg = self.atom(vars, fns, reads, false);
                format!("{f}({arg})")
            }
            _ => self.rng.gen_range(0..10).to_string(),
        }
    }

    fn expr(&mut self, vars: &[String], fns: &[String], reads: &mut BTreeSet<String>) -> String {
        let a = self.atom(vars, fns, reads, true);
        if self.rng.gen_bool(0.4) {
            let b = self.atom(vars, fns, reads, true);
            format!("{a} + {b}")
        } else {
            a
        }
    }

    fn block(&mut self, depth: usize, vars: &mut Vec<String>, fns: &mut Vec<String>, n: usize, top: bool) {
        for _ in 0..n {
            if self.budget == 0 {
                return;
            }
            self.budget -= 1;
            self.p.statements += 1;
            let mut reads = BTreeSet::new();
            match self.rng.gen_range(0..8) {
                1 if !vars.is_empty() => {
                    let v = vars.choose(self.rng).unwrap().clone();
                    let e = self.expr(vars, fns, &mut reads);
                    reads.insert(v.clone());
                    let l = self.line(depth, format!("{v} = {e};"), reads);
                    self.p.mutations.entry(v).or_default().push(l);
                }
                2 if !vars.is_empty() => {
                    let v = vars.choose(self.rng).unwrap().clone();
                    let e = self.expr(vars, fns, &mut reads);
                    reads.insert(v.clone());
                    let l = self.line(depth, format!("{v}.push({e});"), reads);
                    self.p.mutations.entry(v).or_default().push(l);
                }
                3 => {
                    let e = self.expr(vars, fns, &mut reads);
                    self.line(depth, format!("use({e});"), reads);
                }
                4 if depth < 2 && self.budget > 0 => {
                    let e = self.expr(vars, fns, &mut reads);
                    let start = self.line(depth, format!("if ({e}) {{"), reads);
                    let mut inner = vars.clone();
                    let k = self.rng.gen_range(1..=3);
                    self.block(depth + 1, &mut inner, fns, k, false);
                    let end = self.line(depth, "}".into(), BTreeSet::new());
                    self.p.blocks.push((start, end));
                }
                5 | 6 if top && self.budget > 0 => {
                    let f = self.fresh("f");
                    let param = self.fresh("p");
                    let start = self.line(depth, format!("function {f}({param}) {{"), BTreeSet::new());
                    self.p.decl.insert(param.clone(), start);
                    let mut inner = vars.clone();
                    inner.push(param);
                    let k = self.rng.gen_range(0..=2);
                    self.block(depth + 1, &mut inner, fns, k, false);
                    let mut r = BTreeSet::new();
                    let e = self.expr(&inner, fns, &mut r);
                    self.line(depth + 1, format!("return {e};"), r);
                    let end = self.line(depth, "}".into(), BTreeSet::new());
                    self.p.blocks.push((start, end));
                    self.p.functions.insert(f.clone(), (start, end));
                    fns.push(f);
                }
                _ => {
                    let v = self.fresh("v");
                    let e = self.expr(vars, fns, &mut reads);
                    let l = self.line(depth, format!("let {v} = {e};"), reads);
                    self.p.decl.insert(v.clone(), l);
                    vars.push(v);
                }
            }
        }
    }
}

/// A program of at most `max_statements` statements (nested ones count).
/// Every name is declared once, so resolution is by name alone.
pub fn random_program(rng: &mut impl Rng, max_statements: usize) -> Program {
    let mut g = Gen {
        rng,
        text: Vec::new(),
        p: Program::default(),
        budget: max_statements,
        next: 0,
    };
    let n = g.rng.gen_range(1..=max_statements);
    g.block(0, &mut Vec::new(), &mut Vec::new(), n, true);
    let mut p = g.p;
    p.source = g.text.join("\n") + "\n";
    p
}

impl Program {
    /// Lines `line` directly depends on.
    fn edges(&self, line: u32) -> Vec<u32> {
        let mut out = Vec::new();
        for &(s, e) in &self.blocks {
            if s <= line && line <= e {
                out.extend([s, e]);
            }
        }
        for name in &self.lines[line as usize - 1].reads {
            if let Some(&(s, e)) = self.functions.get(name) {
                out.extend(s..=e);
                continue;
            }
            if let Some(&d) = self.decl.get(name) {
                out.push(d);
            }
            for &m in self.mutations.get(name).into_iter().flatten() {
                if m < line {
                    out.push(m);
                }
            }
        }
        out
    }

    /// Every line reachable from `line` over the dependence edges.
    pub fn oracle_slice(&self, line: u32) -> BTreeSet<u32> {
        let mut seen = BTreeSet::from([line]);
        let mut work = VecDeque::from([line]);
        while let Some(l) = work.pop_front() {
            for n in self.edges(l) {
                if seen.insert(n) {
                    work.push_back(n);
                }
            }
        }
        seen
    }
}

// ---------------------------------------------------------------------------
// Random trees and exhaustive single-edit enumeration.

const INNER: [Kind; 4] = [Kind::Block, Kind::Call, Kind::Binary, Kind::Array];
const VALUED: [Kind; 3] = [Kind::Identifier, Kind::NumberLiteral, Kind::Operator];
const PLAIN_LEAVES: [Kind; 2] = [Kind::Empty, Kind::This];
const VALUES: [&str; 3] = ["a", "b", "1"];

fn span() -> Span {
    Span::point(Pos::new(1, 0))
}

fn random_leaf(rng: &mut impl Rng) -> RawNode {
    if rng.gen_bool(0.75) {
        let k = *VALUED.choose(rng).unwrap();
        RawNode::leaf(k, Some(VALUES.choose(rng).unwrap().to_string()), span())
    } else {
        RawNode::leaf(*PLAIN_LEAVES.choose(rng).unwrap(), None, span())
    }
}

fn random_raw(rng: &mut impl Rng, budget: &mut usize, depth: usize) -> RawNode {
    *budget -= 1;
    if depth >= 4 || *budget < 2 || (depth > 0 && rng.gen_bool(0.4)) {
        return random_leaf(rng);
    }
    let n = rng.gen_range(if depth == 0 { 2 } else { 0 }..=4);
    let mut children = Vec::new();
    for _ in 0..n {
        if *budget == 0 {
            break;
        }
        children.push(random_raw(rng, budget, depth + 1));
    }
    RawNode::new(*INNER.choose(rng).unwrap(), span(), children)
}

pub fn random_tree(rng: &mut impl Rng, max_nodes: usize) -> SyntaxTree {
    let mut budget = max_nodes;
    let mut root = random_raw(rng, &mut budget, 0);
    if root.children.is_empty() && root.value.is_some() {
        root = RawNode::new(Kind::Block, span(), vec![root]);
    }
    SyntaxTree::from_raw(root, None)
}

/// A well-formed random edit of `t`: added leaves carry a value exactly when
/// their kind does, and type replacements stay within the same value class.
pub fn random_edit(rng: &mut impl Rng, t: &SyntaxTree) -> Option<GraphEdit> {
    for _ in 0..20 {
        let id = rng.gen_range(0..t.len());
        let n = t.node(id);
        match rng.gen_range(0..4) {
            0 if !n.kind.has_value() => {
                let leaf = random_leaf(rng);
                let pos = rng.gen_range(0..=n.children.len());
                return Some(GraphEdit::add(id, pos, leaf.kind, leaf.value));
            }
            1 if id != 0 && n.is_leaf() => return Some(GraphEdit::del(id)),
            2 => {
                let pool: Vec<Kind> = if n.kind.has_value() {
                    VALUED.to_vec()
                } else if n.is_leaf() {
                    INNER.iter().chain(&PLAIN_LEAVES).copied().collect()
                } else {
                    INNER.to_vec()
                };
                let k = *pool.choose(rng).unwrap();
                if k != n.kind {
                    return Some(GraphEdit::rep_type(id, k));
                }
            }
            3 if n.value.is_some() => {
                let v = *VALUES.choose(rng).unwrap();
                if Some(v) != n.value.as_deref() {
                    return Some(GraphEdit::rep_val(id, v));
                }
            }
            _ => {}
        }
    }
    None
}

pub fn trees_equal(a: &SyntaxTree, b: &SyntaxTree) -> bool {
    a.subtree_eq(a.root(), b, b.root())
}

/// Every single edit of `b` that yields a tree equal to `f`. Candidates are
/// drawn from the kinds and values that occur in `f`, which is all an edit
/// producing `f` could use.
pub fn enumerate_single_edits(b: &SyntaxTree, f: &SyntaxTree) -> Vec<GraphEdit> {
    let kinds: BTreeSet<Kind> = f.nodes().iter().map(|n| n.kind).collect();
    let values: BTreeSet<String> = f.nodes().iter().filter_map(|n| n.value.clone()).collect();
    let leaves: BTreeSet<(Kind, Option<String>)> = f
        .nodes()
        .iter()
        .filter(|n| n.is_leaf())
        .map(|n| (n.kind, n.value.clone()))
        .collect();
    let mut candidates = Vec::new();
    for id in 0..b.len() {
        let n = b.node(id);
        for pos in 0..=n.children.len() {
            for (k, v) in &leaves {
                candidates.push(GraphEdit::add(id, pos, *k, v.clone()));
            }
        }
        if id != b.root() && n.is_leaf() {
            candidates.push(GraphEdit::del(id));
        }
        for &k in kinds.iter().filter(|&&k| k != n.kind) {
            candidates.push(GraphEdit::rep_type(id, k));
        }
        if let Some(cur) = &n.value {
            for v in values.iter().filter(|v| *v != cur) {
                candidates.push(GraphEdit::rep_val(id, v.clone()));
            }
        }
    }
    candidates
        .into_iter()
        .filter(|e| dualslice::diff::apply_edit(b, e).is_ok_and(|t| trees_equal(&t, f)))
        .collect()
}

/// A buggy/fixed tree pair: identical, one edit apart, two edits apart, or unrelated.
pub fn random_tree_pair(rng: &mut impl Rng, max_nodes: usize) -> (SyntaxTree, SyntaxTree) {
    let b = random_tree(rng, max_nodes - 2);
    let f = match rng.gen_range(0..6) {
        0 => b.clone(),
        1 => random_tree(rng, max_nodes - 2),
        2 => {
            let mut t = b.clone();
            for _ in 0..2 {
                if let Some(e) = random_edit(rng, &t) {
                    t = dualslice::diff::apply_edit(&t, &e).unwrap();
                }
            }
            t
        }
        _ => match random_edit(rng, &b) {
            Some(e) => dualslice::diff::apply_edit(&b, &e).unwrap(),
            None => b.clone(),
        },
    };
    (b, f)
}

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// Slices every line of one generated program and compares against the oracle.
pub fn check_program(seed: u64) -> Result<(), String> {
    use dualslice::slicer::Slicer;
    use dualslice::syntax::{parse, reconstruct_statements, SourceFile};
    use rand::SeedableRng;

    let p = random_program(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed), 15);
    ensure!(p.statements <= 15, "{} statements", p.statements);
    let tree = parse(&SourceFile::new("gen.js", p.source.clone())).map_err(|e| format!("{e}\n{}", p.source))?;
    let slicer = Slicer::new(&tree);
    for line in 1..=p.lines.len() as u32 {
        let got = slicer.backward_slice(&slicer.criterion(line)).context_lines;
        let want = p.oracle_slice(line);
        ensure!(got == want, "line {line}: got {got:?}, want {want:?}\n{}", p.source);
        let text = reconstruct_statements(&tree, &got).map_err(|e| e.to_string())?;
        ensure!(parse(&SourceFile::new("s.js", text.clone())).is_ok(), "slice does not parse:\n{text}");
    }
    Ok(())
}

/// Diffs one generated tree pair and compares against exhaustive enumeration.
pub fn check_pair(seed: u64) -> Result<(), String> {
    use dualslice::diff::{apply_edit, ast_diff, DiffOutcome};
    use rand::SeedableRng;

    let (b, f) = random_tree_pair(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed), 30);
    ensure!(b.len() <= 30 && f.len() <= 30, "{} / {} nodes", b.len(), f.len());
    let valid = enumerate_single_edits(&b, &f);
    match ast_diff(&b, &f) {
        DiffOutcome::Edit(d) => {
            ensure!(!valid.is_empty(), "diff found {:?} but no single edit exists", d.edit);
            let t = apply_edit(&b, &d.edit).map_err(|e| e.to_string())?;
            ensure!(trees_equal(&t, &f), "{:?} does not reproduce the fixed tree", d.edit);
            let first = valid.iter().map(|e| (e.location, e.child_position)).min().unwrap();
            ensure!((d.edit.location, d.edit.child_position) == first, "{:?} is not the canonical edit", d.edit);
        }
        DiffOutcome::NoDifference => {
            ensure!(trees_equal(&b, &f) && valid.is_empty(), "no difference reported for distinct trees");
        }
        DiffOutcome::NotOneNode => ensure!(valid.is_empty(), "missed {valid:?}"),
    }
    Ok(())
}
