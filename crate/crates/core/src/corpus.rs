//! Pair ingestion, filtering, deduplication, splitting and JSONL persistence.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::diff::{ast_diff, DiffOutcome, DiffResult, EditOp, GraphEdit};
use crate::slicer::{slice_pair, SliceError, SliceMode, SlicedPair};
use crate::syntax::{ingest_estree, parse, ParseError, SourceFile, SyntaxTree};

/// Lines longer than this mark a file as minified.
pub const MINIFIED_LINE_CHARS: usize = 1000;
/// Files of at most two lines and more than this many bytes are minified.
pub const MINIFIED_SHORT_BYTES: usize = 500;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPair {
    pub id: String,
    pub buggy: SourceFile,
    pub fixed: SourceFile,
    /// Free-form commit metadata.
    pub origin: Option<String>,
    /// ESTree documents used when the built-in parser rejects a side.
    pub buggy_estree: Option<String>,
    pub fixed_estree: Option<String>,
}

impl RawPair {
    pub fn new(id: impl Into<String>, buggy: &str, fixed: &str) -> Self {
        let id = id.into();
        Self {
            buggy: SourceFile::new(format!("{id}/buggy.js"), buggy),
            fixed: SourceFile::new(format!("{id}/fixed.js"), fixed),
            id,
            origin: None,
            buggy_estree: None,
            fixed_estree: None,
        }
    }

    /// Parses both sides, falling back to the ESTree documents when present.
    pub fn trees(&self) -> Result<(SyntaxTree, SyntaxTree), ParseError> {
        Ok((
            tree_of(&self.buggy, self.buggy_estree.as_deref())?,
            tree_of(&self.fixed, self.fixed_estree.as_deref())?,
        ))
    }
}

fn tree_of(file: &SourceFile, estree: Option<&str>) -> Result<SyntaxTree, ParseError> {
    match (parse(file), estree) {
        (Ok(t), _) => Ok(t),
        (Err(_), Some(json)) => Ok(ingest_estree(json)?.with_source(file.clone())),
        (Err(e), None) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Datapoint {
    pub id: String,
    pub buggy_source: String,
    pub fixed_source: String,
    pub buggy_line: u32,
    pub fixed_line: u32,
    pub edit: GraphEdit,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sliced_single: Option<SlicedPair>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sliced_dual: Option<SlicedPair>,
}

impl Datapoint {
    pub fn buggy_file(&self) -> SourceFile {
        SourceFile::new(format!("{}/buggy.js", self.id), self.buggy_source.clone())
    }

    pub fn fixed_file(&self) -> SourceFile {
        SourceFile::new(format!("{}/fixed.js", self.id), self.fixed_source.clone())
    }

    pub fn diff(&self) -> DiffResult {
        DiffResult {
            edit: self.edit.clone(),
            buggy_line: self.buggy_line,
            fixed_line: self.fixed_line,
        }
    }

    /// The sliced pair for `mode`; whole files for `SliceMode::None`.
    pub fn sliced(&self, mode: SliceMode) -> Option<SlicedPair> {
        match mode {
            SliceMode::Single => self.sliced_single.clone(),
            SliceMode::Dual => self.sliced_dual.clone(),
            SliceMode::None => Some(SlicedPair {
                buggy_source: self.buggy_source.clone(),
                fixed_source: self.fixed_source.clone(),
                buggy_lines: (1..=self.buggy_file().line_count() as u32).collect(),
                fixed_lines: (1..=self.fixed_file().line_count() as u32).collect(),
                buggy_line: self.buggy_line,
                fixed_line: self.fixed_line,
                edit: self.edit.clone(),
                used_control_flow: false,
                used_fallback: false,
            }),
        }
    }

    /// Checks that the stored edit is what the diff of the sources yields.
    pub fn verify(&self) -> Result<(), CorpusError> {
        let bad = |why: String| CorpusError::Invalid { id: self.id.clone(), why };
        let b = parse(&self.buggy_file()).map_err(|e| bad(e.to_string()))?;
        let f = parse(&self.fixed_file()).map_err(|e| bad(e.to_string()))?;
        match ast_diff(&b, &f) {
            DiffOutcome::Edit(d) if d == self.diff() => Ok(()),
            DiffOutcome::Edit(d) => Err(bad(format!("stored edit differs from {}", d.edit))),
            other => Err(bad(format!("{other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rejection {
    Unparseable,
    Minified,
    NoDifference,
    NotOneNode,
    SliceFailed,
}

impl fmt::Display for Rejection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Rejection::Unparseable => "unparseable",
            Rejection::Minified => "minified",
            Rejection::NoDifference => "no_difference",
            Rejection::NotOneNode => "not_one_node",
            Rejection::SliceFailed => "slice_failed",
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub input: usize,
    pub kept: usize,
    pub rejected: BTreeMap<Rejection, usize>,
    pub duplicates: usize,
    pub edit_ops: BTreeMap<EditOp, usize>,
}

impl FilterReport {
    pub fn rejected_total(&self) -> usize {
        self.rejected.values().sum()
    }

    fn reject(&mut self, why: Rejection) {
        *self.rejected.entry(why).or_default() += 1;
    }
}

pub fn is_minified(file: &SourceFile) -> bool {
    let lines = file.lines();
    lines.iter().any(|l| l.chars().count() > MINIFIED_LINE_CHARS)
        || (file.line_count() <= 2 && file.content.len() > MINIFIED_SHORT_BYTES)
}

fn classify(pair: &RawPair) -> Result<Datapoint, Rejection> {
    if is_minified(&pair.buggy) || is_minified(&pair.fixed) {
        return Err(Rejection::Minified);
    }
    let (b, f) = pair.trees().map_err(|_| Rejection::Unparseable)?;
    match ast_diff(&b, &f) {
        DiffOutcome::Edit(d) => Ok(Datapoint {
            id: pair.id.clone(),
            buggy_source: pair.buggy.content.clone(),
            fixed_source: pair.fixed.content.clone(),
            buggy_line: d.buggy_line,
            fixed_line: d.fixed_line,
            edit: d.edit,
            sliced_single: None,
            sliced_dual: None,
        }),
        DiffOutcome::NoDifference => Err(Rejection::NoDifference),
        DiffOutcome::NotOneNode => Err(Rejection::NotOneNode),
    }
}

/// Keeps the pairs that parse, are not minified and differ by one node.
/// Output order follows input order.
pub fn filter_pairs(pairs: &[RawPair]) -> (Vec<Datapoint>, FilterReport) {
    let verdicts: Vec<_> = pairs.par_iter().map(classify).collect();
    let mut report = FilterReport {
        input: pairs.len(),
        ..Default::default()
    };
    let mut kept = Vec::new();
    for v in verdicts {
        match v {
            Ok(dp) => {
                *report.edit_ops.entry(dp.edit.op).or_default() += 1;
                kept.push(dp);
            }
            Err(why) => report.reject(why),
        }
    }
    report.kept = kept.len();
    (kept, report)
}

fn normalize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for line in s.lines() {
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out.truncate(out.trim_end().len());
    out
}

/// Hash of the whitespace-normalized pair.
pub fn pair_hash(buggy: &str, fixed: &str) -> String {
    let mut h = Sha256::new();
    h.update(normalize(buggy).as_bytes());
    h.update([0u8]);
    h.update(normalize(fixed).as_bytes());
    hex::encode(h.finalize())
}

/// Drops later copies of a pair whose sources agree after trailing
/// whitespace is stripped from every line.
pub fn dedup(datapoints: Vec<Datapoint>) -> Vec<Datapoint> {
    let mut seen = HashSet::new();
    datapoints
        .into_iter()
        .filter(|dp| seen.insert(pair_hash(&dp.buggy_source, &dp.fixed_source)))
        .collect()
}

/// Fills in the single and/or dual slices. Datapoints whose slice cannot be
/// built are returned separately with the error.
pub fn attach_slices(
    datapoints: Vec<Datapoint>,
    modes: &[SliceMode],
) -> (Vec<Datapoint>, Vec<(String, SliceError)>) {
    let results: Vec<_> = datapoints
        .into_par_iter()
        .map(|dp| {
            let id = dp.id.clone();
            with_slices(dp, modes).map_err(|e| (id, e))
        })
        .collect();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for r in results {
        match r {
            Ok(dp) => ok.push(dp),
            Err(e) => failed.push(e),
        }
    }
    (ok, failed)
}

fn with_slices(mut dp: Datapoint, modes: &[SliceMode]) -> Result<Datapoint, SliceError> {
    let b = parse(&dp.buggy_file())?;
    let f = parse(&dp.fixed_file())?;
    let diff = dp.diff();
    for &mode in modes {
        match mode {
            SliceMode::Single => dp.sliced_single = Some(slice_pair(&b, &f, &diff, mode)?),
            SliceMode::Dual => dp.sliced_dual = Some(slice_pair(&b, &f, &diff, mode)?),
            SliceMode::None => {}
        }
    }
    Ok(dp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub test: f64,
    pub validation: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train: 0.8,
            test: 0.1,
            validation: 0.1,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let parts = [self.train, self.test, self.validation];
        if parts.iter().any(|f| !(0.0..=1.0).contains(f)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(CorpusError::BadSplit(format!("{:?} do not sum to 1", parts)));
        }
        Ok(())
    }

    /// Sizes of (train, test, validation). Test and validation take their
    /// share rounded half down, at least one each when their fraction is
    /// positive; train takes the rest.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        let part = |f: f64| -> usize {
            if f <= 0.0 {
                return 0;
            }
            let x = n as f64 * f;
            ((x - 0.5).ceil().max(0.0) as usize).max(1)
        };
        let (test, val) = (part(self.test), part(self.validation));
        (n - test - val, test, val)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<Datapoint>,
    pub test: Vec<Datapoint>,
    pub validation: Vec<Datapoint>,
}

/// Seeded shuffle followed by a cut into train, test and validation.
pub fn split(mut datapoints: Vec<Datapoint>, spec: &SplitSpec) -> Result<Split, CorpusError> {
    spec.validate()?;
    if datapoints.len() < 3 {
        return Err(CorpusError::TooSmall(datapoints.len()));
    }
    let (n_train, n_test, _) = spec.sizes(datapoints.len());
    datapoints.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    let validation = datapoints.split_off(n_train + n_test);
    let test = datapoints.split_off(n_train);
    Ok(Split {
        train: datapoints,
        test,
        validation,
    })
}

pub fn op_counts(datapoints: &[Datapoint]) -> BTreeMap<EditOp, usize> {
    let mut counts = BTreeMap::new();
    for dp in datapoints {
        *counts.entry(dp.edit.op).or_default() += 1;
    }
    counts
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Format { path: PathBuf, line: usize, message: String },
    #[error("corpus of {0} datapoints is too small to split")]
    TooSmall(usize),
    #[error("invalid split: {0}")]
    BadSplit(String),
    #[error("duplicate pair id `{0}`")]
    DuplicateId(String),
    #[error("datapoint {id}: {why}")]
    Invalid { id: String, why: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One JSON object per line.
pub fn jsonl_string(datapoints: &[Datapoint]) -> String {
    let mut s = String::new();
    for dp in datapoints {
        s.push_str(&serde_json::to_string(dp).expect("datapoints serialize"));
        s.push('\n');
    }
    s
}

pub fn write_jsonl(datapoints: &[Datapoint], path: &Path) -> Result<(), CorpusError> {
    fs::write(path, jsonl_string(datapoints)).map_err(io_err(path))
}

/// Reads one datapoint per non-blank line.
pub fn read_jsonl(path: &Path) -> Result<Vec<Datapoint>, CorpusError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let dp = serde_json::from_str(&line).map_err(|e| CorpusError::Format {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(dp);
    }
    Ok(out)
}

/// Loads `<dir>/<id>/buggy.js` and `<dir>/<id>/fixed.js` for every
/// subdirectory holding both, sorted by id. Optional `buggy.estree.json`,
/// `fixed.estree.json` and `origin.txt` are picked up as well.
pub fn load_dir(dir: &Path) -> Result<Vec<RawPair>, CorpusError> {
    let mut ids = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let p = entry.path();
        if p.is_dir() && p.join("buggy.js").is_file() && p.join("fixed.js").is_file() {
            ids.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    ids.sort();
    let read = |p: PathBuf| fs::read_to_string(&p).map_err(io_err(&p));
    let optional = |p: PathBuf| if p.is_file() { read(p).map(Some) } else { Ok(None) };
    ids.into_iter()
        .map(|id| {
            let d = dir.join(&id);
            let mut pair = RawPair::new(id, &read(d.join("buggy.js"))?, &read(d.join("fixed.js"))?);
            pair.buggy_estree = optional(d.join("buggy.estree.json"))?;
            pair.fixed_estree = optional(d.join("fixed.estree.json"))?;
            pair.origin = optional(d.join("origin.txt"))?;
            Ok(pair)
        })
        .collect()
}

/// Writes pairs in the directory layout read by [`load_dir`].
pub fn write_dir(pairs: &[RawPair], dir: &Path) -> Result<(), CorpusError> {
    let mut seen = HashSet::new();
    for p in pairs {
        if !seen.insert(&p.id) {
            return Err(CorpusError::DuplicateId(p.id.clone()));
        }
        let d = dir.join(&p.id);
        fs::create_dir_all(&d).map_err(io_err(&d))?;
        let write = |name: &str, text: &str| {
            let path = d.join(name);
            fs::write(&path, text).map_err(io_err(&path))
        };
        write("buggy.js", &p.buggy.content)?;
        write("fixed.js", &p.fixed.content)?;
        if let Some(o) = &p.origin {
            write("origin.txt", o)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dp(id: &str, b: &str, f: &str) -> Datapoint {
        let (mut v, _) = filter_pairs(&[RawPair::new(id, b, f)]);
        v.pop().unwrap_or_else(|| panic!("{id} rejected"))
    }

    #[test]
    fn filter_keeps_one_node_pairs() {
        let pairs = [
            RawPair::new("ok", "sum(a, b);", "sum(a, b, c);"),
            RawPair::new("min", &format!("var x = \"{}\";", "a".repeat(5000)), "var x = 1;"),
            RawPair::new("many", "a(1);\nb(2);\nc(3);", "a(4);\nb(5);\nc(6);"),
            RawPair::new("same", "f();", "f();\n"),
            RawPair::new("broken", "function (", "f();"),
        ];
        let (kept, report) = filter_pairs(&pairs);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].edit.op, EditOp::AddNode);
        assert_eq!(report.rejected[&Rejection::Minified], 1);
        assert_eq!(report.rejected[&Rejection::NotOneNode], 1);
        assert_eq!(report.rejected[&Rejection::NoDifference], 1);
        assert_eq!(report.rejected[&Rejection::Unparseable], 1);
        assert_eq!(report.rejected_total(), report.input - report.kept);
    }

    #[test]
    fn minified_rule() {
        assert!(is_minified(&SourceFile::new("m.js", "x".repeat(1001))));
        let long_line = format!("a\n{}\nb", "x".repeat(1000));
        assert!(!is_minified(&SourceFile::new("m.js", long_line)));
        assert!(is_minified(&SourceFile::new("m.js", format!("{}\n{}", "a".repeat(300), "b".repeat(300)))));
        let three = format!("{}\n{}\n{}", "a".repeat(300), "b".repeat(300), "c");
        assert!(!is_minified(&SourceFile::new("m.js", three)));
    }

    #[test]
    fn dedup_rules() {
        let a = dp("a", "f(x);", "f(y);");
        let b = dp("b", "f(x);  \n", "f(y);\t");
        let c = dp("c", "f(x);", "f(z);");
        let out = dedup(vec![a.clone(), a.clone(), b, c]);
        let ids: Vec<_> = out.iter().map(|d| d.id.as_str()).collect();
        assert_eq!(ids, ["a", "c"]);
    }

    #[test]
    fn split_sizes() {
        let s = SplitSpec::default();
        assert_eq!(s.sizes(113_975), (91_181, 11_397, 11_397));
        assert_eq!(s.sizes(10), (8, 1, 1));
        assert_eq!(s.sizes(19), (15, 2, 2));
        assert_eq!(s.sizes(3), (1, 1, 1));
        for n in 10..500 {
            let (tr, te, va) = s.sizes(n);
            assert_eq!(tr + te + va, n);
            for (got, f) in [(tr, 0.8), (te, 0.1), (va, 0.1)] {
                assert!((got as f64 - f * n as f64).abs() <= 1.0 + 1e-9, "n={n}");
            }
        }
    }

    #[test]
    fn split_is_seeded_partition() {
        let points: Vec<_> = (0..10).map(|i| dp(&i.to_string(), "f(a);", &format!("f(a, v{i});"))).collect();
        let spec = SplitSpec { seed: 7, ..Default::default() };
        let a = split(points.clone(), &spec).unwrap();
        assert_eq!(a, split(points.clone(), &spec).unwrap());
        assert_eq!((a.train.len(), a.test.len(), a.validation.len()), (8, 1, 1));
        let mut ids: Vec<_> = a.train.iter().chain(&a.test).chain(&a.validation).map(|d| d.id.clone()).collect();
        ids.sort();
        let mut want: Vec<_> = points.iter().map(|d| d.id.clone()).collect();
        want.sort();
        assert_eq!(ids, want);
        assert!(matches!(split(points[..2].to_vec(), &spec), Err(CorpusError::TooSmall(2))));
        let bad = SplitSpec { train: 0.9, ..spec };
        assert!(matches!(split(points, &bad), Err(CorpusError::BadSplit(_))));
    }

    #[test]
    fn jsonl_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        let mut d = dp("listing2", "sum(a, b);", "sum(a, b, c);");
        d.verify().unwrap();
        d.sliced_dual = Some(d.sliced(SliceMode::None).unwrap());
        write_jsonl(&[d.clone()], &path).unwrap();
        assert_eq!(read_jsonl(&path).unwrap(), vec![d.clone()]);

        let line = serde_json::to_string(&d).unwrap();
        let mut text = vec![line; 6];
        text.push("{not json".into());
        fs::write(&path, text.join("\n")).unwrap();
        let err = read_jsonl(&path).unwrap_err();
        assert!(matches!(err, CorpusError::Format { line: 7, .. }), "{err}");

        fs::write(&path, "").unwrap();
        assert!(read_jsonl(&path).unwrap().is_empty());
    }

    #[test]
    fn directory_layout_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let pairs = vec![RawPair::new("p1", "a();", "b();"), RawPair::new("p0", "x;", "y;")];
        write_dir(&pairs, dir.path()).unwrap();
        let loaded = load_dir(dir.path()).unwrap();
        assert_eq!(loaded.iter().map(|p| p.id.as_str()).collect::<Vec<_>>(), ["p0", "p1"]);
        assert_eq!(loaded[1], pairs[0]);
    }

    #[test]
    fn attach_slices_fills_requested_modes() {
        let d = dp("m", "let a = 1;\nlet b = 2;\nf(a);", "let a = 1;\nlet b = 2;\nf(b);");
        let (out, failed) = attach_slices(vec![d], &[SliceMode::Single, SliceMode::Dual]);
        assert!(failed.is_empty());
        let dual = out[0].sliced_dual.as_ref().unwrap();
        assert_eq!(out[0].sliced_single.as_ref().unwrap().buggy_source, "let a = 1;\nf(a);");
        assert_eq!(dual.fixed_source, "let b = 2;\nf(b);");
    }
}
