use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::config::{parse_split, RunConfig};
use super::manifest::{self, Recorder};
use super::{CliError, Command, Side};
use crate::corpus::{
    attach_slices, dedup, filter_pairs, jsonl_string, load_dir, op_counts, read_jsonl, split, Datapoint, FilterReport,
    Rejection,
};
use crate::diff::{ast_diff, DiffOutcome};
use crate::eval::{
    compare_runs, context_stats, topk_accuracy, AccuracyReport, ContextStats, DEFAULT_KS, REFERENCE_CONTROL_FLOW_PERCENT,
    REFERENCE_MAX_LINES, REFERENCE_MEAN_LINES, REFERENCE_MEDIAN_LINES, TOKEN_UNIT,
};
use crate::graph::{build_graph, build_vocab_for, encode_all, index_edit, IndexedEdit, Sample, Vocabulary};
use crate::model::checkpoint;
use crate::model::{beam_infer, grad_check, init_params, train_with, ModelConfig, ModelParams};
use crate::slicer::{slice_pair, SliceMode, Slicer};
use crate::syntax::{closure_lines, parse, reconstruct_statements, SourceFile, SyntaxTree};

pub const SPLITS: [&str; 3] = ["train", "validation", "test"];
const VOCAB_FILE: &str = "vocab.json";
const MODEL_FILE: &str = "model.ckpt";
const INFO_FILE: &str = "train_info.json";

type Out<'a> = &'a mut (dyn Write + Send);

fn emit(out: Out, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes()).map_err(|e| CliError::Internal(e.to_string()))
}

fn need<'a>(p: &'a Option<PathBuf>, flag: &str, cmd: &str) -> Result<&'a Path, CliError> {
    p.as_deref().ok_or_else(|| CliError::Usage(format!("{cmd} needs --{flag}")))
}

pub fn dispatch(cmd: &Command, cfg: &RunConfig, rec: &mut Recorder, out: Out, err: Out) -> Result<(), CliError> {
    match cmd {
        Command::Slice {
            file,
            line,
            fixed,
            dual,
            emit_lines,
            side,
            ..
        } => slice(cfg, rec, out, file, *line, fixed.as_deref(), *dual, *emit_lines, *side),
        Command::Dataset { corpus, split } => dataset(cfg, rec, out, corpus, split.as_deref()),
        Command::Train => train(cfg, rec, out, err),
        Command::Tune {
            grid_layers,
            grid_lr,
            grid_dropout,
        } => tune(cfg, rec, out, err, grid_layers, grid_lr, grid_dropout),
        Command::Infer { path, line } => infer(cfg, rec, out, path, *line),
        Command::Eval { on, against } => eval(cfg, rec, out, on, against.as_deref()),
        Command::Stats { input, emit_csv } => stats(cfg, rec, out, input, *emit_csv),
        Command::GradCheck {
            epsilon,
            samples,
            per_block,
            tolerance,
        } => gradcheck(cfg, rec, out, *epsilon, *samples, *per_block, *tolerance),
        Command::Replay { manifest } => replay(cfg, out, err, manifest),
    }
}

fn read_source(rec: &mut Recorder, path: &Path) -> Result<SourceFile, CliError> {
    Ok(SourceFile::new(path.display().to_string(), rec.read(path)?))
}

fn check_line(file: &SourceFile, line: u32) -> Result<(), CliError> {
    let n = file.line_count();
    if line == 0 || line as usize > n {
        return Err(CliError::Usage(format!("line {line} is outside {} (1..={n})", file.path)));
    }
    Ok(())
}

fn one_node_diff(b: &SyntaxTree, f: &SyntaxTree) -> Result<crate::diff::DiffResult, CliError> {
    match ast_diff(b, f) {
        DiffOutcome::Edit(d) => Ok(d),
        DiffOutcome::NoDifference => Err(CliError::Input("the files do not differ".into())),
        DiffOutcome::NotOneNode => Err(CliError::Input("the files differ by more than one node".into())),
    }
}

fn join_lines(lines: impl IntoIterator<Item = u32>) -> String {
    lines.into_iter().map(|l| format!("{l}\n")).collect()
}

#[allow(clippy::too_many_arguments)]
fn slice(
    _cfg: &RunConfig,
    rec: &mut Recorder,
    out: Out,
    file: &Path,
    line: u32,
    fixed: Option<&Path>,
    dual: bool,
    emit_lines: bool,
    side: Side,
) -> Result<(), CliError> {
    let src = read_source(rec, file)?;
    check_line(&src, line)?;
    let tree = parse(&src)?;
    let text = match fixed {
        None => {
            let slicer = Slicer::new(&tree);
            let s = slicer.slice_with_fallback(&slicer.criterion(line));
            if emit_lines {
                join_lines(closure_lines(&tree, &s.context_lines))
            } else {
                reconstruct_statements(&tree, &s.context_lines)? + "\n"
            }
        }
        Some(fixed) => {
            let fsrc = read_source(rec, fixed)?;
            let ftree = parse(&fsrc)?;
            let diff = one_node_diff(&tree, &ftree)?;
            if diff.buggy_line != line {
                return Err(CliError::Usage(format!(
                    "line {line} is not the changed line; the pair changes line {}",
                    diff.buggy_line
                )));
            }
            let mode = if dual { SliceMode::Dual } else { SliceMode::Single };
            let p = slice_pair(&tree, &ftree, &diff, mode)?;
            let (b, f) = if emit_lines {
                (join_lines(p.buggy_lines), join_lines(p.fixed_lines))
            } else {
                (p.buggy_source + "\n", p.fixed_source + "\n")
            };
            match side {
                Side::Buggy => b,
                Side::Fixed => f,
                Side::Both => format!("// buggy ({mode} slice)\n{b}// fixed ({mode} slice)\n{f}"),
            }
        }
    };
    emit(out, &text)?;
    rec.write("slice.txt", text.as_bytes())
}

#[derive(Debug, Serialize, Deserialize)]
struct DatasetReport {
    filter: FilterReport,
    slice_failures: Vec<(String, String)>,
    sizes: BTreeMap<String, usize>,
    modes: Vec<SliceMode>,
}

fn modes_for(mode: Option<SliceMode>) -> Vec<SliceMode> {
    match mode {
        None => vec![SliceMode::Single, SliceMode::Dual],
        Some(SliceMode::None) => vec![],
        Some(m) => vec![m],
    }
}

/// Filters, dedups and slices raw pairs; the report accounts for every input.
pub fn prepare(pairs: &[crate::corpus::RawPair], modes: &[SliceMode]) -> (Vec<Datapoint>, FilterReport, Vec<(String, String)>) {
    let (kept, mut report) = filter_pairs(pairs);
    let before = kept.len();
    let kept = dedup(kept);
    report.duplicates = before - kept.len();
    let (sliced, failed) = attach_slices(kept, modes);
    if !failed.is_empty() {
        *report.rejected.entry(Rejection::SliceFailed).or_default() += failed.len();
    }
    report.kept = sliced.len();
    report.edit_ops = op_counts(&sliced);
    let failed = failed.into_iter().map(|(id, e)| (id, e.to_string())).collect();
    (sliced, report, failed)
}

fn dataset(cfg: &RunConfig, rec: &mut Recorder, out: Out, corpus: &Path, split_arg: Option<&str>) -> Result<(), CliError> {
    need(&cfg.out, "out", "dataset")?;
    let mut spec = cfg.split_spec();
    if let Some(s) = split_arg {
        let [train, test, validation] = parse_split(s)?;
        spec = crate::corpus::SplitSpec {
            train,
            test,
            validation,
            ..spec
        };
        spec.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    }
    rec.input(corpus)?;
    let pairs = load_dir(corpus)?;
    let modes = modes_for(cfg.mode);
    let (kept, report, failed) = prepare(&pairs, &modes);
    let sp = split(kept, &spec)?;
    let parts = [("train", &sp.train), ("validation", &sp.validation), ("test", &sp.test)];
    for (name, dps) in parts {
        rec.write(&format!("{name}.jsonl"), jsonl_string(dps).as_bytes())?;
    }
    let rep = DatasetReport {
        sizes: parts.iter().map(|(n, d)| (n.to_string(), d.len())).collect(),
        filter: report,
        slice_failures: failed,
        modes,
    };
    rec.write_json("dataset_report.json", &rep)?;
    let mut t = String::new();
    let f = &rep.filter;
    let _ = writeln!(t, "input pairs    {}", f.input);
    for (why, n) in &f.rejected {
        let _ = writeln!(t, "rejected       {n} {why}");
    }
    let _ = writeln!(t, "duplicates     {}", f.duplicates);
    let _ = writeln!(t, "kept           {}", f.kept);
    for (op, n) in &f.edit_ops {
        let _ = writeln!(t, "  {:<12} {n}", op.label());
    }
    let _ = writeln!(
        t,
        "split          train {} / validation {} / test {}",
        sp.train.len(),
        sp.validation.len(),
        sp.test.len()
    );
    emit(out, &t)
}

fn load_split(rec: &mut Recorder, data: &Path, name: &str, mode: SliceMode) -> Result<Vec<Datapoint>, CliError> {
    let path = data.join(format!("{name}.jsonl"));
    rec.input(&path)?;
    let dps = read_jsonl(&path)?;
    if mode == SliceMode::None || dps.iter().all(|d| d.sliced(mode).is_some()) {
        return Ok(dps);
    }
    let (dps, failed) = attach_slices(dps, &[mode]);
    match failed.first() {
        Some((id, e)) => Err(CliError::Input(format!("{id}: cannot slice: {e}"))),
        None => Ok(dps),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainInfo {
    pub mode: SliceMode,
    pub vocab_hash: String,
    pub best_epoch: usize,
    pub best_val_top1: f64,
    pub train_size: usize,
    pub validation_size: usize,
}

struct Prepared {
    vocab: Vocabulary,
    train: Vec<Sample>,
    val: Vec<Sample>,
}

fn prepare_training(cfg: &RunConfig, rec: &mut Recorder, mode: SliceMode, cmd: &str) -> Result<Prepared, CliError> {
    let data = need(&cfg.data, "data", cmd)?;
    let tr = load_split(rec, data, "train", mode)?;
    let va = load_split(rec, data, "validation", mode)?;
    let vocab = build_vocab_for(&tr, cfg.vocab_size, mode)?;
    Ok(Prepared {
        train: encode_all(&tr, mode, &vocab)?,
        val: encode_all(&va, mode, &vocab)?,
        vocab,
    })
}

fn train(cfg: &RunConfig, rec: &mut Recorder, out: Out, err: Out) -> Result<(), CliError> {
    need(&cfg.out, "out", "train")?;
    let mode = cfg.mode.unwrap_or_default();
    let p = prepare_training(cfg, rec, mode, "train")?;
    let start = Instant::now();
    let mut log = String::new();
    let (params, history) = train_with(&p.train, &p.val, &p.vocab, &cfg.model, |s| {
        let line = format!(
            "epoch {:>4}  train loss {:.6}  val loss {:.6}  val top-1 {:.4}\n",
            s.epoch, s.train_loss, s.val_loss, s.val_top1
        );
        let _ = out.write_all(line.as_bytes());
        log.push_str(&line);
    })?;
    let _ = writeln!(err, "trained in {:.1}s", start.elapsed().as_secs_f64());
    let best = &history.epochs[history.best_epoch - 1];
    let info = TrainInfo {
        mode,
        vocab_hash: p.vocab.hash(),
        best_epoch: history.best_epoch,
        best_val_top1: best.val_top1,
        train_size: p.train.len(),
        validation_size: p.val.len(),
    };
    let summary = format!(
        "kept epoch {} (val top-1 {:.4}); {} kinds, {} values, {} parameters\n",
        info.best_epoch,
        info.best_val_top1,
        p.vocab.n_kinds(),
        p.vocab.n_values(),
        params.len()
    );
    log.push_str(&summary);
    emit(out, &summary)?;
    rec.write_json(VOCAB_FILE, &p.vocab)?;
    rec.write(MODEL_FILE, &checkpoint::to_bytes(&params, &info.vocab_hash))?;
    rec.write_json("history.json", &history)?;
    rec.write_json(INFO_FILE, &info)?;
    rec.write("train.txt", log.as_bytes())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuneRow {
    pub layers: usize,
    pub learning_rate: f64,
    pub dropout: f64,
    pub best_epoch: usize,
    pub val_top1: f64,
    pub val_loss: f64,
}

fn tune(
    cfg: &RunConfig,
    rec: &mut Recorder,
    out: Out,
    err: Out,
    layers: &[usize],
    lrs: &[f64],
    dropouts: &[f64],
) -> Result<(), CliError> {
    need(&cfg.out, "out", "tune")?;
    let mode = cfg.mode.unwrap_or_default();
    let p = prepare_training(cfg, rec, mode, "tune")?;
    let mut rows = Vec::new();
    let mut table = format!(
        "{:>6} {:>8} {:>8} {:>6} {:>10} {:>10}\n",
        "layers", "lr", "dropout", "epoch", "val top-1", "val loss"
    );
    for &l in layers {
        for &lr in lrs {
            for &d in dropouts {
                let mc = ModelConfig {
                    layers: l,
                    learning_rate: lr,
                    dropout: d,
                    ..cfg.model.clone()
                };
                let start = Instant::now();
                let (_, h) = train_with(&p.train, &p.val, &p.vocab, &mc, |_| {})?;
                let best = &h.epochs[h.best_epoch - 1];
                let row = TuneRow {
                    layers: l,
                    learning_rate: lr,
                    dropout: d,
                    best_epoch: h.best_epoch,
                    val_top1: best.val_top1,
                    val_loss: best.val_loss,
                };
                let line = format!(
                    "{:>6} {:>8} {:>8} {:>6} {:>10.4} {:>10.6}\n",
                    l, lr, d, row.best_epoch, row.val_top1, row.val_loss
                );
                emit(out, &line)?;
                let _ = writeln!(err, "  {:.1}s", start.elapsed().as_secs_f64());
                table.push_str(&line);
                rows.push(row);
            }
        }
    }
    let best = rows
        .iter()
        .max_by(|a, b| a.val_top1.total_cmp(&b.val_top1).then(b.val_loss.total_cmp(&a.val_loss)))
        .ok_or_else(|| CliError::Usage("empty grid".into()))?;
    let line = format!(
        "best: layers {} lr {} dropout {} (val top-1 {:.4})\n",
        best.layers, best.learning_rate, best.dropout, best.val_top1
    );
    emit(out, &line)?;
    table.push_str(&line);
    rec.write_json("tune.json", &rows)?;
    rec.write("tune.txt", table.as_bytes())
}

struct Loaded {
    params: ModelParams,
    vocab: Vocabulary,
    info: TrainInfo,
}

fn load_model(cfg: &RunConfig, rec: &mut Recorder, cmd: &str) -> Result<Loaded, CliError> {
    let dir = need(&cfg.checkpoint, "checkpoint", cmd)?;
    let vocab: Vocabulary = serde_json::from_str(&rec.read(&dir.join(VOCAB_FILE))?)
        .map_err(|e| CliError::Input(format!("{VOCAB_FILE}: {e}")))?;
    let info: TrainInfo = serde_json::from_str(&rec.read(&dir.join(INFO_FILE))?)
        .map_err(|e| CliError::Input(format!("{INFO_FILE}: {e}")))?;
    let path = dir.join(MODEL_FILE);
    rec.input(&path)?;
    let params = checkpoint::load(&path, Some(&vocab.hash()))?;
    Ok(Loaded { params, vocab, info })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PatchRow {
    pub rank: usize,
    pub log_prob: f64,
    pub op: String,
    pub location: usize,
    pub location_kind: String,
    /// Line in the original file.
    pub line: u32,
    pub child_position: Option<usize>,
    pub kind: Option<String>,
    pub value: Option<String>,
    pub matches_gold: Option<bool>,
}

fn infer(cfg: &RunConfig, rec: &mut Recorder, out: Out, path: &Path, line: Option<u32>) -> Result<(), CliError> {
    let m = load_model(cfg, rec, "infer")?;
    let mode = cfg.mode.unwrap_or(m.info.mode);
    // Sliced buggy source, original line numbers of its lines, and the gold edit when known.
    let (source, lines, gold, total) = if path.is_dir() {
        let b = read_source(rec, &path.join("buggy.js"))?;
        let f = read_source(rec, &path.join("fixed.js"))?;
        let (bt, ft) = (parse(&b)?, parse(&f)?);
        let diff = one_node_diff(&bt, &ft)?;
        if let Some(l) = line.filter(|&l| l != diff.buggy_line) {
            return Err(CliError::Usage(format!(
                "line {l} is not the changed line; the pair changes line {}",
                diff.buggy_line
            )));
        }
        let p = slice_pair(&bt, &ft, &diff, mode)?;
        (p.buggy_source, p.buggy_lines, Some(p.edit), b.line_count())
    } else {
        let line = line.ok_or_else(|| CliError::Usage("infer on a single file needs a LINE".into()))?;
        let b = read_source(rec, path)?;
        check_line(&b, line)?;
        let bt = parse(&b)?;
        if mode == SliceMode::None {
            (b.content.clone(), (1..=b.line_count() as u32).collect(), None, b.line_count())
        } else {
            let slicer = Slicer::new(&bt);
            let s = slicer.slice_with_fallback(&slicer.criterion(line));
            let text = reconstruct_statements(&bt, &s.context_lines)?;
            (text, closure_lines(&bt, &s.context_lines).into_iter().collect(), None, b.line_count())
        }
    };
    let tree = parse(&SourceFile::new(path.display().to_string(), source))?;
    let graph = build_graph(&tree, &m.vocab);
    let gold: Option<IndexedEdit> = gold.map(|e| index_edit(&e, &graph, &m.vocab)).transpose()?;
    let pred = beam_infer(&graph, &m.params, &m.vocab, cfg.k);
    let rows: Vec<PatchRow> = pred
        .candidates
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let e = &c.edit;
            let node = tree.node(e.location);
            let sliced_line = node.span.start.line as usize;
            PatchRow {
                rank: i + 1,
                log_prob: c.log_prob,
                op: e.op.label().to_string(),
                location: e.location,
                location_kind: node.kind.label().to_string(),
                line: lines.get(sliced_line.saturating_sub(1)).copied().unwrap_or(0),
                child_position: e.child_position,
                kind: e.kind_id.map(|k| m.vocab.kinds[k].clone()),
                value: e.value_id.map(|v| m.vocab.values[v].clone()),
                matches_gold: gold.as_ref().map(|g| crate::eval::exact_match(e, g).overall),
            }
        })
        .collect();
    let mut t = format!("{mode} context: {} of {total} lines\n", lines.len());
    for r in &rows {
        let _ = write!(
            t,
            "#{} {:>10.4}  {:<8} line {:>4}  node {} {}",
            r.rank, r.log_prob, r.op, r.line, r.location, r.location_kind
        );
        if let Some(p) = r.child_position {
            let _ = write!(t, " [{p}]");
        }
        if let Some(k) = &r.kind {
            let _ = write!(t, "  kind {k}");
        }
        if let Some(v) = &r.value {
            let _ = write!(t, "  value {v:?}");
        }
        if r.matches_gold == Some(true) {
            t.push_str("  (gold)");
        }
        t.push('\n');
    }
    emit(out, &t)?;
    rec.write_json("predictions.json", &rows)?;
    rec.write("predictions.txt", t.as_bytes())
}

fn eval(cfg: &RunConfig, rec: &mut Recorder, out: Out, on: &str, against: Option<&Path>) -> Result<(), CliError> {
    if !SPLITS.contains(&on) {
        return Err(CliError::Usage(format!("unknown split `{on}` (train, validation, test)")));
    }
    let m = load_model(cfg, rec, "eval")?;
    let mode = cfg.mode.unwrap_or(m.info.mode);
    let data = need(&cfg.data, "data", "eval")?;
    let dps = load_split(rec, data, on, mode)?;
    let samples = encode_all(&dps, mode, &m.vocab)?;
    let mut ks: Vec<usize> = DEFAULT_KS.iter().copied().filter(|&k| k <= cfg.k).collect();
    if !ks.contains(&cfg.k) {
        ks.push(cfg.k);
    }
    let report = topk_accuracy(&samples, &m.params, &m.vocab, &ks);
    let mut t = format!("{mode} model on {on} ({} datapoints)\n{}", samples.len(), report.table());
    rec.write_json("eval.json", &report)?;
    if let Some(other) = against {
        let o: AccuracyReport = serde_json::from_str(&rec.read(other)?)
            .map_err(|e| CliError::Input(format!("{}: {e}", other.display())))?;
        let mut overlaps = Vec::new();
        t.push_str("\nk   both  only this  only other  neither\n");
        for &k in &ks {
            let ov = compare_runs(&report, &o, k).map_err(|e| CliError::Input(e.to_string()))?;
            let _ = writeln!(t, "{:<3} {:>4} {:>10} {:>11} {:>8}", k, ov.both, ov.only_a, ov.only_b, ov.neither);
            overlaps.push(ov);
        }
        rec.write_json("overlap.json", &overlaps)?;
    }
    emit(out, &t)?;
    rec.write("eval.txt", t.as_bytes())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StatsReport {
    pub mode: SliceMode,
    pub token_unit: String,
    pub reference: BTreeMap<String, f64>,
    pub stats: ContextStats,
}

fn stats_datapoints(rec: &mut Recorder, input: &Path, mode: SliceMode) -> Result<Vec<Datapoint>, CliError> {
    if input.join("train.jsonl").is_file() {
        let mut all = Vec::new();
        for name in SPLITS {
            all.extend(load_split(rec, input, name, mode)?);
        }
        return Ok(all);
    }
    rec.input(input)?;
    let pairs = load_dir(input)?;
    Ok(prepare(&pairs, &modes_for(Some(mode))).0)
}

fn stats(cfg: &RunConfig, rec: &mut Recorder, out: Out, input: &Path, emit_csv: bool) -> Result<(), CliError> {
    let mode = cfg.mode.unwrap_or_default();
    let dps = stats_datapoints(rec, input, mode)?;
    let stats = context_stats(&dps, mode);
    if !stats.all_reductions_non_negative {
        return Err(CliError::Internal("a slice is longer than its file".into()));
    }
    let reference = BTreeMap::from([
        ("mean_lines_before".to_string(), REFERENCE_MEAN_LINES.0),
        ("mean_lines_after".to_string(), REFERENCE_MEAN_LINES.1),
        ("median_lines_before".to_string(), REFERENCE_MEDIAN_LINES.0),
        ("median_lines_after".to_string(), REFERENCE_MEDIAN_LINES.1),
        ("max_lines_before".to_string(), REFERENCE_MAX_LINES.0),
        ("max_lines_after".to_string(), REFERENCE_MAX_LINES.1),
        ("control_flow_percent".to_string(), REFERENCE_CONTROL_FLOW_PERCENT),
    ]);
    let table = stats.table();
    let csv = stats.csv();
    let report = StatsReport {
        mode,
        token_unit: TOKEN_UNIT.to_string(),
        reference,
        stats,
    };
    if emit_csv && rec.out_dir().is_none() {
        emit(out, &csv)?;
    } else {
        emit(out, &table)?;
    }
    rec.write_json("stats.json", &report)?;
    rec.write("stats.txt", table.as_bytes())?;
    if emit_csv {
        rec.write("stats.csv", csv.as_bytes())?;
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct GradCheckRow {
    pub id: String,
    pub nodes: usize,
    pub max_rel_error: f64,
    pub worst_block: String,
    pub checked: usize,
    pub kinks: usize,
}

#[allow(clippy::too_many_arguments)]
fn gradcheck(
    cfg: &RunConfig,
    rec: &mut Recorder,
    out: Out,
    epsilon: f64,
    n: usize,
    per_block: usize,
    tolerance: f64,
) -> Result<(), CliError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(CliError::Usage(format!("epsilon must be positive, got {epsilon}")));
    }
    let mode = cfg.mode.unwrap_or_default();
    let (params, vocab, samples) = if cfg.checkpoint.is_some() {
        let m = load_model(cfg, rec, "grad-check")?;
        let data = need(&cfg.data, "data", "grad-check")?;
        let dps = load_split(rec, data, "train", mode)?;
        let s = encode_all(&dps, mode, &m.vocab)?;
        (m.params, m.vocab, s)
    } else {
        let dps = match &cfg.data {
            Some(data) => load_split(rec, data, "train", mode)?,
            None => prepare(&crate::synth::rename_corpus(n.max(1), cfg.model.seed), &[mode]).0,
        };
        let vocab = build_vocab_for(&dps, cfg.vocab_size, mode)?;
        let s = encode_all(&dps, mode, &vocab)?;
        (init_params(&vocab, &cfg.model), vocab, s)
    };
    let _ = vocab;
    let rows: Vec<GradCheckRow> = samples
        .iter()
        .take(n)
        .map(|s| {
            let r = grad_check(&params, &s.graph, &s.gold, epsilon, Some(per_block))?;
            Ok(GradCheckRow {
                id: s.id.clone(),
                nodes: s.graph.len(),
                max_rel_error: r.max_rel_error,
                worst_block: r.worst_block,
                checked: r.checked,
                kinks: r.kinks,
            })
        })
        .collect::<Result<_, CliError>>()?;
    let mut t = String::new();
    for r in &rows {
        let _ = writeln!(
            t,
            "{:<32} {:>4} nodes  max rel error {:.3e} ({}, {} entries, {} at a readout kink)",
            r.id, r.nodes, r.max_rel_error, r.worst_block, r.checked, r.kinks
        );
    }
    let worst = rows.iter().map(|r| r.max_rel_error).fold(0.0, f64::max);
    let _ = writeln!(t, "worst {worst:.3e}, tolerance {tolerance:.0e}");
    emit(out, &t)?;
    rec.write_json("gradcheck.json", &rows)?;
    rec.write("gradcheck.txt", t.as_bytes())?;
    if worst >= tolerance {
        return Err(CliError::Internal(format!("gradient check failed: {worst:.3e} >= {tolerance:.0e}")));
    }
    Ok(())
}

fn replay(cfg: &RunConfig, out: Out, err: Out, path: &Path) -> Result<(), CliError> {
    let target = need(&cfg.out, "out", "replay")?;
    let m = manifest::load(path)?;
    let target = std::path::absolute(target).map_err(|e| CliError::Input(e.to_string()))?;
    if m.command == "replay" {
        return Err(CliError::Usage("cannot replay a replay".into()));
    }
    std::env::set_current_dir(&m.cwd).map_err(|e| CliError::Input(format!("{}: {e}", m.cwd.display())))?;
    for (input, hash) in &m.inputs {
        if &manifest::hash_path(Path::new(input))? != hash {
            return Err(CliError::Input(format!("input {input} changed since the recorded run")));
        }
    }
    let args = manifest::rewrite_args(&m.args, &target, cfg.threads);
    let mut sink = Vec::new();
    let code = super::run(&args, &mut sink, err);
    if code != 0 {
        return Err(CliError::Internal(format!("replayed command exited with {code}")));
    }
    let fresh = manifest::load(&target.join(manifest::MANIFEST_FILE))?;
    let mut t = String::new();
    let mut same = true;
    for (name, hash) in &m.outputs {
        let ok = fresh.outputs.get(name) == Some(hash);
        same &= ok;
        let _ = writeln!(t, "{} {name}", if ok { "identical" } else { "DIFFERS  " });
    }
    for name in fresh.outputs.keys().filter(|n| !m.outputs.contains_key(*n)) {
        same = false;
        let _ = writeln!(t, "extra     {name}");
    }
    emit(out, &t)?;
    if same {
        Ok(())
    } else {
        Err(CliError::Internal("replay produced different outputs".into()))
    }
}
