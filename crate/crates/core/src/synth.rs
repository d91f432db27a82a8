//! Synthetic "wrong identifier" corpus.
//!
//! Every pair passes a wrong argument to a container method inside a
//! function; the fix swaps in another identifier that is declared at top
//! level but used nowhere else. Slicing the buggy line therefore never
//! reaches the replacement's declaration, while slicing the fixed line does.
//! The replacement is determined by the container name, so a model that has
//! the replacement in its vocabulary can learn it.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::RawPair;

pub const CONTAINERS: [&str; 12] = [
    "cart", "queue", "stack", "list", "bucket", "inbox", "batch", "pool", "cache", "backlog", "buffer", "registry",
];
/// Replacement for the container at the same index.
pub const REPLACEMENTS: [&str; 12] = [
    "item", "job", "frame", "entry", "drop", "message", "record", "worker", "value", "task", "chunk", "service",
];
pub const WRONG: [&str; 10] = ["object", "thing", "data", "temp", "other", "node", "elem", "obj", "blob", "stuff"];
const METHODS: [&str; 4] = ["push", "unshift", "includes", "indexOf"];
const FUNCTIONS: [&str; 6] = ["add", "store", "track", "handle", "process", "collect"];
const FILLERS: [&str; 6] = ["limit", "offset", "width", "height", "retries", "delay"];
const COUNTERS: [&str; 4] = ["total", "count", "seen", "size"];
const PARAMS: [&str; 4] = ["n", "step", "amount", "delta"];

/// One buggy/fixed pair and the replacement identifier it introduces.
pub fn rename_pair(rng: &mut impl Rng, id: usize) -> (RawPair, &'static str) {
    let ci = rng.gen_range(0..CONTAINERS.len());
    let container = CONTAINERS[ci];
    let repl = REPLACEMENTS[ci];
    let wrong = *WRONG.choose(rng).expect("nonempty");
    let method = *METHODS.choose(rng).expect("nonempty");
    let func = *FUNCTIONS.choose(rng).expect("nonempty");
    let counter = *COUNTERS.choose(rng).expect("nonempty");
    let param = *PARAMS.choose(rng).expect("nonempty");
    let mut fillers = FILLERS.to_vec();
    fillers.shuffle(rng);
    let n_fillers = rng.gen_range(1..=3);

    let mut decls = vec![
        format!("const {container} = [];"),
        format!("const {wrong} = {{ id: {} }};", rng.gen_range(0..100)),
        format!("const {repl} = {{ id: {} }};", rng.gen_range(0..100)),
        format!("let {counter} = 0;"),
    ];
    for f in &fillers[..n_fillers] {
        decls.push(format!("const {f} = {};", rng.gen_range(1..50)));
    }
    decls.shuffle(rng);

    let call = format!("  {container}.{method}({wrong});");
    let mut body = vec![format!("  {counter} = {counter} + {param};"), call.clone()];
    if rng.gen_bool(0.5) {
        body.swap(0, 1);
    }
    if rng.gen_bool(0.5) {
        body.push(format!("  return {container}.length;"));
    }
    let mut lines = decls;
    lines.push(String::new());
    lines.push(format!("function {func}({param}) {{"));
    lines.extend(body);
    lines.push("}".into());
    if rng.gen_bool(0.6) {
        let f = fillers[0];
        lines.push(String::new());
        lines.push("function report() {".into());
        lines.push(format!("  return {f} * 2;"));
        lines.push("}".into());
    }
    lines.push(String::new());
    lines.push(format!("{func}({});", rng.gen_range(1..10)));
    let buggy = lines.join("\n") + "\n";
    let fixed = buggy.replace(&call, &format!("  {container}.{method}({repl});"));
    (RawPair::new(format!("rename-{id:04}"), &buggy, &fixed), repl)
}

/// `n` pairs, deterministic per seed.
pub fn rename_corpus(n: usize, seed: u64) -> Vec<RawPair> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| rename_pair(&mut rng, i).0).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{attach_slices, filter_pairs};
    use crate::diff::EditOp;
    use crate::slicer::SliceMode;

    #[test]
    fn pairs_are_one_node_renames_with_fix_only_declaration() {
        let pairs = rename_corpus(40, 9);
        let (kept, report) = filter_pairs(&pairs);
        assert_eq!(report.kept, 40);
        let (sliced, failed) = attach_slices(kept, &[SliceMode::Single, SliceMode::Dual]);
        assert!(failed.is_empty());
        for dp in &sliced {
            assert_eq!(dp.edit.op, EditOp::RepVal);
            let repl = dp.edit.value_token.as_deref().unwrap();
            assert!(REPLACEMENTS.contains(&repl));
            let single = dp.sliced_single.as_ref().unwrap();
            let dual = dp.sliced_dual.as_ref().unwrap();
            let decl = format!("const {repl} =");
            assert!(!single.buggy_source.contains(&decl), "{}", single.buggy_source);
            assert!(!single.fixed_source.contains(&decl));
            assert!(dual.fixed_source.contains(&decl), "{}", dual.fixed_source);
        }
        assert_eq!(rename_corpus(5, 1), rename_corpus(5, 1));
    }
}
