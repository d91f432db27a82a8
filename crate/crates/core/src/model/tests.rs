use std::collections::HashMap;

use super::*;
use crate::diff::EditOp;
use crate::graph::{build_graph, CodeGraph, GraphNode, IndexedEdit, Vocabulary};
use crate::syntax::{parse, Kind, SourceFile};

fn vocab() -> Vocabulary {
    let counts: HashMap<String, usize> = ["a", "b", "c", "f", "+", "1", "user"]
        .iter()
        .enumerate()
        .map(|(i, v)| (v.to_string(), 10 - i))
        .collect();
    Vocabulary::from_counts(Kind::ALL.iter().copied(), counts, 100)
}

fn graph(src: &str, v: &Vocabulary) -> CodeGraph {
    build_graph(&parse(&SourceFile::new("t.js", src)).unwrap(), v)
}

fn small_config(dim: usize, layers: usize) -> ModelConfig {
    ModelConfig {
        dim,
        layers,
        seed: 3,
        ..Default::default()
    }
}

fn add_gold(v: &Vocabulary) -> (CodeGraph, IndexedEdit) {
    // f(a, b); → f(a, b, c);  Call node is 2 (Program, ExpressionStatement, Call).
    let g = graph("f(a, b);", v);
    let gold = IndexedEdit {
        op: EditOp::AddNode,
        location: 2,
        child_position: Some(3),
        kind_id: Some(v.kind_id(Kind::Identifier)),
        value_id: Some(v.value_id("c")),
    };
    (g, gold)
}

fn sum_exp(x: &ndarray::Array1<f64>) -> f64 {
    x.mapv(f64::exp).sum()
}

#[test]
fn factors_are_normalized() {
    let v = vocab();
    let p = init_params(&v, &small_config(8, 2));
    let (g, _) = add_gold(&v);
    let d = score(&g, &p);
    for f in [&d.location, &d.op, &d.position, &d.kind, &d.value] {
        assert!((sum_exp(f) - 1.0).abs() < 1e-6);
    }
    assert_eq!(d.location.len(), g.syntactic);
}

#[test]
fn uniform_model_loss() {
    let v = vocab();
    let p = ModelParams::zeros(&small_config(4, 1), v.n_kinds(), v.n_values());
    let g = CodeGraph {
        nodes: vec![GraphNode { kind_id: 2, value_id: None }; 5],
        edges: (1..5).map(|c| (0, c, crate::graph::EdgeType::AstChild)).collect(),
        syntactic: 5,
        arity: vec![4, 0, 0, 0, 0],
    };
    let gold = IndexedEdit {
        op: EditOp::DelNode,
        location: 3,
        child_position: None,
        kind_id: None,
        value_id: None,
    };
    let l = loss(&g, &gold, &p).unwrap();
    assert!((l - (5f64.ln() + 4f64.ln())).abs() < 1e-12, "{l}");
    let bad = IndexedEdit { location: 9, ..gold };
    assert_eq!(loss(&g, &bad, &p), Err(LossError::BadLocation(9)));
}

#[test]
fn gradient_matches_finite_differences() {
    let v = vocab();
    let p = init_params(&v, &small_config(4, 2));
    let (g, gold) = add_gold(&v);
    let r = grad_check(&p, &g, &gold, 1e-4, None).unwrap();
    assert!(r.max_rel_error < 1e-3, "{r:?}");
    assert_eq!(r.checked + r.kinks, p.len());
    let rv = IndexedEdit {
        op: EditOp::RepVal,
        location: 4,
        child_position: None,
        kind_id: None,
        value_id: Some(v.value_id("b")),
    };
    assert!(grad_check(&p, &g, &rv, 1e-4, None).unwrap().max_rel_error < 1e-3);
    assert_eq!(grad_check(&p, &g, &gold, 0.0, None), Err(GradCheckError::BadEpsilon(0.0)));
}

#[test]
fn scalar_location_gradient_by_hand() {
    let v = vocab();
    let p = init_params(&v, &small_config(1, 1));
    let (g, gold) = add_gold(&v);
    let sc = Scorer::new(&g, &p);
    let h = sc.emb.node_mat();
    let gv = sc.emb.graph_vec[0];
    let probs = sc.location().mapv(f64::exp);
    let mut want = 0.0;
    for i in 0..g.syntactic {
        let y = if i == gold.location { 1.0 } else { 0.0 };
        want += (probs[i] - y) * h[[i, 0]] * gv;
    }
    let gr = grad(&g, &gold, &p).unwrap();
    let got = gr.data[p.layout.blocks[p.ix.loc].offset];
    assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    let op_probs = sc.op(gold.location).mapv(f64::exp);
    let bias = p.layout.blocks[p.ix.op.out_b].offset;
    for o in 0..4 {
        let y = if o == gold.op.index() { 1.0 } else { 0.0 };
        assert!((gr.data[bias + o] - (op_probs[o] - y)).abs() < 1e-12);
    }
}

#[test]
fn init_is_seeded() {
    let v = vocab();
    let c = small_config(8, 2);
    assert_eq!(init_params(&v, &c), init_params(&v, &c));
    assert_ne!(init_params(&v, &c).data, init_params(&v, &ModelConfig { seed: 4, ..c.clone() }).data);
    assert!(init_params(&v, &c).data.iter().all(|x| x.abs() <= 0.1));
    let tiny = init_params(&v, &small_config(1, 1));
    let (g, gold) = add_gold(&v);
    assert!(loss(&g, &gold, &tiny).unwrap().is_finite());
    let big = ModelParams::zeros(&ModelConfig::default(), 492, 5002);
    assert_eq!(big.mat(big.ix.kind.out).shape(), &[492, 64]);
    assert_eq!(big.mat(big.ix.value.out).shape(), &[5002, 64]);
}

fn permute(g: &CodeGraph, perm: &[usize]) -> CodeGraph {
    let mut nodes = g.nodes.clone();
    for (old, &new) in perm.iter().enumerate() {
        nodes[new] = g.nodes[old];
    }
    CodeGraph {
        nodes,
        edges: g.edges.iter().map(|&(s, d, t)| (perm[s], perm[d], t)).collect(),
        syntactic: g.len(),
        arity: vec![0; g.len()],
    }
}

#[test]
fn embedding_is_permutation_equivariant() {
    let v = vocab();
    let p = init_params(&v, &small_config(6, 3));
    let mut g = graph("let a = f(b, c);\na = a + 1;", &v);
    // Treat every node as syntactic so any relabeling is allowed.
    g.syntactic = g.len();
    let n = g.len();
    let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
    assert_eq!(perm.iter().collect::<std::collections::HashSet<_>>().len(), n);
    let pg = permute(&g, &perm);
    let (t1, t2) = (Topology::new(&g), Topology::new(&pg));
    let (e1, e2) = (embed(&g, &t1, &p), embed(&pg, &t2, &p));
    for (a, b) in e1.graph_vec.iter().zip(e2.graph_vec.iter()) {
        assert!((a - b).abs() < 1e-12);
    }
    for (old, &new) in perm.iter().enumerate() {
        for j in 0..6 {
            assert!((e1.node_mat()[[old, j]] - e2.node_mat()[[new, j]]).abs() < 1e-12);
        }
    }
}

#[test]
fn single_node_without_layers_pools_to_its_embedding() {
    let v = vocab();
    let mut c = small_config(5, 1);
    let p = init_params(&v, &c);
    c.layers = 0;
    let mut p0 = ModelParams::zeros(&c, v.n_kinds(), v.n_values());
    let n = p0.block(p0.ix.kind_emb).len() + p0.block(p0.ix.value_emb).len();
    p0.data[..n].copy_from_slice(&p.data[..n]);
    let g = graph("", &v);
    assert_eq!(g.len(), 1);
    let e = embed(&g, &Topology::new(&g), &p0);
    assert_eq!(e.graph_vec, p0.mat(p0.ix.kind_emb).row(g.nodes[0].kind_id));
}

#[test]
fn beam_is_prefix_consistent_and_valid() {
    let v = vocab();
    let p = init_params(&v, &small_config(8, 2));
    let g = graph("let a = f(b, c);\na = a + 1;", &v);
    let topo = Topology::new(&g);
    let sc = Scorer::new(&g, &p);
    let p5 = beam_infer(&g, &p, &v, 5);
    assert_eq!(p5.candidates.len(), 5);
    for k in [1, 3] {
        let pk = beam_infer(&g, &p, &v, k);
        assert_eq!(pk.candidates[..], p5.candidates[..k]);
    }
    for w in p5.candidates.windows(2) {
        assert!(w[0].log_prob >= w[1].log_prob);
    }
    for c in &p5.candidates {
        assert!((sc.joint(&c.edit) - c.log_prob).abs() < 1e-9);
        match c.edit.op {
            EditOp::DelNode => assert!(topo.is_leaf(c.edit.location) && c.edit.location != 0),
            EditOp::RepVal => assert!(topo.value_of[c.edit.location].is_some()),
            _ => {}
        }
    }
    assert_eq!(beam_infer(&g, &p, &v, 1), beam_infer(&g, &p, &v, 1));
}

/// Brute-force enumeration of every valid edit, ranked the same way.
#[test]
fn beam_equals_exhaustive_ranking() {
    let v = vocab();
    let p = init_params(&v, &small_config(4, 1));
    let g = graph("f(a);", &v);
    let topo = Topology::new(&g);
    let sc = Scorer::new(&g, &p);
    let mut all = Vec::new();
    for loc in 0..g.syntactic {
        let mk = |op, child_position, kind_id, value_id| IndexedEdit {
            op,
            location: loc,
            child_position,
            kind_id,
            value_id,
        };
        if loc != 0 && topo.is_leaf(loc) {
            all.push(mk(EditOp::DelNode, None, None, None));
        }
        for val in 0..v.n_values() {
            if topo.value_of[loc].is_some() && Some(val) != topo.value_of[loc] {
                all.push(mk(EditOp::RepVal, None, None, Some(val)));
            }
        }
        for kd in 0..v.n_kinds() {
            let Some(kind) = v.kind_of(kd) else { continue };
            if kd != g.nodes[loc].kind_id && kind.has_value() == topo.value_of[loc].is_some() {
                all.push(mk(EditOp::RepType, None, Some(kd), None));
            }
            for j in 0..topo.n_positions(loc) {
                if kind.has_value() {
                    for val in 0..v.n_values() {
                        all.push(mk(EditOp::AddNode, Some(j), Some(kd), Some(val)));
                    }
                } else {
                    all.push(mk(EditOp::AddNode, Some(j), Some(kd), None));
                }
            }
        }
    }
    let mut scored: Vec<_> = all.iter().map(|e| (sc.joint(e), *e)).collect();
    scored.sort_by(|a, b| {
        b.0.total_cmp(&a.0).then_with(|| {
            let key = |e: &IndexedEdit| (e.location, e.op, e.value_id, e.child_position, e.kind_id);
            key(&a.1).cmp(&key(&b.1))
        })
    });
    let beam = beam_infer(&g, &p, &v, 7);
    let got: Vec<_> = beam.candidates.iter().map(|c| c.edit).collect();
    let want: Vec<_> = scored[..7].iter().map(|s| s.1).collect();
    assert_eq!(got, want);
}

#[test]
fn overfits_one_sample_and_zero_loss_has_small_gradient() {
    let v = vocab();
    let (g, gold) = add_gold(&v);
    let sample = crate::graph::Sample {
        id: "one".into(),
        graph: g.clone(),
        gold,
    };
    let cfg = ModelConfig {
        dim: 8,
        layers: 2,
        learning_rate: 0.05,
        dropout: 0.0,
        batch_size: 1,
        epochs: 150,
        seed: 1,
        edit_steps: 1,
    };
    let set = vec![sample];
    let (p, hist) = train(&set, &set, &v, &cfg).unwrap();
    assert!(hist.epochs.last().unwrap().train_loss < hist.epochs[0].train_loss);
    let d = score(&g, &p);
    assert_eq!(d.at_location, gold.location);
    assert_eq!(d.at_op, gold.op);
    let top = beam_infer(&g, &p, &v, 3);
    assert_eq!(top.top(), Some(&gold));
    assert!(loss(&g, &gold, &p).unwrap() < 0.05);
    assert!(grad(&g, &gold, &p).unwrap().norm() < 1.0);
}

#[test]
fn training_is_deterministic() {
    let v = vocab();
    let (g, gold) = add_gold(&v);
    let g2 = graph("return a - b;", &v);
    let set = vec![
        crate::graph::Sample {
            id: "x".into(),
            graph: g,
            gold,
        },
        crate::graph::Sample {
            id: "y".into(),
            graph: g2,
            gold: IndexedEdit {
                op: EditOp::RepVal,
                location: 3,
                child_position: None,
                kind_id: None,
                value_id: Some(v.value_id("+")),
            },
        },
    ];
    let cfg = ModelConfig {
        dim: 6,
        layers: 2,
        epochs: 3,
        batch_size: 2,
        ..Default::default()
    };
    let a = train(&set, &set, &v, &cfg).unwrap();
    let b = train(&set, &set, &v, &cfg).unwrap();
    assert_eq!(a.0.data, b.0.data);
    assert_eq!(a.1, b.1);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let c = one.install(|| train(&set, &set, &v, &cfg).unwrap());
    assert_eq!(a.0.data, c.0.data);
}

#[test]
fn checkpoint_round_trip() {
    let v = vocab();
    let p = init_params(&v, &small_config(5, 2));
    let bytes = checkpoint::to_bytes(&p, &v.hash());
    assert_eq!(&bytes[..8], checkpoint::MAGIC);
    let (back, hash) = checkpoint::from_bytes(&bytes).unwrap();
    assert_eq!(back, p);
    assert_eq!(hash, v.hash());
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    checkpoint::save(&path, &p, &v.hash()).unwrap();
    assert_eq!(checkpoint::load(&path, Some(&v.hash())).unwrap(), p);
    assert!(matches!(
        checkpoint::load(&path, Some("other")),
        Err(checkpoint::CheckpointError::VocabMismatch { .. })
    ));
    assert!(matches!(checkpoint::from_bytes(b"nonsense-bytes-here"), Err(checkpoint::CheckpointError::BadMagic)));
}

#[test]
fn config_validation() {
    assert!(ModelConfig::default().validate().is_ok());
    for bad in [
        ModelConfig { dim: 0, ..Default::default() },
        ModelConfig { layers: 0, ..Default::default() },
        ModelConfig { dropout: 1.0, ..Default::default() },
        ModelConfig { edit_steps: 0, ..Default::default() },
    ] {
        assert!(bad.validate().is_err());
    }
}
