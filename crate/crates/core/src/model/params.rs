use ndarray::{ArrayView1, ArrayView2, ArrayViewMut1, ArrayViewMut2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelConfig;
use crate::graph::{EdgeType, Vocabulary};
use crate::diff::EditOp;

/// Number of (edge type, direction) message channels per layer.
pub const CHANNELS: usize = EdgeType::ALL.len() * 2;
pub const N_OPS: usize = EditOp::ALL.len();

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl Block {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Indices of the parameter blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ix {
    pub kind_emb: usize,
    pub value_emb: usize,
    /// `msg[l][channel]`, channel = 2 * edge type + direction.
    pub msg: Vec<[usize; CHANNELS]>,
    pub self_w: Vec<usize>,
    pub loc: usize,
    pub pos: usize,
    pub op: Head,
    pub kind: Head,
    pub value: Head,
}

/// A one-hidden-layer classifier: hidden weights, bias, output weights, bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Head {
    pub hidden: usize,
    pub hidden_b: usize,
    pub out: usize,
    pub out_b: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub blocks: Vec<Block>,
    pub len: usize,
}

impl Layout {
    fn push(&mut self, name: String, shape: Vec<usize>) -> usize {
        let b = Block {
            name,
            shape,
            offset: self.len,
        };
        self.len += b.len();
        self.blocks.push(b);
        self.blocks.len() - 1
    }

    fn head(&mut self, name: &str, input: usize, hidden: usize, out: usize) -> Head {
        Head {
            hidden: self.push(format!("{name}.hidden"), vec![hidden, input]),
            hidden_b: self.push(format!("{name}.hidden_bias"), vec![hidden]),
            out: self.push(format!("{name}.out"), vec![out, hidden]),
            out_b: self.push(format!("{name}.out_bias"), vec![out]),
        }
    }

    pub fn new(d: usize, layers: usize, n_kinds: usize, n_values: usize) -> (Layout, Ix) {
        let mut l = Layout {
            blocks: Vec::new(),
            len: 0,
        };
        let kind_emb = l.push("kind_embedding".into(), vec![n_kinds, d]);
        let value_emb = l.push("value_embedding".into(), vec![n_values, d]);
        let mut msg = Vec::new();
        let mut self_w = Vec::new();
        for layer in 0..layers {
            let mut ch = [0; CHANNELS];
            for (c, slot) in ch.iter_mut().enumerate() {
                let dir = if c % 2 == 0 { "fwd" } else { "bwd" };
                *slot = l.push(format!("layer{layer}.{:?}.{dir}", EdgeType::ALL[c / 2]), vec![d, d]);
            }
            msg.push(ch);
            self_w.push(l.push(format!("layer{layer}.self"), vec![d, d]));
        }
        let loc = l.push("location".into(), vec![d, d]);
        let pos = l.push("position".into(), vec![2 * d, 2 * d]);
        let op = l.head("op", 2 * d, d, N_OPS);
        let kind = l.head("kind", 2 * d + N_OPS, d, n_kinds);
        let value = l.head("value", 2 * d + N_OPS, d, n_values);
        let ix = Ix {
            kind_emb,
            value_emb,
            msg,
            self_w,
            loc,
            pos,
            op,
            kind,
            value,
        };
        (l, ix)
    }
}

/// All weights in one flat vector, addressed through a block layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub n_kinds: usize,
    pub n_values: usize,
    pub layout: Layout,
    pub ix: Ix,
    pub data: Vec<f64>,
}

impl ModelParams {
    pub fn zeros(config: &ModelConfig, n_kinds: usize, n_values: usize) -> Self {
        let (layout, ix) = Layout::new(config.dim, config.layers, n_kinds, n_values);
        Self {
            config: config.clone(),
            n_kinds,
            n_values,
            data: vec![0.0; layout.len],
            layout,
            ix,
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn block(&self, b: usize) -> &[f64] {
        let blk = &self.layout.blocks[b];
        &self.data[blk.offset..blk.offset + blk.len()]
    }

    pub fn mat(&self, b: usize) -> ArrayView2<'_, f64> {
        let s = &self.layout.blocks[b].shape;
        ArrayView2::from_shape((s[0], s[1]), self.block(b)).expect("block shape")
    }

    pub fn vec(&self, b: usize) -> ArrayView1<'_, f64> {
        ArrayView1::from(self.block(b))
    }

    pub fn zeros_like(&self) -> Grads {
        Grads {
            layout: self.layout.clone(),
            data: vec![0.0; self.data.len()],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// Gradient with the same layout as the parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub layout: Layout,
    pub data: Vec<f64>,
}

impl Grads {
    fn range(&self, b: usize) -> std::ops::Range<usize> {
        let blk = &self.layout.blocks[b];
        blk.offset..blk.offset + blk.len()
    }

    pub fn mat_mut(&mut self, b: usize) -> ArrayViewMut2<'_, f64> {
        let s = self.layout.blocks[b].shape.clone();
        let r = self.range(b);
        ArrayViewMut2::from_shape((s[0], s[1]), &mut self.data[r]).expect("block shape")
    }

    pub fn vec_mut(&mut self, b: usize) -> ArrayViewMut1<'_, f64> {
        let r = self.range(b);
        ArrayViewMut1::from(&mut self.data[r])
    }

    pub fn add_assign(&mut self, other: &Grads) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Uniform [-0.1, 0.1] initialization, deterministic per seed.
pub fn init_params(vocab: &Vocabulary, config: &ModelConfig) -> ModelParams {
    let mut p = ModelParams::zeros(config, vocab.n_kinds(), vocab.n_values());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for x in &mut p.data {
        *x = rng.gen_range(-0.1..=0.1);
    }
    p
}
