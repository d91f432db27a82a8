use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::Rng;

use super::params::{Grads, Head, ModelParams, CHANNELS, N_OPS};
use crate::diff::EditOp;
use crate::graph::{CodeGraph, EdgeType, IndexedEdit};

/// Adjacency of a code graph in the shape message passing needs.
#[derive(Debug, Clone)]
pub struct Topology {
    pub n: usize,
    pub syntactic: usize,
    /// `nbrs[c][v]`: nodes whose messages `v` averages on channel `c`.
    /// Even channels follow edge direction, odd channels run against it.
    pub nbrs: Vec<Vec<Vec<usize>>>,
    pub children: Vec<Vec<usize>>,
    /// Value id attached to each syntactic node, if any.
    pub value_of: Vec<Option<usize>>,
}

impl Topology {
    pub fn new(g: &CodeGraph) -> Self {
        let n = g.len();
        let mut nbrs = vec![vec![Vec::new(); n]; CHANNELS];
        let mut children = vec![Vec::new(); g.syntactic];
        let mut value_of = vec![None; g.syntactic];
        for &(s, d, t) in &g.edges {
            let c = 2 * t.index();
            nbrs[c][d].push(s);
            nbrs[c + 1][s].push(d);
            match t {
                EdgeType::AstChild => children[s].push(d),
                EdgeType::ValueLink => value_of[s] = g.nodes[d].value_id,
                EdgeType::SuccToken => {}
            }
        }
        Self {
            n,
            syntactic: g.syntactic,
            nbrs,
            children,
            value_of,
        }
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.children[v].is_empty()
    }

    pub fn n_positions(&self, v: usize) -> usize {
        self.children[v].len() + 1
    }
}

pub fn log_softmax(x: ArrayView1<f64>) -> Array1<f64> {
    let m = x.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let lse = m + x.mapv(|v| (v - m).exp()).sum().ln();
    x.mapv(|v| v - lse)
}

fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    a.view().insert_axis(Axis(1)).dot(&b.view().insert_axis(Axis(0)))
}

fn concat(parts: &[ArrayView1<f64>]) -> Array1<f64> {
    let mut v = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
    for p in parts {
        v.extend(p.iter());
    }
    Array1::from(v)
}

fn one_hot(n: usize, i: usize) -> Array1<f64> {
    let mut v = Array1::zeros(n);
    v[i] = 1.0;
    v
}

/// Node states of every layer and the pooled graph vector.
#[derive(Debug, Clone)]
pub struct Embedding {
    /// `hs[l]` is |V|×d, for l = 0..=L.
    pub hs: Vec<Array2<f64>>,
    /// Neighbour means per layer and channel, kept for the backward pass.
    agg: Vec<Vec<Array2<f64>>>,
    /// Row of the maximum per layer and dimension.
    argmax: Vec<Vec<usize>>,
    pub graph_vec: Array1<f64>,
}

impl Embedding {
    pub fn node_mat(&self) -> &Array2<f64> {
        self.hs.last().expect("at least the input layer")
    }

    /// Which node wins the max readout, per layer and dimension. The loss is
    /// not differentiable where this changes.
    pub fn readout_winners(&self) -> &[Vec<usize>] {
        &self.argmax
    }
}

fn mean_neighbours(h: &Array2<f64>, nbrs: &[Vec<usize>]) -> Array2<f64> {
    let mut out = Array2::zeros(h.raw_dim());
    for (v, us) in nbrs.iter().enumerate() {
        if us.is_empty() {
            continue;
        }
        let mut row = out.row_mut(v);
        for &u in us {
            row += &h.row(u);
        }
        row /= us.len() as f64;
    }
    out
}

pub fn embed(graph: &CodeGraph, topo: &Topology, p: &ModelParams) -> Embedding {
    let d = p.config.dim;
    let ke = p.mat(p.ix.kind_emb);
    let ve = p.mat(p.ix.value_emb);
    let mut h0 = Array2::zeros((graph.len(), d));
    for (v, node) in graph.nodes.iter().enumerate() {
        let mut row = h0.row_mut(v);
        row += &ke.row(node.kind_id);
        if let Some(val) = node.value_id {
            row += &ve.row(val);
        }
    }
    let mut hs = vec![h0];
    let mut agg = Vec::new();
    for l in 0..p.config.layers {
        let h = &hs[l];
        let mut a = h.dot(&p.mat(p.ix.self_w[l]).t());
        let mut per = Vec::with_capacity(CHANNELS);
        for c in 0..CHANNELS {
            let m = mean_neighbours(h, &topo.nbrs[c]);
            a += &m.dot(&p.mat(p.ix.msg[l][c]).t());
            per.push(m);
        }
        agg.push(per);
        hs.push(a.mapv(f64::tanh));
    }
    let mut graph_vec = Array1::zeros(d);
    let mut argmax = Vec::new();
    for h in &hs {
        let mut idx = vec![0; d];
        for j in 0..d {
            let col = h.column(j);
            let mut best = 0;
            for v in 1..col.len() {
                if col[v] > col[best] {
                    best = v;
                }
            }
            idx[j] = best;
            if !col.is_empty() {
                graph_vec[j] += col[best];
            }
        }
        argmax.push(idx);
    }
    graph_vec /= hs.len() as f64;
    Embedding {
        hs,
        agg,
        argmax,
        graph_vec,
    }
}

struct MlpOut {
    x: Array1<f64>,
    z: Array1<f64>,
    zt: Array1<f64>,
    mask: Option<Array1<f64>>,
    logp: Array1<f64>,
}

fn mlp(p: &ModelParams, h: Head, x: Array1<f64>, mask: Option<Array1<f64>>) -> MlpOut {
    let z = (p.mat(h.hidden).dot(&x) + p.vec(h.hidden_b)).mapv(f64::tanh);
    let zt = match &mask {
        Some(m) => &z * m,
        None => z.clone(),
    };
    let logits = p.mat(h.out).dot(&zt) + p.vec(h.out_b);
    MlpOut {
        logp: log_softmax(logits.view()),
        x,
        z,
        zt,
        mask,
    }
}

/// Backpropagates `-logp[gold]` through a head; returns the input gradient.
fn mlp_back(p: &ModelParams, g: &mut Grads, h: Head, o: &MlpOut, gold: usize) -> Array1<f64> {
    let mut dl = o.logp.mapv(f64::exp);
    dl[gold] -= 1.0;
    g.mat_mut(h.out).scaled_add(1.0, &outer(&dl, &o.zt));
    g.vec_mut(h.out_b).scaled_add(1.0, &dl);
    let mut dz = p.mat(h.out).t().dot(&dl);
    if let Some(m) = &o.mask {
        dz *= m;
    }
    let dpre = dz * o.z.mapv(|z| 1.0 - z * z);
    g.mat_mut(h.hidden).scaled_add(1.0, &outer(&dpre, &o.x));
    g.vec_mut(h.hidden_b).scaled_add(1.0, &dpre);
    p.mat(h.hidden).t().dot(&dpre)
}

fn dropout_mask(rng: &mut Option<&mut dyn rand::RngCore>, n: usize, rate: f64) -> Option<Array1<f64>> {
    let rng = rng.as_mut()?;
    if rate <= 0.0 {
        return None;
    }
    Some(Array1::from_shape_fn(n, |_| {
        if rng.gen::<f64>() < rate {
            0.0
        } else {
            1.0 / (1.0 - rate)
        }
    }))
}

/// Slot feature of ADD position `j` under `loc`: states of the children on
/// either side, zero where there is none.
fn slot(e: &Embedding, topo: &Topology, loc: usize, j: usize) -> Array1<f64> {
    let h = e.node_mat();
    let d = h.ncols();
    let ch = &topo.children[loc];
    let mut q = Array1::zeros(2 * d);
    if j > 0 {
        q.slice_mut(s![..d]).assign(&h.row(ch[j - 1]));
    }
    if j < ch.len() {
        q.slice_mut(s![d..]).assign(&h.row(ch[j]));
    }
    q
}

/// Per-factor scorer over one embedded graph. Dropout is never applied here.
pub struct Scorer<'a> {
    pub params: &'a ModelParams,
    pub topo: Topology,
    pub emb: Embedding,
}

impl<'a> Scorer<'a> {
    pub fn new(graph: &CodeGraph, params: &'a ModelParams) -> Self {
        let topo = Topology::new(graph);
        let emb = embed(graph, &topo, params);
        Self { params, topo, emb }
    }

    fn base_input(&self, loc: usize) -> Array1<f64> {
        concat(&[self.emb.graph_vec.view(), self.emb.node_mat().row(loc)])
    }

    fn cond_input(&self, loc: usize, op: EditOp) -> Array1<f64> {
        let oh = one_hot(N_OPS, op.index());
        concat(&[self.emb.graph_vec.view(), self.emb.node_mat().row(loc), oh.view()])
    }

    /// Log-probabilities over syntactic nodes.
    pub fn location(&self) -> Array1<f64> {
        let q = self.params.mat(self.params.ix.loc).dot(&self.emb.graph_vec);
        let h = self.emb.node_mat().slice(s![..self.topo.syntactic, ..]);
        log_softmax(h.dot(&q).view())
    }

    pub fn op(&self, loc: usize) -> Array1<f64> {
        mlp(self.params, self.params.ix.op, self.base_input(loc), None).logp
    }

    pub fn position(&self, loc: usize) -> Array1<f64> {
        let c = self.params.mat(self.params.ix.pos).dot(&self.base_input(loc));
        let scores: Array1<f64> = (0..self.topo.n_positions(loc))
            .map(|j| slot(&self.emb, &self.topo, loc, j).dot(&c))
            .collect();
        log_softmax(scores.view())
    }

    pub fn kind(&self, loc: usize, op: EditOp) -> Array1<f64> {
        mlp(self.params, self.params.ix.kind, self.cond_input(loc, op), None).logp
    }

    pub fn value(&self, loc: usize, op: EditOp) -> Array1<f64> {
        mlp(self.params, self.params.ix.value, self.cond_input(loc, op), None).logp
    }

    /// Joint log-probability of an edit: the sum of its applicable factors.
    pub fn joint(&self, e: &IndexedEdit) -> f64 {
        let mut s = self.location()[e.location] + self.op(e.location)[e.op.index()];
        if let Some(j) = e.child_position {
            s += self.position(e.location)[j];
        }
        if let Some(k) = e.kind_id {
            s += self.kind(e.location, e.op)[k];
        }
        if let Some(v) = e.value_id {
            s += self.value(e.location, e.op)[v];
        }
        s
    }
}

/// Factor distributions at the most likely location and op.
#[derive(Debug, Clone, PartialEq)]
pub struct EditDistribution {
    pub location: Array1<f64>,
    pub at_location: usize,
    pub op: Array1<f64>,
    pub at_op: EditOp,
    pub position: Array1<f64>,
    pub kind: Array1<f64>,
    pub value: Array1<f64>,
}

fn argmax(x: &Array1<f64>) -> usize {
    let mut best = 0;
    for i in 1..x.len() {
        if x[i] > x[best] {
            best = i;
        }
    }
    best
}

pub fn score(graph: &CodeGraph, params: &ModelParams) -> EditDistribution {
    let sc = Scorer::new(graph, params);
    let location = sc.location();
    let at_location = argmax(&location);
    let op = sc.op(at_location);
    let at_op = EditOp::from_index(argmax(&op)).expect("four ops");
    EditDistribution {
        position: sc.position(at_location),
        kind: sc.kind(at_location, at_op),
        value: sc.value(at_location, at_op),
        location,
        at_location,
        op,
        at_op,
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LossError {
    #[error("gold location {0} is not a syntactic node of the graph")]
    BadLocation(usize),
    #[error("gold child position {0} is out of range")]
    BadPosition(usize),
}

fn check_gold(topo: &Topology, gold: &IndexedEdit) -> Result<(), LossError> {
    if gold.location >= topo.syntactic {
        return Err(LossError::BadLocation(gold.location));
    }
    if let Some(j) = gold.child_position {
        if j >= topo.n_positions(gold.location) {
            return Err(LossError::BadPosition(j));
        }
    }
    Ok(())
}

/// Summed cross-entropy of the gold edit's factors. With `grads`, the
/// gradient is accumulated into it; with `rng`, dropout is active.
pub fn loss_and_grad(
    graph: &CodeGraph,
    gold: &IndexedEdit,
    p: &ModelParams,
    rng: Option<&mut dyn rand::RngCore>,
    grads: Option<&mut Grads>,
) -> Result<f64, LossError> {
    let topo = Topology::new(graph);
    check_gold(&topo, gold)?;
    let emb = embed(graph, &topo, p);
    let d = p.config.dim;
    let rate = p.config.dropout;
    let mut rng = rng;
    let mut mask = |n: usize| dropout_mask(&mut rng, n, rate);
    let h_l = emb.node_mat();
    let g = &emb.graph_vec;
    let loc = gold.location;
    let ix = &p.ix;

    // Location.
    let q = p.mat(ix.loc).dot(g);
    let syn = h_l.slice(s![..topo.syntactic, ..]);
    let loc_logp = log_softmax(syn.dot(&q).view());
    let mut loss = -loc_logp[loc];

    let base = concat(&[g.view(), h_l.row(loc)]);
    let cond = concat(&[g.view(), h_l.row(loc), one_hot(N_OPS, gold.op.index()).view()]);
    let op_out = mlp(p, ix.op, base.clone(), mask(d));
    loss -= op_out.logp[gold.op.index()];

    let pos = gold.child_position.map(|j| {
        let c = p.mat(ix.pos).dot(&base);
        let slots: Vec<_> = (0..topo.n_positions(loc)).map(|i| slot(&emb, &topo, loc, i)).collect();
        let scores: Array1<f64> = slots.iter().map(|q| q.dot(&c)).collect();
        let logp = log_softmax(scores.view());
        (j, c, slots, logp)
    });
    if let Some((j, _, _, logp)) = &pos {
        loss -= logp[*j];
    }
    let kind_out = gold.kind_id.map(|k| (k, mlp(p, ix.kind, cond.clone(), mask(d))));
    if let Some((k, o)) = &kind_out {
        loss -= o.logp[*k];
    }
    let value_out = gold.value_id.map(|v| (v, mlp(p, ix.value, cond.clone(), mask(d))));
    if let Some((v, o)) = &value_out {
        loss -= o.logp[*v];
    }

    let Some(gr) = grads else {
        return Ok(loss);
    };

    let mut dg = Array1::<f64>::zeros(d);
    let mut dh = Array2::<f64>::zeros(h_l.raw_dim());

    // Location backward.
    let mut ds = loc_logp.mapv(f64::exp);
    ds[loc] -= 1.0;
    let dq = syn.t().dot(&ds);
    dh.slice_mut(s![..topo.syntactic, ..]).scaled_add(1.0, &outer(&ds, &q));
    gr.mat_mut(ix.loc).scaled_add(1.0, &outer(&dq, g));
    dg += &p.mat(ix.loc).t().dot(&dq);

    let mut dbase = mlp_back(p, gr, ix.op, &op_out, gold.op.index());
    if let Some((j, c, slots, logp)) = &pos {
        let mut ds = logp.mapv(f64::exp);
        ds[*j] -= 1.0;
        let mut dc = Array1::<f64>::zeros(2 * d);
        let ch = &topo.children[loc];
        for (i, q) in slots.iter().enumerate() {
            dc.scaled_add(ds[i], q);
            if i > 0 {
                dh.row_mut(ch[i - 1]).scaled_add(ds[i], &c.slice(s![..d]));
            }
            if i < ch.len() {
                dh.row_mut(ch[i]).scaled_add(ds[i], &c.slice(s![d..]));
            }
        }
        gr.mat_mut(ix.pos).scaled_add(1.0, &outer(&dc, &base));
        dbase += &p.mat(ix.pos).t().dot(&dc);
    }
    let mut dcond = Array1::<f64>::zeros(2 * d + N_OPS);
    if let Some((k, o)) = &kind_out {
        dcond += &mlp_back(p, gr, ix.kind, o, *k);
    }
    if let Some((v, o)) = &value_out {
        dcond += &mlp_back(p, gr, ix.value, o, *v);
    }
    dg += &dbase.slice(s![..d]);
    dg += &dcond.slice(s![..d]);
    let mut row = dh.row_mut(loc);
    row += &dbase.slice(s![d..2 * d]);
    row += &dcond.slice(s![d..2 * d]);

    backprop_embedding(graph, &topo, &emb, p, gr, dh, &dg);
    Ok(loss)
}

/// Pushes gradients w.r.t. the final node states and the graph vector down
/// through the message-passing layers into the embedding tables.
fn backprop_embedding(
    graph: &CodeGraph,
    topo: &Topology,
    emb: &Embedding,
    p: &ModelParams,
    gr: &mut Grads,
    mut dh: Array2<f64>,
    dg: &Array1<f64>,
) {
    let layers = p.config.layers;
    let pool_scale = 1.0 / (layers + 1) as f64;
    let add_pool = |dh: &mut Array2<f64>, l: usize| {
        if dh.nrows() == 0 {
            return;
        }
        for (j, &v) in emb.argmax[l].iter().enumerate() {
            dh[[v, j]] += dg[j] * pool_scale;
        }
    };
    add_pool(&mut dh, layers);
    for l in (0..layers).rev() {
        let h_in = &emb.hs[l];
        let h_out = &emb.hs[l + 1];
        let da = dh * &h_out.mapv(|x| 1.0 - x * x);
        gr.mat_mut(p.ix.self_w[l]).scaled_add(1.0, &da.t().dot(h_in));
        let mut dprev = da.dot(&p.mat(p.ix.self_w[l]));
        for c in 0..CHANNELS {
            let w = p.ix.msg[l][c];
            gr.mat_mut(w).scaled_add(1.0, &da.t().dot(&emb.agg[l][c]));
            let dm = da.dot(&p.mat(w));
            for (v, us) in topo.nbrs[c].iter().enumerate() {
                if us.is_empty() {
                    continue;
                }
                let share = dm.row(v).to_owned() / us.len() as f64;
                for &u in us {
                    dprev.row_mut(u).scaled_add(1.0, &share);
                }
            }
        }
        dh = dprev;
        add_pool(&mut dh, l);
    }
    let ix = &p.ix;
    for (v, node) in graph.nodes.iter().enumerate() {
        gr.mat_mut(ix.kind_emb).row_mut(node.kind_id).scaled_add(1.0, &dh.row(v));
        if let Some(val) = node.value_id {
            gr.mat_mut(ix.value_emb).row_mut(val).scaled_add(1.0, &dh.row(v));
        }
    }
}
