//! The fixed policy/value network family: a shared convolutional feature
//! extractor (row filters then a full-map contraction), one or more dense
//! critic heads, and one or more dense actor heads with softmax outputs.
//!
//! Gradients are hand-written. [`PolicyNet::backward`] consumes seed
//! gradients on the head outputs (d logits, d values) and accumulates exact
//! parameter gradients, which finite-difference checks validate end to end.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agent::ObsMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::tensor::{softmax, Tensor};

pub const OBS_DIM: usize = 8;
/// Filters applied per movement row (1x8 receptive field).
pub const ROW_FEATURES: usize = 128;
/// Filters contracting the full 8-row map (8x1 receptive field).
pub const EMBED_DIM: usize = 256;
/// Hidden width of the dense heads.
pub const HIDDEN_DIM: usize = 64;

/// Dense layer with weights `[out, in]` and one bias per output.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense<S> {
    pub w: Tensor<S>,
    pub b: Tensor<S>,
}

impl<S: Scalar> Dense<S> {
    /// Scaled-uniform fan-in initialization; draws are made in `f64` so every
    /// scalar type sees the same underlying sequence.
    fn init(input: usize, output: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (input as f64).sqrt();
        let mut w = Tensor::zeros(&[output, input]);
        for v in w.data_mut() {
            *v = S::from_f64_lossy(rng.gen_range(-bound..bound));
        }
        let mut b = Tensor::zeros(&[output]);
        for v in b.data_mut() {
            *v = S::from_f64_lossy(rng.gen_range(-bound..bound));
        }
        Dense { w, b }
    }

    fn zeros(input: usize, output: usize) -> Self {
        Dense { w: Tensor::zeros(&[output, input]), b: Tensor::zeros(&[output]) }
    }

    fn forward(&self, x: &[S]) -> Vec<S> {
        let out = self.b.len();
        let inp = x.len();
        let w = self.w.data();
        let mut y = self.b.data().to_vec();
        for (o, yo) in y.iter_mut().enumerate() {
            let row = &w[o * inp..(o + 1) * inp];
            let mut acc = S::zero();
            for (wi, xi) in row.iter().zip(x) {
                acc = acc + *wi * *xi;
            }
            *yo = *yo + acc;
        }
        debug_assert_eq!(y.len(), out);
        y
    }
}

/// Head wiring: how many actor heads (phases), how wide each one is (delta
/// choices), and how many critic heads evaluate the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeadLayout {
    pub actor_heads: usize,
    pub actor_width: usize,
    pub critic_heads: usize,
}

impl HeadLayout {
    pub fn new(actor_heads: usize, actor_width: usize, critic_heads: usize) -> Result<Self> {
        if actor_heads == 0 || actor_width < 2 || critic_heads == 0 {
            return Err(Error::spec(format!(
                "invalid head layout: {actor_heads} actors of width {actor_width}, {critic_heads} critics"
            )));
        }
        Ok(HeadLayout { actor_heads, actor_width, critic_heads })
    }
}

/// All learnable parameters of one agent.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyNet<S: Scalar> {
    layout: HeadLayout,
    row_conv: Dense<S>,
    map_conv: Dense<S>,
    critics: Vec<(Dense<S>, Dense<S>)>,
    actors: Vec<(Dense<S>, Dense<S>, Dense<S>)>,
}

/// Cached activations of one forward pass.
#[derive(Debug, Clone)]
pub struct Forward<S: Scalar> {
    pub input: ObsMatrix<S>,
    row_pre: Vec<S>,
    row_act: Vec<S>,
    map_pre: Vec<S>,
    pub embedding: Vec<S>,
    critic_h_pre: Vec<Vec<S>>,
    critic_h_act: Vec<Vec<S>>,
    pub values: Vec<S>,
    actor_h1_pre: Vec<Vec<S>>,
    actor_h1_act: Vec<Vec<S>>,
    actor_h2_pre: Vec<Vec<S>>,
    actor_h2_act: Vec<Vec<S>>,
    pub logits: Vec<Vec<S>>,
    pub probs: Vec<Vec<S>>,
}

/// Parameter gradients, shaped exactly like [`PolicyNet`].
#[derive(Debug, Clone)]
pub struct Grads<S: Scalar> {
    row_conv: Dense<S>,
    map_conv: Dense<S>,
    critics: Vec<(Dense<S>, Dense<S>)>,
    actors: Vec<(Dense<S>, Dense<S>, Dense<S>)>,
}

fn relu<S: Scalar>(pre: &[S]) -> Vec<S> {
    pre.iter().map(|&v| v.max(S::zero())).collect()
}

impl<S: Scalar> PolicyNet<S> {
    pub fn new(layout: HeadLayout, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let row_conv = Dense::init(OBS_DIM, ROW_FEATURES, &mut rng);
        let map_conv = Dense::init(OBS_DIM * ROW_FEATURES, EMBED_DIM, &mut rng);
        let critics = (0..layout.critic_heads)
            .map(|_| (Dense::init(EMBED_DIM, HIDDEN_DIM, &mut rng), Dense::init(HIDDEN_DIM, 1, &mut rng)))
            .collect();
        let actors = (0..layout.actor_heads)
            .map(|_| {
                (
                    Dense::init(EMBED_DIM, HIDDEN_DIM, &mut rng),
                    Dense::init(HIDDEN_DIM, HIDDEN_DIM, &mut rng),
                    Dense::init(HIDDEN_DIM, layout.actor_width, &mut rng),
                )
            })
            .collect();
        PolicyNet { layout, row_conv, map_conv, critics, actors }
    }

    pub fn layout(&self) -> HeadLayout {
        self.layout
    }

    /// Shared feature extraction followed by every head.
    pub fn forward(&self, input: &ObsMatrix<S>) -> Forward<S> {
        // Row filters: the same 8-input weights applied to each movement row.
        let mut row_pre = Vec::with_capacity(OBS_DIM * ROW_FEATURES);
        for row in input {
            row_pre.extend(self.row_conv.forward(row));
        }
        let row_act = relu(&row_pre);
        let map_pre = self.map_conv.forward(&row_act);
        let embedding = relu(&map_pre);

        let mut critic_h_pre = Vec::with_capacity(self.critics.len());
        let mut critic_h_act = Vec::with_capacity(self.critics.len());
        let mut values = Vec::with_capacity(self.critics.len());
        for (l1, l2) in &self.critics {
            let h_pre = l1.forward(&embedding);
            let h_act = relu(&h_pre);
            values.push(l2.forward(&h_act)[0]);
            critic_h_pre.push(h_pre);
            critic_h_act.push(h_act);
        }

        let n = self.actors.len();
        let mut actor_h1_pre = Vec::with_capacity(n);
        let mut actor_h1_act = Vec::with_capacity(n);
        let mut actor_h2_pre = Vec::with_capacity(n);
        let mut actor_h2_act = Vec::with_capacity(n);
        let mut logits = Vec::with_capacity(n);
        let mut probs = Vec::with_capacity(n);
        for (l1, l2, l3) in &self.actors {
            let h1_pre = l1.forward(&embedding);
            let h1_act = relu(&h1_pre);
            let h2_pre = l2.forward(&h1_act);
            let h2_act = relu(&h2_pre);
            let z = l3.forward(&h2_act);
            probs.push(softmax(&z));
            logits.push(z);
            actor_h1_pre.push(h1_pre);
            actor_h1_act.push(h1_act);
            actor_h2_pre.push(h2_pre);
            actor_h2_act.push(h2_act);
        }

        Forward {
            input: *input,
            row_pre,
            row_act,
            map_pre,
            embedding,
            critic_h_pre,
            critic_h_act,
            values,
            actor_h1_pre,
            actor_h1_act,
            actor_h2_pre,
            actor_h2_act,
            logits,
            probs,
        }
    }

    /// Accumulates parameter gradients for seed gradients on the head
    /// outputs: `d_logits[i][k]` is dLoss/dlogit for actor `i`, `d_values[c]`
    /// is dLoss/dvalue for critic `c`.
    pub fn backward(&self, fwd: &Forward<S>, d_logits: &[Vec<S>], d_values: &[S], grads: &mut Grads<S>) {
        assert_eq!(d_logits.len(), self.actors.len());
        assert_eq!(d_values.len(), self.critics.len());
        let zero = S::zero();
        let emb = &fwd.embedding;
        let mut d_emb = vec![zero; EMBED_DIM];

        for (c, (l1, l2)) in self.critics.iter().enumerate() {
            let dv = d_values[c];
            if dv == zero {
                continue;
            }
            let h_act = &fwd.critic_h_act[c];
            let h_pre = &fwd.critic_h_pre[c];
            let (g1, g2) = &mut grads.critics[c];
            let w2 = l2.w.data();
            let gw2 = g2.w.data_mut();
            for k in 0..HIDDEN_DIM {
                gw2[k] = gw2[k] + dv * h_act[k];
            }
            g2.b.data_mut()[0] = g2.b.data_mut()[0] + dv;
            let gw1 = g1.w.data_mut();
            let gb1 = g1.b.data_mut();
            let w1 = l1.w.data();
            for k in 0..HIDDEN_DIM {
                if h_pre[k] <= zero {
                    continue;
                }
                let dh = dv * w2[k];
                gb1[k] = gb1[k] + dh;
                let row = k * EMBED_DIM;
                for j in 0..EMBED_DIM {
                    gw1[row + j] = gw1[row + j] + dh * emb[j];
                    d_emb[j] = d_emb[j] + w1[row + j] * dh;
                }
            }
        }

        let m = self.layout.actor_width;
        for (i, (l1, l2, l3)) in self.actors.iter().enumerate() {
            let dz = &d_logits[i];
            if dz.iter().all(|&d| d == zero) {
                continue;
            }
            let h1_pre = &fwd.actor_h1_pre[i];
            let h1_act = &fwd.actor_h1_act[i];
            let h2_pre = &fwd.actor_h2_pre[i];
            let h2_act = &fwd.actor_h2_act[i];
            let (g1, g2, g3) = &mut grads.actors[i];

            let mut d_h2 = vec![zero; HIDDEN_DIM];
            {
                let gw3 = g3.w.data_mut();
                let gb3 = g3.b.data_mut();
                let w3 = l3.w.data();
                for o in 0..m {
                    let d = dz[o];
                    if d == zero {
                        continue;
                    }
                    gb3[o] = gb3[o] + d;
                    let row = o * HIDDEN_DIM;
                    for k in 0..HIDDEN_DIM {
                        gw3[row + k] = gw3[row + k] + d * h2_act[k];
                        d_h2[k] = d_h2[k] + w3[row + k] * d;
                    }
                }
            }

            let mut d_h1 = vec![zero; HIDDEN_DIM];
            {
                let gw2 = g2.w.data_mut();
                let gb2 = g2.b.data_mut();
                let w2 = l2.w.data();
                for k in 0..HIDDEN_DIM {
                    if h2_pre[k] <= zero || d_h2[k] == zero {
                        continue;
                    }
                    let d = d_h2[k];
                    gb2[k] = gb2[k] + d;
                    let row = k * HIDDEN_DIM;
                    for j in 0..HIDDEN_DIM {
                        gw2[row + j] = gw2[row + j] + d * h1_act[j];
                        d_h1[j] = d_h1[j] + w2[row + j] * d;
                    }
                }
            }

            let gw1 = g1.w.data_mut();
            let gb1 = g1.b.data_mut();
            let w1 = l1.w.data();
            for k in 0..HIDDEN_DIM {
                if h1_pre[k] <= zero || d_h1[k] == zero {
                    continue;
                }
                let d = d_h1[k];
                gb1[k] = gb1[k] + d;
                let row = k * EMBED_DIM;
                for j in 0..EMBED_DIM {
                    gw1[row + j] = gw1[row + j] + d * emb[j];
                    d_emb[j] = d_emb[j] + w1[row + j] * d;
                }
            }
        }

        // Back through the map contraction.
        let mut d_row_act = vec![zero; OBS_DIM * ROW_FEATURES];
        {
            let gw = grads.map_conv.w.data_mut();
            let gb = grads.map_conv.b.data_mut();
            let w = self.map_conv.w.data();
            let width = OBS_DIM * ROW_FEATURES;
            for o in 0..EMBED_DIM {
                if fwd.map_pre[o] <= zero {
                    continue;
                }
                let d = d_emb[o];
                if d == zero {
                    continue;
                }
                gb[o] = gb[o] + d;
                let row = o * width;
                for j in 0..width {
                    gw[row + j] = gw[row + j] + d * fwd.row_act[j];
                    d_row_act[j] = d_row_act[j] + w[row + j] * d;
                }
            }
        }

        // Back through the shared row filters.
        let gw = grads.row_conv.w.data_mut();
        let gb = grads.row_conv.b.data_mut();
        for r in 0..OBS_DIM {
            let input_row = &fwd.input[r];
            for k in 0..ROW_FEATURES {
                let idx = r * ROW_FEATURES + k;
                if fwd.row_pre[idx] <= zero {
                    continue;
                }
                let d = d_row_act[idx];
                if d == zero {
                    continue;
                }
                gb[k] = gb[k] + d;
                let row = k * OBS_DIM;
                for j in 0..OBS_DIM {
                    gw[row + j] = gw[row + j] + d * input_row[j];
                }
            }
        }
    }

    /// Parameter tensors in canonical order (shared extractor, critics,
    /// actors). [`Grads::tensors`] follows the same order.
    pub fn tensors(&self) -> Vec<&Tensor<S>> {
        let mut out = vec![&self.row_conv.w, &self.row_conv.b, &self.map_conv.w, &self.map_conv.b];
        for (l1, l2) in &self.critics {
            out.extend([&l1.w, &l1.b, &l2.w, &l2.b]);
        }
        for (l1, l2, l3) in &self.actors {
            out.extend([&l1.w, &l1.b, &l2.w, &l2.b, &l3.w, &l3.b]);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<S>> {
        let mut out = vec![&mut self.row_conv.w, &mut self.row_conv.b, &mut self.map_conv.w, &mut self.map_conv.b];
        for (l1, l2) in &mut self.critics {
            out.extend([&mut l1.w, &mut l1.b, &mut l2.w, &mut l2.b]);
        }
        for (l1, l2, l3) in &mut self.actors {
            out.extend([&mut l1.w, &mut l1.b, &mut l2.w, &mut l2.b, &mut l3.w, &mut l3.b]);
        }
        out
    }

    pub fn tensor_names(&self) -> Vec<String> {
        let mut out = vec![
            "row_conv.w".to_string(),
            "row_conv.b".to_string(),
            "map_conv.w".to_string(),
            "map_conv.b".to_string(),
        ];
        for c in 0..self.critics.len() {
            for part in ["l1.w", "l1.b", "l2.w", "l2.b"] {
                out.push(format!("critic{c}.{part}"));
            }
        }
        for a in 0..self.actors.len() {
            for part in ["l1.w", "l1.b", "l2.w", "l2.b", "l3.w", "l3.b"] {
                out.push(format!("actor{a}.{part}"));
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

impl<S: Scalar> Grads<S> {
    pub fn zeros_like(net: &PolicyNet<S>) -> Self {
        let m = net.layout.actor_width;
        Grads {
            row_conv: Dense::zeros(OBS_DIM, ROW_FEATURES),
            map_conv: Dense::zeros(OBS_DIM * ROW_FEATURES, EMBED_DIM),
            critics: (0..net.critics.len())
                .map(|_| (Dense::zeros(EMBED_DIM, HIDDEN_DIM), Dense::zeros(HIDDEN_DIM, 1)))
                .collect(),
            actors: (0..net.actors.len())
                .map(|_| {
                    (
                        Dense::zeros(EMBED_DIM, HIDDEN_DIM),
                        Dense::zeros(HIDDEN_DIM, HIDDEN_DIM),
                        Dense::zeros(HIDDEN_DIM, m),
                    )
                })
                .collect(),
        }
    }

    pub fn tensors(&self) -> Vec<&Tensor<S>> {
        let mut out = vec![&self.row_conv.w, &self.row_conv.b, &self.map_conv.w, &self.map_conv.b];
        for (l1, l2) in &self.critics {
            out.extend([&l1.w, &l1.b, &l2.w, &l2.b]);
        }
        for (l1, l2, l3) in &self.actors {
            out.extend([&l1.w, &l1.b, &l2.w, &l2.b, &l3.w, &l3.b]);
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<S>> {
        let mut out = vec![&mut self.row_conv.w, &mut self.row_conv.b, &mut self.map_conv.w, &mut self.map_conv.b];
        for (l1, l2) in &mut self.critics {
            out.extend([&mut l1.w, &mut l1.b, &mut l2.w, &mut l2.b]);
        }
        for (l1, l2, l3) in &mut self.actors {
            out.extend([&mut l1.w, &mut l1.b, &mut l2.w, &mut l2.b, &mut l3.w, &mut l3.b]);
        }
        out
    }

    pub fn reset(&mut self) {
        for t in self.tensors_mut() {
            t.fill(S::zero());
        }
    }

    pub fn scale(&mut self, factor: S) {
        for t in self.tensors_mut() {
            for v in t.data_mut() {
                *v = *v * factor;
            }
        }
    }
}

/// Draws an index from a categorical distribution by inverse CDF.
pub fn sample_categorical<S: Scalar, R: Rng>(probs: &[S], rng: &mut R) -> usize {
    let u = rng.gen::<f64>();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p.to_f64_lossy();
        if u < acc {
            return i;
        }
    }
    probs.len() - 1
}

pub fn argmax<S: Scalar>(values: &[S]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
