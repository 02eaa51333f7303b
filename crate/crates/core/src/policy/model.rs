use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::{row_softmax, row_xent, Matrix};
use super::tape::{Tape, Var};
use super::vocab::{Vocabulary, BOS, EOS, PAD};
use crate::exec::{Executor, Serial};
use crate::fingerprint::Fnv;

/// Sequences per gradient chunk. Chunks are reduced in order, so gradients
/// depend on this constant but never on the executor.
const CHUNK: usize = 32;

/// Generated tokens (EOS included) allowed per sample.
pub const DEFAULT_MAX_LEN: usize = 100;

const BLOCKS_PER_LAYER: usize = 9;
const GATE_NAMES: [&str; BLOCKS_PER_LAYER] = ["w_z", "w_r", "w_h", "u_z", "u_r", "u_h", "b_z", "b_r", "b_h"];

/// Embedding width, hidden width and number of stacked GRU layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hyper {
    pub embed: usize,
    pub hidden: usize,
    pub layers: usize,
}

impl Hyper {
    pub const DESK: Hyper = Hyper { embed: 48, hidden: 128, layers: 1 };
    pub const FULL: Hyper = Hyper { embed: 128, hidden: 512, layers: 3 };
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelError {
    InvalidSequence { reason: &'static str },
    BadShape { block: String, expected: (usize, usize), found: (usize, usize) },
    BlockCount { expected: usize, found: usize },
    NonFinite { block: String },
    EmptyHyper,
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::InvalidSequence { reason } => write!(f, "invalid token sequence: {reason}"),
            ModelError::BadShape { block, expected, found } => {
                write!(f, "parameter {block} has shape {found:?}, expected {expected:?}")
            }
            ModelError::BlockCount { expected, found } => {
                write!(f, "expected {expected} parameter blocks, found {found}")
            }
            ModelError::NonFinite { block } => write!(f, "parameter {block} holds a non-finite value"),
            ModelError::EmptyHyper => f.write_str("embed, hidden and layers must all be positive"),
        }
    }
}

impl core::error::Error for ModelError {}

/// A sampled sequence. `tokens` starts with BOS and ends with EOS when
/// `complete`; `log_prob` is the model's log-probability of those tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub tokens: Vec<u32>,
    pub log_prob: f64,
    pub complete: bool,
}

/// Embedding, stacked GRU layers and a linear softmax head.
#[derive(Debug, Clone, PartialEq)]
pub struct GruLM {
    hyper: Hyper,
    vocab: Vocabulary,
    params: Vec<Matrix>,
}

struct Bound {
    embed: Var,
    layers: Vec<[Var; BLOCKS_PER_LAYER]>,
    out_w: Var,
    out_b: Var,
}

impl GruLM {
    /// Fresh model with every weight uniform in ±1/√hidden.
    pub fn new(vocab: Vocabulary, hyper: Hyper, seed: u64) -> Result<Self, ModelError> {
        if hyper.embed == 0 || hyper.hidden == 0 || hyper.layers == 0 {
            return Err(ModelError::EmptyHyper);
        }
        let bound = 1.0 / libm::sqrt(hyper.hidden as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = shapes(&hyper, vocab.len())
            .into_iter()
            .map(|(r, c)| {
                let data = (0..r * c).map(|_| (2.0 * rng.random::<f64>() - 1.0) * bound).collect();
                Matrix::from_vec(r, c, data)
            })
            .collect();
        Ok(GruLM { hyper, vocab, params })
    }

    /// Reassemble a model, checking block count, shapes and finiteness.
    pub fn from_parts(vocab: Vocabulary, hyper: Hyper, params: Vec<Matrix>) -> Result<Self, ModelError> {
        if hyper.embed == 0 || hyper.hidden == 0 || hyper.layers == 0 {
            return Err(ModelError::EmptyHyper);
        }
        let expected = shapes(&hyper, vocab.len());
        if expected.len() != params.len() {
            return Err(ModelError::BlockCount { expected: expected.len(), found: params.len() });
        }
        let names = param_names(&hyper);
        for ((m, &(r, c)), name) in params.iter().zip(&expected).zip(&names) {
            if (m.rows(), m.cols()) != (r, c) {
                return Err(ModelError::BadShape { block: name.clone(), expected: (r, c), found: (m.rows(), m.cols()) });
            }
            if m.data().iter().any(|x| !x.is_finite()) {
                return Err(ModelError::NonFinite { block: name.clone() });
            }
        }
        Ok(GruLM { hyper, vocab, params })
    }

    pub fn hyper(&self) -> Hyper {
        self.hyper
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn params(&self) -> &[Matrix] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Matrix] {
        &mut self.params
    }

    /// Block names aligned with [`GruLM::params`].
    pub fn param_names(&self) -> Vec<String> {
        param_names(&self.hyper)
    }

    /// 16 hex digits identifying hyperparameters, vocabulary and weights.
    pub fn digest(&self) -> String {
        let mut h = Fnv::new();
        h.u64(self.hyper.embed as u64).u64(self.hyper.hidden as u64).u64(self.hyper.layers as u64);
        h.u64(self.vocab.len() as u64);
        for t in self.vocab.tokens() {
            h.u64(t.len() as u64).bytes(t.as_bytes());
        }
        for m in &self.params {
            h.u64(m.rows() as u64).u64(m.cols() as u64);
            for x in m.data() {
                h.u64(x.to_bits());
            }
        }
        format!("{:016x}", h.finish())
    }

    /// Check that `seq` is BOS followed by ordinary tokens and optionally a
    /// final EOS.
    pub fn validate(&self, seq: &[u32]) -> Result<(), ModelError> {
        let bad = |reason| Err(ModelError::InvalidSequence { reason });
        if seq.len() < 2 {
            return bad("fewer than two tokens");
        }
        if seq[0] != BOS {
            return bad("must start with BOS");
        }
        for (i, &t) in seq.iter().enumerate().skip(1) {
            if t as usize >= self.vocab.len() {
                return bad("token id outside the vocabulary");
            }
            if t == PAD || t == BOS {
                return bad("PAD or BOS after the first position");
            }
            if t == EOS && i + 1 != seq.len() {
                return bad("EOS before the end");
            }
        }
        Ok(())
    }

    /// Negative log-likelihood of every token after BOS.
    pub fn nll(&self, seq: &[u32]) -> Result<f64, ModelError> {
        self.validate(seq)?;
        Ok(self.nll_batch(&[seq])[0])
    }

    /// NLL of each sequence. Sequences must already be valid.
    pub fn nll_batch(&self, seqs: &[&[u32]]) -> Vec<f64> {
        self.nll_batch_with(&Serial, seqs)
    }

    pub fn nll_batch_with<E: Executor>(&self, exec: &E, seqs: &[&[u32]]) -> Vec<f64> {
        let chunks = exec.map(seqs.len().div_ceil(CHUNK), |c| {
            let part = &seqs[c * CHUNK..((c + 1) * CHUNK).min(seqs.len())];
            let mut tape = Tape::new();
            let xents = self.forward(&mut tape, part);
            row_sums(&tape, &xents, part.len())
        });
        chunks.into_iter().flatten().collect()
    }

    /// NLL of each sequence plus the gradient of `Σ_b w_b · nll_b`, where
    /// `w_b = weight(b, nll_b)`.
    pub fn nll_and_grad<W>(&self, seqs: &[&[u32]], weight: W) -> (Vec<f64>, Vec<Matrix>)
    where
        W: Fn(usize, f64) -> f64 + Sync + Send,
    {
        self.nll_and_grad_with(&Serial, seqs, weight)
    }

    pub fn nll_and_grad_with<E, W>(&self, exec: &E, seqs: &[&[u32]], weight: W) -> (Vec<f64>, Vec<Matrix>)
    where
        E: Executor,
        W: Fn(usize, f64) -> f64 + Sync + Send,
    {
        let chunks = exec.map(seqs.len().div_ceil(CHUNK), |c| {
            let start = c * CHUNK;
            let part = &seqs[start..(start + CHUNK).min(seqs.len())];
            let mut tape = Tape::new();
            let bound = self.bind(&mut tape);
            let xents = self.run(&mut tape, &bound, part);
            let nlls = row_sums(&tape, &xents, part.len());
            let w: Vec<f64> = nlls.iter().enumerate().map(|(i, &n)| weight(start + i, n)).collect();
            let seed = Matrix::from_vec(part.len(), 1, w);
            let seeds: Vec<(Var, Matrix)> = xents.iter().map(|&x| (x, seed.clone())).collect();
            let grads = tape.backward(&seeds);
            let blocks = self.param_vars(&bound);
            let g: Vec<Matrix> = blocks
                .iter()
                .zip(&self.params)
                .map(|(v, p)| grads[v.index()].clone().unwrap_or_else(|| Matrix::zeros(p.rows(), p.cols())))
                .collect();
            (nlls, g)
        });
        let mut nlls = Vec::with_capacity(seqs.len());
        let mut total: Option<Vec<Matrix>> = None;
        for (n, g) in chunks {
            nlls.extend(n);
            match &mut total {
                None => total = Some(g),
                Some(t) => t.iter_mut().zip(&g).for_each(|(a, b)| a.add_assign(b)),
            }
        }
        let total =
            total.unwrap_or_else(|| self.params.iter().map(|p| Matrix::zeros(p.rows(), p.cols())).collect());
        (nlls, total)
    }

    /// Ancestral sample at temperature 1. PAD and BOS are never drawn.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, max_len: usize) -> Sample {
        self.sample_batch(1, rng, max_len).pop().expect("one sample")
    }

    /// `n` samples drawn in lockstep; random draws go row by row each step.
    pub fn sample_batch<R: Rng + ?Sized>(&self, n: usize, rng: &mut R, max_len: usize) -> Vec<Sample> {
        let mut out: Vec<Sample> =
            (0..n).map(|_| Sample { tokens: vec![BOS], log_prob: 0.0, complete: false }).collect();
        let mut hidden: Vec<Matrix> = (0..self.hyper.layers).map(|_| Matrix::zeros(n, self.hyper.hidden)).collect();
        for _ in 0..max_len {
            if out.iter().all(|s| s.complete) {
                break;
            }
            let ids: Vec<u32> =
                out.iter().map(|s| if s.complete { PAD } else { *s.tokens.last().unwrap() }).collect();
            let mut tape = Tape::new();
            let bound = self.bind(&mut tape);
            let hs: Vec<Var> = hidden.drain(..).map(|h| tape.input(h)).collect();
            let (hs, logits) = self.step(&mut tape, &bound, ids, hs);
            let logits = tape.value(logits);
            for (r, s) in out.iter_mut().enumerate() {
                if s.complete {
                    continue;
                }
                let row = logits.row(r);
                let tok = draw(&row_softmax(row), rng.random::<f64>());
                s.log_prob -= row_xent(row, tok as usize);
                s.tokens.push(tok);
                s.complete = tok == EOS;
            }
            hidden = hs.iter().map(|&h| tape.value(h).clone()).collect();
        }
        out
    }

    fn bind<'a>(&'a self, tape: &mut Tape<'a>) -> Bound {
        let mut it = self.params.iter();
        let embed = tape.param(it.next().unwrap());
        let layers = (0..self.hyper.layers)
            .map(|_| core::array::from_fn(|_| tape.param(it.next().unwrap())))
            .collect();
        let out_w = tape.param(it.next().unwrap());
        let out_b = tape.param(it.next().unwrap());
        Bound { embed, layers, out_w, out_b }
    }

    fn param_vars(&self, b: &Bound) -> Vec<Var> {
        let mut v = vec![b.embed];
        for l in &b.layers {
            v.extend_from_slice(l);
        }
        v.push(b.out_w);
        v.push(b.out_b);
        v
    }

    /// One GRU step for every row: returns new hidden states and logits.
    fn step(&self, tape: &mut Tape<'_>, p: &Bound, ids: Vec<u32>, hidden: Vec<Var>) -> (Vec<Var>, Var) {
        let mut x = tape.gather(p.embed, ids);
        let mut next = Vec::with_capacity(hidden.len());
        for (l, &h) in p.layers.iter().zip(&hidden) {
            let [w_z, w_r, w_h, u_z, u_r, u_h, b_z, b_r, b_h] = *l;
            let z = gate(tape, x, w_z, h, u_z, b_z);
            let z = tape.sigmoid(z);
            let r = gate(tape, x, w_r, h, u_r, b_r);
            let r = tape.sigmoid(r);
            let rh = tape.mul(r, h);
            let c = gate(tape, x, w_h, rh, u_h, b_h);
            let c = tape.tanh(c);
            // (1 − z)∘h + z∘c, written as h + z∘(c − h)
            let d = tape.sub(c, h);
            let zd = tape.mul(z, d);
            let h2 = tape.add(h, zd);
            next.push(h2);
            x = h2;
        }
        let o = tape.matmul(x, p.out_w);
        (next, tape.add_row(o, p.out_b))
    }

    fn run(&self, tape: &mut Tape<'_>, p: &Bound, seqs: &[&[u32]]) -> Vec<Var> {
        let b = seqs.len();
        let steps = seqs.iter().map(|s| s.len().saturating_sub(1)).max().unwrap_or(0);
        let mut hidden: Vec<Var> =
            (0..self.hyper.layers).map(|_| tape.input(Matrix::zeros(b, self.hyper.hidden))).collect();
        let mut xents = Vec::with_capacity(steps);
        for t in 0..steps {
            let ids = seqs.iter().map(|s| if t + 1 < s.len() { s[t] } else { PAD }).collect();
            let targets = seqs.iter().map(|s| s.get(t + 1).copied()).collect();
            let (h, logits) = self.step(tape, p, ids, hidden);
            hidden = h;
            xents.push(tape.softmax_xent(logits, targets));
        }
        xents
    }

    fn forward<'a>(&'a self, tape: &mut Tape<'a>, seqs: &[&[u32]]) -> Vec<Var> {
        let bound = self.bind(tape);
        self.run(tape, &bound, seqs)
    }
}

fn gate(tape: &mut Tape<'_>, x: Var, w: Var, h: Var, u: Var, b: Var) -> Var {
    let xw = tape.matmul(x, w);
    let hu = tape.matmul(h, u);
    let s = tape.add(xw, hu);
    tape.add_row(s, b)
}

/// Per-row sums over steps, accumulated in step order.
fn row_sums(tape: &Tape<'_>, xents: &[Var], rows: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows];
    for &x in xents {
        for (o, &v) in out.iter_mut().zip(tape.value(x).data()) {
            *o += v;
        }
    }
    out
}

/// Inverse-CDF draw over tokens other than PAD and BOS.
fn draw(probs: &[f64], u: f64) -> u32 {
    let allowed = &probs[EOS as usize..];
    let total: f64 = allowed.iter().sum();
    let mut target = u * total;
    let mut last = EOS;
    for (i, &p) in allowed.iter().enumerate() {
        if p > 0.0 {
            last = EOS + i as u32;
            if target < p {
                return last;
            }
            target -= p;
        }
    }
    last
}

fn shapes(h: &Hyper, v: usize) -> Vec<(usize, usize)> {
    let mut s = vec![(v, h.embed)];
    for l in 0..h.layers {
        let d = if l == 0 { h.embed } else { h.hidden };
        s.extend([(d, h.hidden); 3]);
        s.extend([(h.hidden, h.hidden); 3]);
        s.extend([(1, h.hidden); 3]);
    }
    s.push((h.hidden, v));
    s.push((1, v));
    s
}

fn param_names(h: &Hyper) -> Vec<String> {
    let mut names = vec![String::from("embed")];
    for l in 0..h.layers {
        names.extend(GATE_NAMES.iter().map(|g| format!("l{l}.{g}")));
    }
    names.push(String::from("out.w"));
    names.push(String::from("out.b"));
    names
}
