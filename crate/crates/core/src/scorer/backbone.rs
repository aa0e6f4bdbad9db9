//! Desk-scale reference feature extractor trained from scratch.
//!
//! Token embeddings feed one self-attention block whose output is read at
//! the final (EOS) position:
//!
//! ```text
//! e   = x[n-1]                       EOS embedding, the query position
//! a_t = (Wq e) . (Wk x_t) / sqrt(d)
//! c   = Wv sum_t softmax(a)_t x_t
//! r   = e + Wo c
//! h   = r + W2 tanh(W1 r + b1) + b2
//! ```
//!
//! Only the EOS row of the block feeds the readout, so the keys and values
//! are folded into `Wk^T q` and `Wv (sum alpha x)` and each statement costs
//! O(d^2 + n d).

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{FeatureExtractor, ScorerError};
use crate::seed;
use crate::tokenizer::TokenId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BackboneConfig {
    pub vocab_size: usize,
    pub dim: usize,
    pub ffn_dim: usize,
}

impl BackboneConfig {
    pub fn param_count(&self) -> usize {
        let Layout { total, .. } = Layout::new(self);
        total
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    emb: usize,
    wq: usize,
    wk: usize,
    wv: usize,
    wo: usize,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    total: usize,
}

impl Layout {
    fn new(c: &BackboneConfig) -> Self {
        let (v, d, f) = (c.vocab_size, c.dim, c.ffn_dim);
        let emb = 0;
        let wq = emb + v * d;
        let wk = wq + d * d;
        let wv = wk + d * d;
        let wo = wv + d * d;
        let w1 = wo + d * d;
        let b1 = w1 + f * d;
        let w2 = b1 + f;
        let b2 = w2 + d * f;
        let total = b2 + d;
        Self {
            emb,
            wq,
            wk,
            wv,
            wo,
            w1,
            b1,
            w2,
            b2,
            total,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceBackbone {
    config: BackboneConfig,
    layout: Layout,
    params: Vec<f64>,
}

/// Intermediate values kept from the forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct BackboneTape {
    tokens: Vec<TokenId>,
    q: Vec<f64>,
    u: Vec<f64>,
    alpha: Vec<f64>,
    xbar: Vec<f64>,
    c: Vec<f64>,
    r: Vec<f64>,
    m: Vec<f64>,
}

/// y = W x for row-major `W` (rows x cols).
fn matvec(w: &[f64], x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    debug_assert_eq!(w.len(), rows * cols);
    (0..rows)
        .map(|i| w[i * cols..(i + 1) * cols].iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

/// y = W^T x for row-major `W` (rows x cols).
fn matvec_t(w: &[f64], x: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut y = vec![0.0; cols];
    for i in 0..rows {
        let xi = x[i];
        if xi == 0.0 {
            continue;
        }
        for (yj, wij) in y.iter_mut().zip(&w[i * cols..(i + 1) * cols]) {
            *yj += wij * xi;
        }
    }
    y
}

/// G += a b^T for row-major `G` (a.len() x b.len()).
fn outer_acc(g: &mut [f64], a: &[f64], b: &[f64]) {
    let cols = b.len();
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (gij, bj) in g[i * cols..(i + 1) * cols].iter_mut().zip(b) {
            *gij += ai * bj;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl ReferenceBackbone {
    /// Uniform initialization: embeddings in `[-1, 1]`, matrices with the
    /// Glorot bound, biases zero.
    pub fn new(config: BackboneConfig, seed: u64) -> Self {
        let layout = Layout::new(&config);
        let mut params = vec![0.0; layout.total];
        let mut rng = seed::rng_for(seed, "backbone:init");
        let (d, f) = (config.dim, config.ffn_dim);
        let mut fill = |range: std::ops::Range<usize>, bound: f64| {
            for p in &mut params[range] {
                *p = rng.gen_range(-bound..bound);
            }
        };
        fill(layout.emb..layout.wq, 1.0);
        let square = (6.0 / (2 * d) as f64).sqrt();
        fill(layout.wq..layout.w1, square);
        let rect = (6.0 / (d + f) as f64).sqrt();
        fill(layout.w1..layout.b1, rect);
        fill(layout.w2..layout.b2, rect);
        Self { config, layout, params }
    }

    pub fn from_params(config: BackboneConfig, params: Vec<f64>) -> Result<Self, ScorerError> {
        let layout = Layout::new(&config);
        if params.len() != layout.total {
            return Err(ScorerError::ParameterCount {
                expected: layout.total,
                got: params.len(),
            });
        }
        Ok(Self { config, layout, params })
    }

    pub fn config(&self) -> BackboneConfig {
        self.config
    }

    fn slice(&self, start: usize, len: usize) -> &[f64] {
        &self.params[start..start + len]
    }

    fn embedding(&self, token: TokenId) -> &[f64] {
        let d = self.config.dim;
        // Out-of-range ids read the UNK row.
        let t = if (token as usize) < self.config.vocab_size {
            token as usize
        } else {
            crate::tokenizer::UNK as usize
        };
        self.slice(self.layout.emb + t * d, d)
    }
}

impl FeatureExtractor for ReferenceBackbone {
    type Tape = BackboneTape;

    fn dim(&self) -> usize {
        self.config.dim
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward(&self, tokens: &[TokenId]) -> Result<(Vec<f64>, BackboneTape), ScorerError> {
        let (d, f) = (self.config.dim, self.config.ffn_dim);
        let l = self.layout;
        let n = tokens.len();
        if n == 0 {
            return Err(ScorerError::MissingEos);
        }
        let e = self.embedding(tokens[n - 1]);
        let q = matvec(self.slice(l.wq, d * d), e, d, d);
        let u = matvec_t(self.slice(l.wk, d * d), &q, d, d);
        let scale = 1.0 / (d as f64).sqrt();
        let scores: Vec<f64> = tokens.iter().map(|&t| dot(&u, self.embedding(t)) * scale).collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        let alpha: Vec<f64> = exps.iter().map(|e| e / z).collect();
        let mut xbar = vec![0.0; d];
        for (&t, &a) in tokens.iter().zip(&alpha) {
            for (xb, x) in xbar.iter_mut().zip(self.embedding(t)) {
                *xb += a * x;
            }
        }
        let c = matvec(self.slice(l.wv, d * d), &xbar, d, d);
        let o = matvec(self.slice(l.wo, d * d), &c, d, d);
        let r: Vec<f64> = e.iter().zip(&o).map(|(a, b)| a + b).collect();
        let mut p = matvec(self.slice(l.w1, f * d), &r, f, d);
        for (pi, bi) in p.iter_mut().zip(self.slice(l.b1, f)) {
            *pi += bi;
        }
        let m: Vec<f64> = p.iter().map(|x| x.tanh()).collect();
        let ffn = matvec(self.slice(l.w2, d * f), &m, d, f);
        let h: Vec<f64> = r
            .iter()
            .zip(&ffn)
            .zip(self.slice(l.b2, d))
            .map(|((a, b), c)| a + b + c)
            .collect();
        let tape = BackboneTape {
            tokens: tokens.to_vec(),
            q,
            u,
            alpha,
            xbar,
            c,
            r,
            m,
        };
        Ok((h, tape))
    }

    fn backward(&self, tape: &BackboneTape, grad_h: &[f64], grads: &mut [f64]) {
        let (d, f) = (self.config.dim, self.config.ffn_dim);
        let l = self.layout;
        let n = tape.tokens.len();
        let eos = tape.tokens[n - 1];
        let e = self.embedding(eos);

        // h = r + W2 m + b2
        for (g, gh) in grads[l.b2..l.b2 + d].iter_mut().zip(grad_h) {
            *g += gh;
        }
        outer_acc(&mut grads[l.w2..l.w2 + d * f], grad_h, &tape.m);
        let gm = matvec_t(self.slice(l.w2, d * f), grad_h, d, f);
        // m = tanh(W1 r + b1)
        let gp: Vec<f64> = gm.iter().zip(&tape.m).map(|(g, m)| g * (1.0 - m * m)).collect();
        for (g, gpi) in grads[l.b1..l.b1 + f].iter_mut().zip(&gp) {
            *g += gpi;
        }
        outer_acc(&mut grads[l.w1..l.w1 + f * d], &gp, &tape.r);
        let mut gr = matvec_t(self.slice(l.w1, f * d), &gp, f, d);
        for (a, b) in gr.iter_mut().zip(grad_h) {
            *a += b;
        }
        // r = e + Wo c
        let mut ge = gr.clone();
        outer_acc(&mut grads[l.wo..l.wo + d * d], &gr, &tape.c);
        let gc = matvec_t(self.slice(l.wo, d * d), &gr, d, d);
        // c = Wv xbar
        outer_acc(&mut grads[l.wv..l.wv + d * d], &gc, &tape.xbar);
        let gxbar = matvec_t(self.slice(l.wv, d * d), &gc, d, d);
        // xbar = sum alpha_t x_t, alpha = softmax(u . x_t / sqrt(d))
        let scale = 1.0 / (d as f64).sqrt();
        let galpha: Vec<f64> = tape.tokens.iter().map(|&t| dot(&gxbar, self.embedding(t))).collect();
        let mean: f64 = galpha.iter().zip(&tape.alpha).map(|(g, a)| g * a).sum();
        let ga: Vec<f64> = galpha.iter().zip(&tape.alpha).map(|(g, a)| a * (g - mean)).collect();
        let mut gu = vec![0.0; d];
        for (&t, (&a, &gat)) in tape.tokens.iter().zip(tape.alpha.iter().zip(&ga)) {
            let x = self.embedding(t);
            let row = l.emb + self.row_index(t) * d;
            for k in 0..d {
                gu[k] += gat * scale * x[k];
                grads[row + k] += a * gxbar[k] + gat * scale * tape.u[k];
            }
        }
        // u = Wk^T q
        outer_acc(&mut grads[l.wk..l.wk + d * d], &tape.q, &gu);
        let gq = matvec(self.slice(l.wk, d * d), &gu, d, d);
        // q = Wq e
        outer_acc(&mut grads[l.wq..l.wq + d * d], &gq, e);
        let ge_q = matvec_t(self.slice(l.wq, d * d), &gq, d, d);
        for (a, b) in ge.iter_mut().zip(&ge_q) {
            *a += b;
        }
        let row = l.emb + self.row_index(eos) * d;
        for k in 0..d {
            grads[row + k] += ge[k];
        }
    }
}

impl ReferenceBackbone {
    fn row_index(&self, token: TokenId) -> usize {
        if (token as usize) < self.config.vocab_size {
            token as usize
        } else {
            crate::tokenizer::UNK as usize
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ReferenceBackbone {
        ReferenceBackbone::new(
            BackboneConfig {
                vocab_size: 7,
                dim: 5,
                ffn_dim: 4,
            },
            3,
        )
    }

    #[test]
    fn layout_counts() {
        let c = BackboneConfig {
            vocab_size: 10,
            dim: 6,
            ffn_dim: 6,
        };
        assert_eq!(c.param_count(), 60 + 4 * 36 + 36 + 6 + 36 + 6);
    }

    #[test]
    fn output_has_configured_dim() {
        let b = tiny();
        for n in 1..10 {
            let tokens: Vec<TokenId> = (0..n).map(|i| (i % 7) as TokenId).rev().collect();
            assert_eq!(b.forward(&tokens).unwrap().0.len(), 5);
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let b = tiny();
        let tokens = [3, 4, 2, 5, 3, 0];
        let weights = [0.3, -1.2, 0.7, 0.1, -0.4];
        let objective = |bb: &ReferenceBackbone| dot(&bb.forward(&tokens).unwrap().0, &weights);
        let (_, tape) = b.forward(&tokens).unwrap();
        let mut grads = vec![0.0; b.params.len()];
        b.backward(&tape, &weights, &mut grads);
        let step = 1e-5;
        for i in 0..b.params.len() {
            let mut plus = b.clone();
            plus.params[i] += step;
            let mut minus = b.clone();
            minus.params[i] -= step;
            let numeric = (objective(&plus) - objective(&minus)) / (2.0 * step);
            let err = (numeric - grads[i]).abs() / numeric.abs().max(grads[i].abs()).max(1e-6);
            assert!(err < 1e-6, "param {i}: analytic {} numeric {numeric}", grads[i]);
        }
    }
}
