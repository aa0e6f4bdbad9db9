//! Training losses over a batch: class-balanced binary cross-entropy,
//! within-group multi-class cross-entropy, supervised contrastive loss, and
//! their weighted sum.
//!
//! All per-statement inputs are aligned with [`Batch::flat`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batcher::Batch;
use crate::types::GroupKind;

#[derive(Debug, Error, PartialEq)]
pub enum ObjectiveError {
    /// A score is NaN or outside `[0, 1]`, or a loss came out non-finite.
    #[error("NonFiniteLoss: {0}")]
    NonFiniteLoss(String),
    /// Cosine similarity is undefined for a zero representation.
    #[error("ZeroVector: representation {index} has zero norm")]
    ZeroVector { index: usize },
    #[error("expected {expected} values aligned with the batch, got {got}")]
    Misaligned { expected: usize, got: usize },
    #[error("invalid loss weights: {0}")]
    InvalidWeights(String),
}

/// Lower and upper clamp applied to scores inside the binary log.
pub const SCORE_FLOOR: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Contrastive temperature.
    pub tau: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 1.0,
            gamma: 0.1,
            tau: 0.05,
        }
    }
}

impl LossWeights {
    pub fn check(&self) -> Result<(), ObjectiveError> {
        let ok = |w: f64| w.is_finite() && w >= 0.0;
        if !(ok(self.alpha) && ok(self.beta) && ok(self.gamma)) {
            return Err(ObjectiveError::InvalidWeights(format!(
                "alpha, beta, gamma must be finite and >= 0 (got {}, {}, {})",
                self.alpha, self.beta, self.gamma
            )));
        }
        if !(self.tau.is_finite() && self.tau > 0.0) {
            return Err(ObjectiveError::InvalidWeights(format!("tau must be > 0 (got {})", self.tau)));
        }
        Ok(())
    }
}

/// Value of one loss term and how many groups or anchors it averaged over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub value: f64,
    pub contributors: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub l_bin: f64,
    pub l_mc: f64,
    pub l_ctr: f64,
    pub total: f64,
    /// Multiple-choice groups behind `l_mc`.
    pub mc_groups: usize,
    /// Anchors with a non-empty positive set behind `l_ctr`.
    pub ctr_anchors: usize,
}

/// Gradient of the combined loss with respect to logits and representations.
#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub logits: Vec<f64>,
    pub representations: Vec<Vec<f64>>,
}

fn aligned(batch: &Batch, got: usize) -> Result<(), ObjectiveError> {
    if got != batch.len() {
        return Err(ObjectiveError::Misaligned {
            expected: batch.len(),
            got,
        });
    }
    Ok(())
}

fn finite(value: f64, what: &str) -> Result<f64, ObjectiveError> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(ObjectiveError::NonFiniteLoss(format!("{what} evaluated to {value}")))
    }
}

/// Per-statement weight `1 / (B_G * |same label in group|)`.
fn binary_weights(batch: &Batch) -> Vec<f64> {
    let b_g = batch.groups.len() as f64;
    let mut w = vec![0.0; batch.len()];
    for range in batch.group_ranges() {
        let n_true = batch.labels[range.clone()].iter().filter(|&&y| y).count() as f64;
        let n_false = range.len() as f64 - n_true;
        for i in range {
            w[i] = 1.0 / (b_g * if batch.labels[i] { n_true } else { n_false });
        }
    }
    w
}

fn binary_value(batch: &Batch, scores: &[f64], weights: &[f64]) -> Result<f64, ObjectiveError> {
    let mut total = 0.0;
    for (i, &s) in scores.iter().enumerate() {
        if !(0.0..=1.0).contains(&s) {
            return Err(ObjectiveError::NonFiniteLoss(format!("score {i} is {s}, outside [0, 1]")));
        }
        let s = s.clamp(SCORE_FLOOR, 1.0 - SCORE_FLOOR);
        let ce = if batch.labels[i] { -s.ln() } else { -(1.0 - s).ln() };
        total += weights[i] * ce;
    }
    finite(total, "binary loss")
}

/// Class-balanced binary cross-entropy.
///
/// Within each group the true and false statements are averaged separately
/// and the two means summed; group values are averaged over the batch's
/// groups. Scores are clamped to `[1e-7, 1 - 1e-7]` inside the log.
pub fn binary_loss(batch: &Batch, scores: &[f64]) -> Result<f64, ObjectiveError> {
    aligned(batch, scores.len())?;
    binary_value(batch, scores, &binary_weights(batch))
}

fn multiple_choice_ranges(batch: &Batch) -> Vec<(std::ops::Range<usize>, usize)> {
    batch
        .groups
        .iter()
        .zip(batch.group_ranges())
        .filter(|(g, r)| g.kind == GroupKind::MultipleChoice && r.len() >= 2)
        .filter_map(|(g, r)| g.correct_index().map(|c| (r, c)))
        .collect()
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn multiclass_impl(batch: &Batch, logits: &[f64], grad: Option<&mut [f64]>) -> Result<Term, ObjectiveError> {
    let groups = multiple_choice_ranges(batch);
    if groups.is_empty() {
        return Ok(Term {
            value: 0.0,
            contributors: 0,
        });
    }
    let contributors = groups.len();
    let n = contributors as f64;
    let mut total = 0.0;
    let mut grad = grad;
    for (range, correct) in groups {
        let z = &logits[range.clone()];
        let lse = log_sum_exp(z.iter().copied());
        total += lse - z[correct];
        if let Some(g) = grad.as_deref_mut() {
            for (c, &zc) in z.iter().enumerate() {
                let p = (zc - lse).exp();
                g[range.start + c] += (p - if c == correct { 1.0 } else { 0.0 }) / n;
            }
        }
    }
    Ok(Term {
        value: finite(total / n, "multi-class loss")?,
        contributors,
    })
}

/// Negative log-likelihood of the correct statement under a softmax over
/// its group, averaged over multiple-choice groups. Singleton groups do not
/// contribute; a batch without multiple-choice groups yields 0 with zero
/// contributors.
pub fn multiclass_loss(batch: &Batch, logits: &[f64]) -> Result<Term, ObjectiveError> {
    aligned(batch, logits.len())?;
    multiclass_impl(batch, logits, None)
}

fn unit_vectors(reps: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<f64>), ObjectiveError> {
    let mut units = Vec::with_capacity(reps.len());
    let mut norms = Vec::with_capacity(reps.len());
    for (index, h) in reps.iter().enumerate() {
        let norm = h.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(ObjectiveError::ZeroVector { index });
        }
        units.push(h.iter().map(|x| x / norm).collect());
        norms.push(norm);
    }
    Ok((units, norms))
}

fn contrastive_impl(
    batch: &Batch,
    reps: &[Vec<f64>],
    tau: f64,
    grad: Option<&mut [Vec<f64>]>,
) -> Result<Term, ObjectiveError> {
    let n = batch.len();
    let (units, norms) = unit_vectors(reps)?;
    let labels = &batch.labels;
    let anchors: Vec<usize> = (0..n)
        .filter(|&i| (0..n).any(|k| k != i && labels[k] == labels[i]))
        .collect();
    if anchors.is_empty() {
        return Ok(Term {
            value: 0.0,
            contributors: 0,
        });
    }
    let count = anchors.len() as f64;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut sim = vec![0.0; n * n];
    for i in 0..n {
        for k in i..n {
            let v = dot(&units[i], &units[k]) / tau;
            sim[i * n + k] = v;
            sim[k * n + i] = v;
        }
    }

    let mut total = 0.0;
    let mut grad_units = grad.as_ref().map(|_| vec![vec![0.0; units[0].len()]; n]);
    for &i in &anchors {
        let row = &sim[i * n..(i + 1) * n];
        let positives = (0..n).filter(|&k| k != i && labels[k] == labels[i]).map(|k| row[k]);
        let others = (0..n).filter(|&k| k != i).map(|k| row[k]);
        let lse_p = log_sum_exp(positives);
        let lse_all = log_sum_exp(others);
        total += lse_all - lse_p;
        if let Some(gu) = grad_units.as_mut() {
            for k in (0..n).filter(|&k| k != i) {
                let p_all = (row[k] - lse_all).exp();
                let p_pos = if labels[k] == labels[i] { (row[k] - lse_p).exp() } else { 0.0 };
                let d_sim = (p_all - p_pos) / count / tau;
                if d_sim == 0.0 {
                    continue;
                }
                for t in 0..units[i].len() {
                    gu[i][t] += d_sim * units[k][t];
                    gu[k][t] += d_sim * units[i][t];
                }
            }
        }
    }

    if let (Some(grad), Some(gu)) = (grad, grad_units) {
        // u = h / |h|  =>  dh = (du - u (u . du)) / |h|
        for i in 0..n {
            let proj = dot(&units[i], &gu[i]);
            for t in 0..units[i].len() {
                grad[i][t] += (gu[i][t] - units[i][t] * proj) / norms[i];
            }
        }
    }
    Ok(Term {
        value: finite(total / count, "contrastive loss")?,
        contributors: anchors.len(),
    })
}

/// Supervised contrastive loss on cosine similarity scaled by `1 / tau`.
///
/// For anchor `i` the positives are the other statements with the same
/// label and the negatives are those with the opposite label. Anchors with
/// no positive are skipped and the mean runs over the remaining anchors.
pub fn contrastive_loss(batch: &Batch, representations: &[Vec<f64>], tau: f64) -> Result<Term, ObjectiveError> {
    aligned(batch, representations.len())?;
    if !(tau.is_finite() && tau > 0.0) {
        return Err(ObjectiveError::InvalidWeights(format!("tau must be > 0 (got {tau})")));
    }
    contrastive_impl(batch, representations, tau, None)
}

/// `alpha * L_bin + beta * L_mc + gamma * L_ctr` from raw logits and
/// representations. Scores for the binary term are `sigmoid(logit)`; no
/// temperature is involved in training.
pub fn combined_loss(
    batch: &Batch,
    logits: &[f64],
    representations: &[Vec<f64>],
    weights: &LossWeights,
) -> Result<LossBreakdown, ObjectiveError> {
    combined(batch, logits, representations, weights, false).map(|(b, _)| b)
}

/// [`combined_loss`] plus its gradient. The binary-term gradient is
/// `w_i (s_i - y_i)` and ignores the log clamp.
pub fn combined_loss_with_gradient(
    batch: &Batch,
    logits: &[f64],
    representations: &[Vec<f64>],
    weights: &LossWeights,
) -> Result<(LossBreakdown, LossGradient), ObjectiveError> {
    combined(batch, logits, representations, weights, true).map(|(b, g)| (b, g.expect("gradient requested")))
}

fn combined(
    batch: &Batch,
    logits: &[f64],
    reps: &[Vec<f64>],
    weights: &LossWeights,
    want_grad: bool,
) -> Result<(LossBreakdown, Option<LossGradient>), ObjectiveError> {
    weights.check()?;
    aligned(batch, logits.len())?;
    aligned(batch, reps.len())?;
    let n = batch.len();
    let mut grad = want_grad.then(|| LossGradient {
        logits: vec![0.0; n],
        representations: vec![vec![0.0; reps.first().map_or(0, Vec::len)]; n],
    });

    let bin_weights = binary_weights(batch);
    let scores: Vec<f64> = logits.iter().map(|&z| crate::sigmoid(z)).collect();
    let l_bin = binary_value(batch, &scores, &bin_weights)?;
    if let Some(g) = grad.as_mut() {
        for i in 0..n {
            let y = if batch.labels[i] { 1.0 } else { 0.0 };
            g.logits[i] += weights.alpha * bin_weights[i] * (scores[i] - y);
        }
    }

    let mut mc_grad = want_grad.then(|| vec![0.0; n]);
    let mc = multiclass_impl(batch, logits, mc_grad.as_deref_mut())?;
    if let (Some(g), Some(mg)) = (grad.as_mut(), mc_grad) {
        for (a, b) in g.logits.iter_mut().zip(mg) {
            *a += weights.beta * b;
        }
    }

    let ctr = if weights.gamma > 0.0 {
        let mut rep_grad = want_grad.then(|| vec![vec![0.0; reps.first().map_or(0, Vec::len)]; n]);
        let term = contrastive_impl(batch, reps, weights.tau, rep_grad.as_deref_mut())?;
        if let (Some(g), Some(rg)) = (grad.as_mut(), rep_grad) {
            for (a, b) in g.representations.iter_mut().zip(rg) {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += weights.gamma * y;
                }
            }
        }
        term
    } else {
        Term {
            value: 0.0,
            contributors: 0,
        }
    };

    let total = weights.alpha * l_bin + weights.beta * mc.value + weights.gamma * ctr.value;
    let breakdown = LossBreakdown {
        l_bin,
        l_mc: mc.value,
        l_ctr: ctr.value,
        total: finite(total, "combined loss")?,
        mc_groups: mc.contributors,
        ctr_anchors: ctr.contributors,
    };
    Ok((breakdown, grad))
}
