//! Knowledge filtering and bulk scoring with a trained verifier.

use serde::{Deserialize, Serialize};

use crate::scorer::{FeatureExtractor, VerifierModel};
use crate::types::{ScoredStatement, Statement};

/// Default filtering threshold on the calibrated score.
pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Score of one unlabeled statement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextScore {
    pub text: String,
    pub logit: f64,
    pub score: f64,
    pub kept: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FilterOutcome {
    pub kept: Vec<String>,
    pub dropped: Vec<String>,
    /// One entry per input, in input order.
    pub scores: Vec<TextScore>,
}

/// Whether a statement with logit `z` passes `threshold` under temperature
/// `t`. At 0.5 the test is `z > 0`, which is exactly `sigmoid(z / t) > 0.5`
/// for every positive `t` without the rounding of the sigmoid near 0.
pub fn passes(z: f64, t: f64, threshold: f64) -> bool {
    if threshold == DEFAULT_THRESHOLD {
        z > 0.0
    } else {
        crate::sigmoid(z / t) > threshold
    }
}

/// Keeps the statements whose score is strictly above `threshold`.
/// Order is preserved and every input lands in exactly one of the outputs.
pub fn filter_knowledge<E: FeatureExtractor, S: AsRef<str>>(
    statements: &[S],
    model: &VerifierModel<E>,
    threshold: f64,
) -> FilterOutcome {
    let t = model.temperature();
    let mut out = FilterOutcome::default();
    for text in statements {
        let text = text.as_ref();
        let logit = model.logit_text(text);
        let kept = passes(logit, t, threshold);
        if kept {
            out.kept.push(text.to_string());
        } else {
            out.dropped.push(text.to_string());
        }
        out.scores.push(TextScore {
            text: text.to_string(),
            logit,
            score: crate::sigmoid(logit / t),
            kept,
        });
    }
    out
}

/// One scored statement per input, same order.
pub fn score_statements<E: FeatureExtractor>(statements: &[Statement], model: &VerifierModel<E>) -> Vec<ScoredStatement> {
    statements.iter().map(|s| model.score_statement(s)).collect()
}
