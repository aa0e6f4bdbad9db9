//! Extra incorrect statements built from low-probability answers sampled
//! from a small language model.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{apply_conversion_rule, ForgeError, MultipleChoiceProblem};
use crate::types::{Origin, Statement};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledAnswer {
    pub text: String,
    /// Per-sequence generation probability in `[0, 1]`.
    pub probability: f64,
}

impl SampledAnswer {
    pub fn new(text: impl Into<String>, probability: f64) -> Self {
        Self {
            text: text.into(),
            probability,
        }
    }
}

/// Source of sampled answers. Implementations return exactly `n` answers.
pub trait AnswerSampler {
    fn sample(&self, question: &str, n: usize) -> Result<Vec<SampledAnswer>, ForgeError>;
}

/// Replays precomputed samples keyed by question text.
///
/// File format: JSONL of `{"question": ..., "samples": [{"text", "probability"}, ...]}`.
#[derive(Debug, Clone, Default)]
pub struct TableSampler {
    table: HashMap<String, Vec<SampledAnswer>>,
}

#[derive(Deserialize)]
struct TableRow {
    question: String,
    samples: Vec<SampledAnswer>,
}

impl TableSampler {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, question: impl Into<String>, samples: Vec<SampledAnswer>) -> Self {
        self.table.insert(question.into(), samples);
        self
    }

    pub fn from_jsonl(path: impl AsRef<Path>) -> Result<Self, ForgeError> {
        let rows: Vec<TableRow> = crate::jsonl::read(path)?;
        Ok(Self {
            table: rows.into_iter().map(|r| (r.question, r.samples)).collect(),
        })
    }
}

impl AnswerSampler for TableSampler {
    fn sample(&self, question: &str, n: usize) -> Result<Vec<SampledAnswer>, ForgeError> {
        let samples = self
            .table
            .get(question)
            .ok_or_else(|| ForgeError::Sampler(format!("no samples recorded for {question:?}")))?;
        if samples.len() < n {
            return Err(ForgeError::Sampler(format!(
                "{} samples recorded for {question:?}, {n} requested",
                samples.len()
            )));
        }
        Ok(samples[..n].to_vec())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FalsehoodConfig {
    pub n: usize,
    pub k: usize,
    pub p_max: f64,
}

impl Default for FalsehoodConfig {
    fn default() -> Self {
        Self { n: 50, k: 3, p_max: 0.15 }
    }
}

/// Picks up to `k` of the least probable sampled answers whose probability
/// is below `p_max` and which do not restate an existing choice, and turns
/// each into an incorrect statement.
///
/// Equal probabilities are ordered by answer text.
pub fn augment_falsehoods(
    problem: &MultipleChoiceProblem,
    sampler: &dyn AnswerSampler,
    config: FalsehoodConfig,
) -> Result<Vec<Statement>, ForgeError> {
    if config.n < config.k {
        return Err(ForgeError::InvalidProblem(format!(
            "falsehood sampling needs n >= k (n = {}, k = {})",
            config.n, config.k
        )));
    }
    let form = problem.question_form;
    let existing_choices: Vec<String> = problem.choices.iter().map(|c| c.trim().to_lowercase()).collect();
    let mut existing_texts = Vec::new();
    for c in &problem.choices {
        existing_texts.push(apply_conversion_rule(&problem.question, c, form)?.to_lowercase());
    }

    let mut seen: Vec<String> = Vec::new();
    let mut pool: Vec<SampledAnswer> = Vec::new();
    for answer in sampler.sample(&problem.question, config.n)? {
        let key = answer.text.trim().to_lowercase();
        if key.is_empty() || !(answer.probability < config.p_max) || existing_choices.contains(&key) || seen.contains(&key) {
            continue;
        }
        seen.push(key);
        pool.push(answer);
    }
    pool.sort_by(|a, b| a.probability.total_cmp(&b.probability).then_with(|| a.text.cmp(&b.text)));

    let mut out = Vec::new();
    for answer in pool {
        if out.len() == config.k {
            break;
        }
        let text = apply_conversion_rule(&problem.question, answer.text.trim(), form)?;
        let lowered = text.to_lowercase();
        if existing_texts.contains(&lowered) || out.iter().any(|s: &Statement| s.text.to_lowercase() == lowered) {
            continue;
        }
        out.push(Statement::new(text, false, Origin::LmFalsehood, &problem.id));
    }
    Ok(out)
}
