//! The verifier: feature extractor, linear head, sigmoid, and optional
//! inference temperature.

mod backbone;
mod checkpoint;

pub use backbone::{BackboneConfig, BackboneTape, ReferenceBackbone};
pub use checkpoint::{load_model, save_model, ModelCheckpoint, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};

use thiserror::Error;

use crate::tokenizer::{TokenId, Tokenizer, EOS};
use crate::types::{ScoredStatement, Statement};

#[derive(Debug, Error)]
pub enum ScorerError {
    /// Token sequence does not end with the EOS marker.
    #[error("MissingEOS: token sequence must end with the EOS marker")]
    MissingEos,
    #[error("temperature must be finite and positive, got {0}")]
    InvalidTemperature(f64),
    #[error("expected {expected} parameters, got {got}")]
    ParameterCount { expected: usize, got: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Maps a token sequence to a fixed-size representation read at the final
/// (EOS) position.
pub trait FeatureExtractor: Clone {
    /// Forward-pass state needed by `backward`.
    type Tape;

    fn dim(&self) -> usize;
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];

    /// Representation of `tokens`. Callers guarantee a trailing EOS.
    fn forward(&self, tokens: &[TokenId]) -> Result<(Vec<f64>, Self::Tape), ScorerError>;

    /// Accumulates the parameter gradient for upstream gradient `grad`
    /// into `param_grads`.
    fn backward(&self, tape: &Self::Tape, grad: &[f64], param_grads: &mut [f64]);
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearHead {
    pub weight: Vec<f64>,
    pub bias: f64,
}

impl LinearHead {
    /// Zero weights and bias, so every initial score is 0.5.
    pub fn zeros(dim: usize) -> Self {
        Self {
            weight: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn logit(&self, h: &[f64]) -> f64 {
        self.weight.iter().zip(h).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }
}

#[derive(Debug, Clone)]
pub struct VerifierModel<E: FeatureExtractor = ReferenceBackbone> {
    pub tokenizer: Tokenizer,
    pub extractor: E,
    pub head: LinearHead,
    temperature: f64,
    pub max_tokens: usize,
}

/// Default token budget per statement.
pub const DEFAULT_MAX_TOKENS: usize = 128;

impl VerifierModel<ReferenceBackbone> {
    /// Fresh reference model with a vocabulary built from `texts`.
    pub fn reference<'a>(texts: impl IntoIterator<Item = &'a str>, dim: usize, ffn_dim: usize, seed: u64) -> Self {
        let tokenizer = Tokenizer::build(texts);
        let config = BackboneConfig {
            vocab_size: tokenizer.vocab_size(),
            dim,
            ffn_dim,
        };
        Self::new(tokenizer, ReferenceBackbone::new(config, seed))
    }
}

impl<E: FeatureExtractor> VerifierModel<E> {
    pub fn new(tokenizer: Tokenizer, extractor: E) -> Self {
        let dim = extractor.dim();
        Self {
            tokenizer,
            extractor,
            head: LinearHead::zeros(dim),
            temperature: 1.0,
            max_tokens: DEFAULT_MAX_TOKENS,
        }
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn set_temperature(&mut self, t: f64) -> Result<(), ScorerError> {
        if !(t.is_finite() && t > 0.0) {
            return Err(ScorerError::InvalidTemperature(t));
        }
        self.temperature = t;
        Ok(())
    }

    pub fn with_temperature(mut self, t: f64) -> Result<Self, ScorerError> {
        self.set_temperature(t)?;
        Ok(self)
    }

    pub fn tokenize(&self, text: &str) -> Vec<TokenId> {
        self.tokenizer.encode(text, self.max_tokens)
    }

    /// Representation at the EOS position.
    pub fn encode(&self, tokens: &[TokenId]) -> Result<Vec<f64>, ScorerError> {
        Ok(self.forward(tokens)?.0)
    }

    pub(crate) fn forward(&self, tokens: &[TokenId]) -> Result<(Vec<f64>, E::Tape), ScorerError> {
        if tokens.last() != Some(&EOS) {
            return Err(ScorerError::MissingEos);
        }
        self.extractor.forward(tokens)
    }

    /// Raw logit, without temperature.
    pub fn logit(&self, tokens: &[TokenId]) -> Result<f64, ScorerError> {
        Ok(self.head.logit(&self.encode(tokens)?))
    }

    pub fn logit_text(&self, text: &str) -> f64 {
        self.logit(&self.tokenize(text)).expect("encoded text ends with EOS")
    }

    pub fn score(&self, statement: &Statement, tokens: &[TokenId]) -> Result<ScoredStatement, ScorerError> {
        Ok(ScoredStatement::new(statement.clone(), self.logit(tokens)?, self.temperature))
    }

    pub fn score_statement(&self, statement: &Statement) -> ScoredStatement {
        ScoredStatement::new(statement.clone(), self.logit_text(&statement.text), self.temperature)
    }

    /// Total trainable parameters: extractor, head weight, head bias.
    pub fn param_count(&self) -> usize {
        self.extractor.params().len() + self.head.weight.len() + 1
    }

    /// All parameters in gradient order.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = self.extractor.params().to_vec();
        out.extend_from_slice(&self.head.weight);
        out.push(self.head.bias);
        out
    }

    /// Mutable parameter blocks in gradient order.
    pub fn param_blocks_mut(&mut self) -> [&mut [f64]; 3] {
        [
            self.extractor.params_mut(),
            &mut self.head.weight,
            std::slice::from_mut(&mut self.head.bias),
        ]
    }

    pub fn set_flat_params(&mut self, params: &[f64]) -> Result<(), ScorerError> {
        if params.len() != self.param_count() {
            return Err(ScorerError::ParameterCount {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let mut offset = 0;
        for block in self.param_blocks_mut() {
            let n = block.len();
            block.copy_from_slice(&params[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }
}
