//! Versioned JSON model checkpoints. Floats are written in shortest
//! round-trip form, so a loaded model reproduces scores bit for bit.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BackboneConfig, LinearHead, ReferenceBackbone, ScorerError, VerifierModel};
use crate::tokenizer::Tokenizer;

pub const CHECKPOINT_FORMAT: &str = "verity-model";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelCheckpoint {
    pub format: String,
    pub version: u32,
    pub temperature: f64,
    pub max_tokens: usize,
    pub backbone: BackboneConfig,
    pub tokenizer: Tokenizer,
    pub extractor_params: Vec<f64>,
    pub head_weight: Vec<f64>,
    pub head_bias: f64,
}

impl ModelCheckpoint {
    pub fn from_model(model: &VerifierModel) -> Self {
        Self {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            temperature: model.temperature(),
            max_tokens: model.max_tokens,
            backbone: model.extractor.config(),
            tokenizer: model.tokenizer.clone(),
            extractor_params: crate::scorer::FeatureExtractor::params(&model.extractor).to_vec(),
            head_weight: model.head.weight.clone(),
            head_bias: model.head.bias,
        }
    }

    pub fn into_model(self) -> Result<VerifierModel, ScorerError> {
        if self.format != CHECKPOINT_FORMAT || self.version != CHECKPOINT_VERSION {
            return Err(ScorerError::Checkpoint(format!(
                "unsupported checkpoint {} v{}",
                self.format, self.version
            )));
        }
        if self.backbone.vocab_size != self.tokenizer.vocab_size() {
            return Err(ScorerError::Checkpoint(format!(
                "backbone vocabulary {} does not match tokenizer vocabulary {}",
                self.backbone.vocab_size,
                self.tokenizer.vocab_size()
            )));
        }
        if self.head_weight.len() != self.backbone.dim {
            return Err(ScorerError::ParameterCount {
                expected: self.backbone.dim,
                got: self.head_weight.len(),
            });
        }
        let extractor = ReferenceBackbone::from_params(self.backbone, self.extractor_params)?;
        let mut model = VerifierModel::new(self.tokenizer, extractor);
        model.head = LinearHead {
            weight: self.head_weight,
            bias: self.head_bias,
        };
        model.max_tokens = self.max_tokens;
        model.set_temperature(self.temperature)?;
        Ok(model)
    }
}

pub fn save_model(model: &VerifierModel, path: impl AsRef<Path>) -> Result<(), ScorerError> {
    let json = serde_json::to_string(&ModelCheckpoint::from_model(model))?;
    std::fs::write(path, json + "\n")?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<VerifierModel, ScorerError> {
    let text = std::fs::read_to_string(path)?;
    let ckpt: ModelCheckpoint = serde_json::from_str(&text)?;
    ckpt.into_model()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut model = VerifierModel::reference(["a cat sat.", "dogs bark loudly!"], 6, 5, 9);
        model.head.weight = vec![0.1, -0.2, 1.0 / 3.0, 1e-17, -7.5, 2.0f64.sqrt()];
        model.head.bias = -0.125;
        model.set_temperature(1.7).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&model, &path).unwrap();
        let back = load_model(&path).unwrap();
        assert_eq!(back.flat_params(), model.flat_params());
        assert_eq!(back.temperature(), 1.7);
        for text in ["a cat sat.", "dogs bark", "unknown words here"] {
            assert_eq!(back.logit_text(text).to_bits(), model.logit_text(text).to_bits());
        }
    }

    #[test]
    fn rejects_foreign_format() {
        let model = VerifierModel::reference(["x"], 4, 4, 0);
        let mut ckpt = ModelCheckpoint::from_model(&model);
        ckpt.version = 99;
        assert!(ckpt.into_model().is_err());
    }
}
