use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::batcher::BatchConfig;
use crate::objectives::LossWeights;
use crate::types::Stage;

/// Flat training configuration. Every key has a default, so a config file
/// only lists what it changes.
///
/// Learning rate and step count default to values suited to the small
/// reference backbone trained from scratch; a pretrained backbone would
/// use far smaller rates and more steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub seed: u64,
    pub steps_a: u64,
    pub steps_b: u64,
    pub learning_rate_a: f64,
    pub learning_rate_b: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub tau: f64,
    pub groups_per_batch: usize,
    pub max_group_size: usize,
    pub max_tokens: usize,
    pub freeze_capping: bool,
    /// Save a training state every this many updates; 0 disables.
    pub checkpoint_every: u64,
    pub dim: usize,
    pub ffn_dim: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    /// Linear warmup length in updates; 0 disables.
    pub warmup_steps: u64,
    /// Decoupled weight decay; 0 disables.
    pub weight_decay: f64,
    /// Global gradient-norm ceiling; 0 disables.
    pub grad_clip: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let w = LossWeights::default();
        let b = BatchConfig::default();
        Self {
            seed: 0,
            steps_a: 2000,
            steps_b: 2000,
            learning_rate_a: 1e-3,
            learning_rate_b: 1e-3,
            alpha: w.alpha,
            beta: w.beta,
            gamma: w.gamma,
            tau: w.tau,
            groups_per_batch: b.groups_per_batch,
            max_group_size: b.max_group_size,
            max_tokens: b.max_tokens,
            freeze_capping: false,
            checkpoint_every: 0,
            dim: 64,
            ffn_dim: 64,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
            warmup_steps: 0,
            weight_decay: 0.0,
            grad_clip: 0.0,
        }
    }
}

impl TrainConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, TrainError> {
        let config: Self = toml::from_str(text).map_err(|e| TrainError::InvalidConfig(e.to_string()))?;
        config.check()?;
        Ok(config)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("flat config serializes")
    }

    pub fn weights(&self) -> LossWeights {
        LossWeights {
            alpha: self.alpha,
            beta: self.beta,
            gamma: self.gamma,
            tau: self.tau,
        }
    }

    /// Batch settings shared by both stages; the seed is set per stage.
    pub fn batch_config(&self) -> BatchConfig {
        BatchConfig {
            groups_per_batch: self.groups_per_batch,
            max_group_size: self.max_group_size,
            max_tokens: self.max_tokens,
            seed: self.seed,
            freeze_capping: self.freeze_capping,
        }
    }

    pub fn steps(&self, stage: Stage) -> u64 {
        match stage {
            Stage::StageA => self.steps_a,
            _ => self.steps_b,
        }
    }

    pub fn learning_rate(&self, stage: Stage) -> f64 {
        match stage {
            Stage::StageA => self.learning_rate_a,
            _ => self.learning_rate_b,
        }
    }

    pub fn check(&self) -> Result<(), TrainError> {
        let invalid = |m: String| Err(TrainError::InvalidConfig(m));
        for (name, lr) in [("learning_rate_a", self.learning_rate_a), ("learning_rate_b", self.learning_rate_b)] {
            if !(lr.is_finite() && lr > 0.0) {
                return invalid(format!("{name} must be > 0 (got {lr})"));
            }
        }
        self.weights()
            .check()
            .map_err(|e| TrainError::InvalidConfig(e.to_string()))?;
        self.batch_config().check()?;
        if self.dim == 0 || self.ffn_dim == 0 {
            return invalid("dim and ffn_dim must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) || !(self.adam_eps > 0.0) {
            return invalid("adam betas must lie in [0, 1) and adam_eps must be > 0".into());
        }
        if !(self.weight_decay >= 0.0 && self.grad_clip >= 0.0) {
            return invalid("weight_decay and grad_clip must be >= 0".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_mirror_the_hyperparameter_table() {
        let c = TrainConfig::default();
        assert_eq!((c.alpha, c.beta, c.gamma, c.tau), (1.0, 1.0, 0.1, 0.05));
        assert_eq!((c.groups_per_batch, c.max_group_size, c.max_tokens), (64, 4, 128));
        assert_eq!(c.batch_config().max_statements(), 256);
        assert_eq!((c.adam_beta1, c.adam_beta2, c.adam_eps), (0.9, 0.999, 1e-8));
        assert_eq!((c.warmup_steps, c.weight_decay, c.grad_clip), (0, 0.0, 0.0));
    }

    #[test]
    fn partial_file_overrides_defaults() {
        let c = TrainConfig::from_toml_str("steps_a = 0\ngamma = 0.0\nseed = 7\n").unwrap();
        assert_eq!(c.steps_a, 0);
        assert_eq!(c.gamma, 0.0);
        assert_eq!(c.seed, 7);
        assert_eq!(c.steps_b, 2000);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_values() {
        assert!(TrainConfig::from_toml_str("stepz = 3").is_err());
        assert!(TrainConfig::from_toml_str("learning_rate_a = 0.0").is_err());
        assert!(TrainConfig::from_toml_str("tau = -1.0").is_err());
    }

    #[test]
    fn toml_round_trip() {
        let c = TrainConfig {
            learning_rate_b: 2e-6,
            ..Default::default()
        };
        assert_eq!(TrainConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
    }
}
