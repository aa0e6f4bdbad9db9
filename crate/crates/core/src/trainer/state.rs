use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AdamState, StageTrainer, TrainConfig, TrainError};
use crate::scorer::{ModelCheckpoint, ReferenceBackbone};
use crate::types::Stage;

pub const TRAIN_STATE_FORMAT: &str = "verity-train-state";
pub const TRAIN_STATE_VERSION: u32 = 1;

/// Everything needed to continue a stage bit for bit: model, optimizer
/// moments, step counter and the configuration that drives batching.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    pub format: String,
    pub version: u32,
    pub stage: Stage,
    pub step: u64,
    pub config: TrainConfig,
    pub model: ModelCheckpoint,
    pub adam: AdamState,
}

impl TrainState {
    pub fn capture(trainer: &StageTrainer<'_, ReferenceBackbone>) -> Self {
        Self {
            format: TRAIN_STATE_FORMAT.into(),
            version: TRAIN_STATE_VERSION,
            stage: trainer.stage,
            step: trainer.step,
            config: trainer.config.clone(),
            model: ModelCheckpoint::from_model(&trainer.model),
            adam: trainer.adam.state().clone(),
        }
    }

    /// Loads this state into a trainer built for the same stage and data.
    pub fn restore_into(self, trainer: &mut StageTrainer<'_, ReferenceBackbone>) -> Result<(), TrainError> {
        if self.format != TRAIN_STATE_FORMAT || self.version != TRAIN_STATE_VERSION {
            return Err(TrainError::Resume(format!("unsupported state {} v{}", self.format, self.version)));
        }
        if self.stage != trainer.stage {
            return Err(TrainError::Resume(format!(
                "state belongs to {}, trainer runs {}",
                self.stage, trainer.stage
            )));
        }
        if self.config != trainer.config {
            return Err(TrainError::Resume("state was saved under a different training config".into()));
        }
        trainer.model = self.model.into_model()?;
        trainer.adam.set_state(self.adam).map_err(TrainError::Resume)?;
        trainer.step = self.step;
        trainer.epoch = None;
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TrainError> {
        std::fs::write(path, serde_json::to_string(self)? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TrainError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Conventional file name for a state at this stage and step.
    pub fn file_name(&self) -> String {
        format!("{}-step{:06}.json", self.stage, self.step)
    }
}
