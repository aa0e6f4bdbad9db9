//! Two-stage training with Adam: stage A on knowledge-base groups, then
//! stage B on QA groups starting from the stage-A model.
//!
//! A step is one optimizer update on one batch. Step `k` (0-based) of a
//! stage uses batch `k % n` of epoch `k / n`, where `n` is the number of
//! batches per epoch, so a run resumed from any step sees the same batches
//! as an uninterrupted one.

mod adam;
mod config;
mod state;

pub use adam::{Adam, AdamState};
pub use config::TrainConfig;
pub use state::{TrainState, TRAIN_STATE_FORMAT, TRAIN_STATE_VERSION};

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::batcher::{self, Batch, BatchAudit, BatchConfig, BatchError};
use crate::objectives::{self, LossBreakdown, LossWeights, ObjectiveError};
use crate::scorer::{FeatureExtractor, ScorerError, VerifierModel};
use crate::seed;
use crate::types::{DatasetPartition, Stage, StatementGroup};

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("stage mismatch: expected {expected} data, got {got}")]
    StageMismatch { expected: Stage, got: Stage },
    #[error("invalid partition {name}: {detail}")]
    InvalidPartition { name: String, detail: String },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    /// The loss or its inputs became non-finite; training stops at `step`.
    #[error("NonFiniteLoss at {stage} step {step}: {source}")]
    NonFiniteLoss {
        stage: Stage,
        step: u64,
        #[source]
        source: ObjectiveError,
    },
    #[error("{stage} step {step}: {source}")]
    Objective {
        stage: Stage,
        step: u64,
        #[source]
        source: ObjectiveError,
    },
    #[error("{stage} has {steps} steps to run but no groups")]
    EmptyPartition { stage: Stage, steps: u64 },
    #[error("resume: {0}")]
    Resume(String),
    #[error(transparent)]
    Batch(#[from] BatchError),
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    /// Number of updates applied so far, counting this one.
    pub step: u64,
    #[serde(rename = "L_bin")]
    pub l_bin: f64,
    #[serde(rename = "L_mc")]
    pub l_mc: f64,
    #[serde(rename = "L_ctr")]
    pub l_ctr: f64,
    #[serde(rename = "L")]
    pub total: f64,
}

impl LossRecord {
    fn new(step: u64, b: &LossBreakdown) -> Self {
        Self {
            step,
            l_bin: b.l_bin,
            l_mc: b.l_mc,
            l_ctr: b.l_ctr,
            total: b.total,
        }
    }
}

/// First line of the training log: everything that shaped the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub stage: Stage,
    pub partition: String,
    pub groups: usize,
    pub steps: u64,
    pub start_step: u64,
    pub learning_rate: f64,
    pub weights: LossWeights,
    pub batch: BatchConfig,
    pub mode: String,
    pub schedule: String,
    pub l_mc_denominator: String,
    pub l_ctr_denominator: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingLog {
    pub header: LogHeader,
    pub records: Vec<LossRecord>,
}

impl TrainingLog {
    /// Header line followed by one line per step.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&self.header).expect("header serializes");
        out.push('\n');
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), TrainError> {
        std::fs::write(path, self.to_jsonl())?;
        Ok(())
    }
}

fn stage_label(stage: Stage) -> &'static str {
    match stage {
        Stage::StageA => "stage_a",
        Stage::StageB => "stage_b",
        _ => "eval",
    }
}

/// Batch configuration for `stage`, with its own shuffle seed.
pub fn stage_batch_config(config: &TrainConfig, stage: Stage) -> BatchConfig {
    BatchConfig {
        seed: seed::derive(config.seed, &format!("batcher:{}", stage_label(stage))),
        ..config.batch_config()
    }
}

/// Combined loss on `batch` and its gradient in [`VerifierModel::flat_params`]
/// order.
pub fn loss_and_gradient<E: FeatureExtractor>(
    model: &VerifierModel<E>,
    batch: &Batch,
    weights: &LossWeights,
) -> Result<(LossBreakdown, Vec<f64>), TrainForwardError> {
    let mut reps = Vec::with_capacity(batch.len());
    let mut tapes = Vec::with_capacity(batch.len());
    let mut logits = Vec::with_capacity(batch.len());
    for &(j, c) in &batch.flat {
        let tokens = model.tokenize(&batch.groups[j].statements[c].text);
        let (h, tape) = model.forward(&tokens)?;
        logits.push(model.head.logit(&h));
        reps.push(h);
        tapes.push(tape);
    }
    let (breakdown, grad) = objectives::combined_loss_with_gradient(batch, &logits, &reps, weights)?;

    let n_ext = model.extractor.params().len();
    let dim = model.head.weight.len();
    let mut g = vec![0.0; model.param_count()];
    let (g_ext, g_head) = g.split_at_mut(n_ext);
    for i in 0..batch.len() {
        let dz = grad.logits[i];
        let mut dh = grad.representations[i].clone();
        for (d, w) in dh.iter_mut().zip(&model.head.weight) {
            *d += dz * w;
        }
        model.extractor.backward(&tapes[i], &dh, g_ext);
        for (gw, h) in g_head[..dim].iter_mut().zip(&reps[i]) {
            *gw += dz * h;
        }
        g_head[dim] += dz;
    }
    Ok((breakdown, g))
}

/// Failure inside a single forward/backward evaluation.
#[derive(Debug, Error)]
pub enum TrainForwardError {
    #[error(transparent)]
    Scorer(#[from] ScorerError),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Stepwise trainer for one stage. Holds the model, optimizer state and the
/// current epoch's batches.
pub struct StageTrainer<'a, E: FeatureExtractor> {
    model: VerifierModel<E>,
    adam: Adam,
    step: u64,
    stage: Stage,
    learning_rate: f64,
    groups: &'a [StatementGroup],
    batch_config: BatchConfig,
    config: TrainConfig,
    epoch: Option<(u64, Vec<Batch>)>,
}

fn check_partition(data: &DatasetPartition, stage: Stage) -> Result<(), TrainError> {
    if data.stage != stage {
        return Err(TrainError::StageMismatch {
            expected: stage,
            got: data.stage,
        });
    }
    data.validate().map_err(|v| TrainError::InvalidPartition {
        name: data.name.clone(),
        detail: v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "),
    })
}

impl<'a, E: FeatureExtractor> StageTrainer<'a, E> {
    pub fn new(
        model: VerifierModel<E>,
        data: &'a DatasetPartition,
        stage: Stage,
        config: &TrainConfig,
    ) -> Result<Self, TrainError> {
        config.check()?;
        check_partition(data, stage)?;
        let adam = Adam::new(model.param_count(), config.adam_beta1, config.adam_beta2, config.adam_eps);
        Ok(Self {
            model,
            adam,
            step: 0,
            stage,
            learning_rate: config.learning_rate(stage),
            groups: &data.groups,
            batch_config: stage_batch_config(config, stage),
            config: config.clone(),
            epoch: None,
        })
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn model(&self) -> &VerifierModel<E> {
        &self.model
    }

    pub fn into_model(self) -> VerifierModel<E> {
        self.model
    }

    pub fn adam(&self) -> &Adam {
        &self.adam
    }

    /// Index of the epoch and the batch within it used at `step`.
    pub fn position(&self, step: u64) -> (u64, usize) {
        let n = batcher::batches_per_epoch(self.groups.len(), &self.batch_config).max(1) as u64;
        (step / n, (step % n) as usize)
    }

    /// The batch consumed by the next update.
    pub fn next_batch(&mut self) -> Result<&Batch, TrainError> {
        if self.groups.is_empty() {
            return Err(TrainError::EmptyPartition {
                stage: self.stage,
                steps: self.config.steps(self.stage),
            });
        }
        let (epoch, index) = self.position(self.step);
        if self.epoch.as_ref().map(|(e, _)| *e) != Some(epoch) {
            let batches = batcher::build_batches(self.groups, &self.batch_config, epoch)?;
            self.epoch = Some((epoch, batches));
        }
        Ok(&self.epoch.as_ref().expect("epoch built above").1[index])
    }

    fn effective_rate(&self) -> f64 {
        let warmup = self.config.warmup_steps;
        if warmup == 0 {
            self.learning_rate
        } else {
            self.learning_rate * ((self.step + 1) as f64 / warmup as f64).min(1.0)
        }
    }

    /// Applies one update and returns its loss record.
    pub fn train_step(&mut self) -> Result<LossRecord, TrainError> {
        let batch = self.next_batch()?.clone();
        let step = self.step + 1;
        let (breakdown, mut grad) =
            loss_and_gradient(&self.model, &batch, &self.config.weights()).map_err(|e| match e {
                TrainForwardError::Scorer(s) => TrainError::Scorer(s),
                TrainForwardError::Objective(o @ ObjectiveError::NonFiniteLoss(_)) => TrainError::NonFiniteLoss {
                    stage: self.stage,
                    step,
                    source: o,
                },
                TrainForwardError::Objective(o) => TrainError::Objective {
                    stage: self.stage,
                    step,
                    source: o,
                },
            })?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(TrainError::NonFiniteLoss {
                stage: self.stage,
                step,
                source: ObjectiveError::NonFiniteLoss("gradient is not finite".into()),
            });
        }
        if self.config.grad_clip > 0.0 {
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > self.config.grad_clip {
                let scale = self.config.grad_clip / norm;
                grad.iter_mut().for_each(|g| *g *= scale);
            }
        }
        let lr = self.effective_rate();
        self.adam
            .update(self.model.param_blocks_mut(), &grad, lr, self.config.weight_decay);
        self.step = step;
        Ok(LossRecord::new(step, &breakdown))
    }

    fn header(&self, partition: &str, start_step: u64) -> LogHeader {
        LogHeader {
            stage: self.stage,
            partition: partition.to_string(),
            groups: self.groups.len(),
            steps: self.config.steps(self.stage),
            start_step,
            learning_rate: self.learning_rate,
            weights: self.config.weights(),
            batch: self.batch_config,
            mode: "single-threaded, bitwise deterministic".into(),
            schedule: if self.config.warmup_steps == 0 {
                "constant".into()
            } else {
                format!("linear warmup over {} steps, then constant", self.config.warmup_steps)
            },
            l_mc_denominator: "multiple-choice groups in the batch".into(),
            l_ctr_denominator: "anchors with a non-empty positive set".into(),
        }
    }
}

impl<E: FeatureExtractor> StageTrainer<'_, E> {
    /// Runs until the configured step count, calling `on_checkpoint` every
    /// `checkpoint_every` updates.
    pub fn run(
        &mut self,
        partition: &str,
        on_checkpoint: &mut dyn FnMut(&Self) -> Result<(), TrainError>,
    ) -> Result<TrainingLog, TrainError> {
        let start = self.step;
        let header = self.header(partition, start);
        let total = self.config.steps(self.stage);
        let mut records = Vec::with_capacity(total.saturating_sub(start) as usize);
        while self.step < total {
            records.push(self.train_step()?);
            let every = self.config.checkpoint_every;
            if every > 0 && self.step % every == 0 {
                on_checkpoint(self)?;
            }
        }
        Ok(TrainingLog { header, records })
    }
}

/// Audit lines for every batch a stage consumes, in step order. The same
/// schedule an actual run follows, computed without touching a model.
pub fn batch_schedule(data: &DatasetPartition, stage: Stage, config: &TrainConfig) -> Result<Vec<BatchAudit>, TrainError> {
    config.check()?;
    check_partition(data, stage)?;
    let steps = config.steps(stage);
    if steps > 0 && data.groups.is_empty() {
        return Err(TrainError::EmptyPartition { stage, steps });
    }
    let batch_config = stage_batch_config(config, stage);
    let n = batcher::batches_per_epoch(data.groups.len(), &batch_config).max(1) as u64;
    let mut out = Vec::with_capacity(steps as usize);
    let mut epoch: Option<(u64, Vec<Batch>)> = None;
    for step in 0..steps {
        let (e, index) = (step / n, (step % n) as usize);
        if epoch.as_ref().map(|(k, _)| *k) != Some(e) {
            epoch = Some((e, batcher::build_batches(&data.groups, &batch_config, e)?));
        }
        out.push(epoch.as_ref().expect("epoch built above").1[index].audit(e, index));
    }
    Ok(out)
}

/// Trains `model` on `data` for the configured number of steps of `stage`.
pub fn train_stage<E: FeatureExtractor>(
    model: VerifierModel<E>,
    data: &DatasetPartition,
    stage: Stage,
    config: &TrainConfig,
) -> Result<(VerifierModel<E>, TrainingLog), TrainError> {
    let mut trainer = StageTrainer::new(model, data, stage, config)?;
    let log = trainer.run(&data.name, &mut |_| Ok(()))?;
    Ok((trainer.into_model(), log))
}

/// Fresh reference model whose vocabulary covers both training partitions.
pub fn initial_model(stage_a: &DatasetPartition, stage_b: &DatasetPartition, config: &TrainConfig) -> VerifierModel {
    let texts = stage_a
        .groups
        .iter()
        .chain(&stage_b.groups)
        .flat_map(|g| g.statements.iter().map(|s| s.text.as_str()));
    let mut model = VerifierModel::reference(texts, config.dim, config.ffn_dim, seed::derive(config.seed, "model:init"));
    model.max_tokens = config.max_tokens;
    model
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub model: VerifierModel,
    pub logs: Vec<TrainingLog>,
}

/// Checkpoint callback used by [`run_pipeline`].
pub type CheckpointSink<'s> = dyn FnMut(&TrainState) -> Result<(), TrainError> + 's;

/// Stage A then stage B, the latter starting from every stage-A parameter.
pub fn run_pipeline(
    stage_a: &DatasetPartition,
    stage_b: &DatasetPartition,
    config: &TrainConfig,
    on_checkpoint: &mut CheckpointSink<'_>,
) -> Result<PipelineOutput, TrainError> {
    let model = initial_model(stage_a, stage_b, config);
    continue_pipeline(model, None, stage_a, stage_b, config, on_checkpoint)
}

/// Picks a pipeline back up from a saved training state.
pub fn resume_pipeline(
    state: TrainState,
    stage_a: &DatasetPartition,
    stage_b: &DatasetPartition,
    on_checkpoint: &mut CheckpointSink<'_>,
) -> Result<PipelineOutput, TrainError> {
    let config = state.config.clone();
    let model = state.model.clone().into_model()?;
    continue_pipeline(model, Some(state), stage_a, stage_b, &config, on_checkpoint)
}

fn continue_pipeline(
    model: VerifierModel,
    resume: Option<TrainState>,
    stage_a: &DatasetPartition,
    stage_b: &DatasetPartition,
    config: &TrainConfig,
    on_checkpoint: &mut CheckpointSink<'_>,
) -> Result<PipelineOutput, TrainError> {
    let mut logs = Vec::new();
    let mut model = model;
    let mut resume = resume;
    for (stage, data) in [(Stage::StageA, stage_a), (Stage::StageB, stage_b)] {
        let mut trainer = StageTrainer::new(model, data, stage, config)?;
        match resume.take() {
            Some(state) if state.stage == stage => state.restore_into(&mut trainer)?,
            // A state saved in stage B skips stage A entirely.
            Some(state) => {
                if stage == Stage::StageA && state.stage == Stage::StageB {
                    model = trainer.into_model();
                    resume = Some(state);
                    continue;
                }
                return Err(TrainError::Resume(format!("cannot resume a {} state", state.stage)));
            }
            None => {}
        }
        let log = trainer.run(&data.name, &mut |t| on_checkpoint(&TrainState::capture(t)))?;
        logs.push(log);
        model = trainer.into_model();
    }
    Ok(PipelineOutput { model, logs })
}
