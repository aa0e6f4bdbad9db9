//! Group-preserving batching.
//!
//! Statement groups are never split across batches: each epoch shuffles the
//! groups, caps oversized ones and packs `groups_per_batch` whole groups per
//! batch. The statements of a batch are also addressed through a flat index
//! that the losses iterate over.

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;
use crate::types::{GroupKind, StatementGroup};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BatchError {
    #[error("CapTooSmall: cap {cap} is below the {correct} correct statements of group {group_id}")]
    CapTooSmall { group_id: String, cap: usize, correct: usize },
    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchConfig {
    /// Statement groups per batch (B_G).
    pub groups_per_batch: usize,
    /// Maximum statements kept per group (C).
    pub max_group_size: usize,
    /// Maximum tokens per statement, EOS included (L).
    pub max_tokens: usize,
    pub seed: u64,
    /// Draw the capping sample once instead of once per epoch.
    #[serde(default)]
    pub freeze_capping: bool,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            groups_per_batch: 64,
            max_group_size: 4,
            max_tokens: 128,
            seed: 0,
            freeze_capping: false,
        }
    }
}

impl BatchConfig {
    /// Upper bound on statements per batch (B_S = B_G * C).
    pub fn max_statements(&self) -> usize {
        self.groups_per_batch * self.max_group_size
    }

    pub fn check(&self) -> Result<(), BatchError> {
        if self.groups_per_batch == 0 || self.max_group_size == 0 || self.max_tokens == 0 {
            return Err(BatchError::InvalidConfig(format!(
                "groups_per_batch, max_group_size and max_tokens must be >= 1 (got {}, {}, {})",
                self.groups_per_batch, self.max_group_size, self.max_tokens
            )));
        }
        Ok(())
    }
}

/// A set of complete statement groups plus a flat view of their statements.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub groups: Vec<StatementGroup>,
    /// `(group index, index within group)` for every statement, group-major.
    pub flat: Vec<(usize, usize)>,
    pub labels: Vec<bool>,
}

/// One line of the `--dump-batches` audit log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BatchAudit {
    pub epoch: u64,
    pub batch: usize,
    pub group_ids: Vec<String>,
    pub statements: usize,
}

impl Batch {
    pub fn new(groups: Vec<StatementGroup>) -> Self {
        let mut flat = Vec::new();
        let mut labels = Vec::new();
        for (j, g) in groups.iter().enumerate() {
            for (c, s) in g.statements.iter().enumerate() {
                flat.push((j, c));
                labels.push(s.label);
            }
        }
        Self { groups, flat, labels }
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    /// Flat index range of group `j`.
    pub fn group_range(&self, j: usize) -> std::ops::Range<usize> {
        let start: usize = self.groups[..j].iter().map(StatementGroup::len).sum();
        start..start + self.groups[j].len()
    }

    /// Flat index ranges of all groups, in order.
    pub fn group_ranges(&self) -> Vec<std::ops::Range<usize>> {
        let mut start = 0;
        self.groups
            .iter()
            .map(|g| {
                let r = start..start + g.len();
                start = r.end;
                r
            })
            .collect()
    }

    pub fn audit(&self, epoch: u64, batch: usize) -> BatchAudit {
        BatchAudit {
            epoch,
            batch,
            group_ids: self.groups.iter().map(|g| g.group_id.clone()).collect(),
            statements: self.len(),
        }
    }
}

/// Keeps every correct statement and a uniform sample of incorrect ones,
/// `cap` statements in total. Original order is preserved.
///
/// A multiple-choice group that needs capping must keep at least one
/// incorrect statement, so `cap` has to exceed its correct count.
pub fn cap_group<R: Rng + ?Sized>(group: &StatementGroup, cap: usize, rng: &mut R) -> Result<StatementGroup, BatchError> {
    let correct = group.correct_count();
    let needs_cap = group.len() > cap;
    let too_small = cap < correct || cap == 0 || (needs_cap && group.kind == GroupKind::MultipleChoice && cap <= correct);
    if too_small {
        return Err(BatchError::CapTooSmall {
            group_id: group.group_id.clone(),
            cap,
            correct,
        });
    }
    if !needs_cap {
        return Ok(group.clone());
    }
    let incorrect: Vec<usize> = (0..group.len()).filter(|&i| !group.statements[i].label).collect();
    let mut keep: Vec<usize> = (0..group.len()).filter(|&i| group.statements[i].label).collect();
    keep.extend(index::sample(rng, incorrect.len(), cap - correct).into_iter().map(|k| incorrect[k]));
    keep.sort_unstable();
    Ok(StatementGroup {
        group_id: group.group_id.clone(),
        kind: group.kind,
        statements: keep.into_iter().map(|i| group.statements[i].clone()).collect(),
    })
}

/// Number of batches one epoch over `n_groups` groups produces.
pub fn batches_per_epoch(n_groups: usize, config: &BatchConfig) -> usize {
    n_groups.div_ceil(config.groups_per_batch.max(1))
}

/// Shuffles, caps and packs `groups` for one epoch. The last batch may be
/// smaller than `groups_per_batch`.
pub fn build_batches(groups: &[StatementGroup], config: &BatchConfig, epoch: u64) -> Result<Vec<Batch>, BatchError> {
    config.check()?;
    let mut order: Vec<usize> = (0..groups.len()).collect();
    order.shuffle(&mut seed::rng_for(config.seed, &format!("batcher:shuffle:{epoch}")));
    let cap_epoch = if config.freeze_capping { 0 } else { epoch };
    let capped = order
        .into_iter()
        .map(|i| {
            let g = &groups[i];
            if g.len() <= config.max_group_size {
                Ok(g.clone())
            } else {
                let mut rng = seed::rng_for(config.seed, &format!("batcher:cap:{cap_epoch}:{i}"));
                cap_group(g, config.max_group_size, &mut rng)
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(capped
        .chunks(config.groups_per_batch)
        .map(|chunk| Batch::new(chunk.to_vec()))
        .collect())
}
