//! Commonsense statement verification.
//!
//! The crate covers the whole pipeline: building labeled statement groups
//! from QA and knowledge-base sources ([`forge`]), group-preserving batching
//! ([`batcher`]), a pluggable plausibility scorer ([`scorer`]) trained with a
//! combined binary, multi-class and supervised-contrastive objective
//! ([`objectives`], [`trainer`]), post-hoc temperature calibration
//! ([`calibration`]), evaluation ([`evaluation`]) and knowledge filtering
//! ([`filter`]).

pub mod batcher;
pub mod calibration;
pub mod evaluation;
pub mod filter;
pub mod fixtures;
pub mod forge;
pub mod jsonl;
pub mod objectives;
pub mod scorer;
pub mod seed;
pub mod tokenizer;
pub mod trainer;
pub mod types;

pub use types::{
    validate_group, DatasetPartition, GroupKind, Origin, ScoredStatement, Stage, Statement, StatementGroup, Violation,
};

/// Logistic function, evaluated without overflow for large `|z|`.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
