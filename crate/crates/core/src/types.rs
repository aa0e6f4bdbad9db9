//! Shared data model: statements, statement groups, dataset partitions and
//! scored statements.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Where a statement came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    QuestionChoice,
    Boolean,
    KbOriginal,
    KbPerturbed,
    LmFalsehood,
}

/// One declarative sentence with its correctness label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Statement {
    pub text: String,
    pub label: bool,
    pub origin: Origin,
    pub source_id: String,
}

impl Statement {
    pub fn new(text: impl Into<String>, label: bool, origin: Origin, source_id: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            label,
            origin,
            source_id: source_id.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    MultipleChoice,
    Boolean,
}

impl fmt::Display for GroupKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupKind::MultipleChoice => "multiple_choice",
            GroupKind::Boolean => "boolean",
        })
    }
}

/// Statements that originate from the same problem or KB entry.
///
/// Field order matches the on-disk JSONL layout: `group_id`, `kind`,
/// `statements`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatementGroup {
    pub group_id: String,
    pub kind: GroupKind,
    pub statements: Vec<Statement>,
}

/// A broken [`StatementGroup`] invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyText { index: usize },
    TooFewStatements { len: usize },
    NotExactlyOneCorrect { correct: usize },
    BooleanNotSingleton { len: usize },
    DuplicateText { first: usize, second: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyText { index } => write!(f, "statement {index} has empty text"),
            Violation::TooFewStatements { len } => {
                write!(f, "multiple-choice groups need at least 2 statements (got {len})")
            }
            Violation::NotExactlyOneCorrect { correct } => {
                write!(f, "exactly one correct statement required (got {correct})")
            }
            Violation::BooleanNotSingleton { len } => {
                write!(f, "boolean groups have one statement (got {len})")
            }
            Violation::DuplicateText { first, second } => {
                write!(f, "statements {first} and {second} have identical text")
            }
        }
    }
}

impl StatementGroup {
    pub fn new(group_id: impl Into<String>, kind: GroupKind, statements: Vec<Statement>) -> Self {
        Self {
            group_id: group_id.into(),
            kind,
            statements,
        }
    }

    pub fn len(&self) -> usize {
        self.statements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.statements.is_empty()
    }

    pub fn correct_count(&self) -> usize {
        self.statements.iter().filter(|s| s.label).count()
    }

    /// Index of the first correct statement, if any.
    pub fn correct_index(&self) -> Option<usize> {
        self.statements.iter().position(|s| s.label)
    }

    /// Checks every group invariant and returns all violations found.
    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        let mut violations = Vec::new();
        for (index, s) in self.statements.iter().enumerate() {
            if s.text.trim().is_empty() {
                violations.push(Violation::EmptyText { index });
            }
        }
        match self.kind {
            GroupKind::MultipleChoice => {
                if self.statements.len() < 2 {
                    violations.push(Violation::TooFewStatements {
                        len: self.statements.len(),
                    });
                }
                let correct = self.correct_count();
                if correct != 1 {
                    violations.push(Violation::NotExactlyOneCorrect { correct });
                }
            }
            GroupKind::Boolean => {
                if self.statements.len() != 1 {
                    violations.push(Violation::BooleanNotSingleton {
                        len: self.statements.len(),
                    });
                }
            }
        }
        let mut seen: Vec<(&str, usize)> = Vec::new();
        for (index, s) in self.statements.iter().enumerate() {
            if let Some(&(_, first)) = seen.iter().find(|(t, _)| *t == s.text) {
                violations.push(Violation::DuplicateText { first, second: index });
            } else {
                seen.push((&s.text, index));
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(violations)
        }
    }
}

/// Free-function form of [`StatementGroup::validate`].
pub fn validate_group(group: &StatementGroup) -> Result<(), Vec<Violation>> {
    group.validate()
}

/// Which training or evaluation pass a partition belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    StageA,
    StageB,
    EvalSeen,
    EvalUnseen1,
    EvalUnseen2,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::StageA => "stage_a",
            Stage::StageB => "stage_b",
            Stage::EvalSeen => "eval_seen",
            Stage::EvalUnseen1 => "eval_unseen_1",
            Stage::EvalUnseen2 => "eval_unseen_2",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetPartition {
    pub name: String,
    pub stage: Stage,
    pub groups: Vec<StatementGroup>,
}

/// Error from [`DatasetPartition::validate`]: the group index and what broke.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PartitionViolation {
    Group { index: usize, group_id: String, violations: Vec<Violation> },
    StageARequiresMultipleChoice { index: usize, group_id: String },
    DuplicateGroupId { group_id: String },
}

impl fmt::Display for PartitionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionViolation::Group { index, group_id, violations } => {
                write!(f, "group {index} ({group_id}):")?;
                for v in violations {
                    write!(f, " {v};")?;
                }
                Ok(())
            }
            PartitionViolation::StageARequiresMultipleChoice { index, group_id } => {
                write!(f, "group {index} ({group_id}) is boolean but stage A takes multiple-choice groups only")
            }
            PartitionViolation::DuplicateGroupId { group_id } => write!(f, "duplicate group id {group_id}"),
        }
    }
}

impl DatasetPartition {
    pub fn new(name: impl Into<String>, stage: Stage, groups: Vec<StatementGroup>) -> Self {
        Self {
            name: name.into(),
            stage,
            groups,
        }
    }

    pub fn statement_count(&self) -> usize {
        self.groups.iter().map(StatementGroup::len).sum()
    }

    pub fn validate(&self) -> Result<(), Vec<PartitionViolation>> {
        let mut out = Vec::new();
        let mut ids = HashSet::new();
        for (index, g) in self.groups.iter().enumerate() {
            if let Err(violations) = g.validate() {
                out.push(PartitionViolation::Group {
                    index,
                    group_id: g.group_id.clone(),
                    violations,
                });
            }
            if self.stage == Stage::StageA && g.kind != GroupKind::MultipleChoice {
                out.push(PartitionViolation::StageARequiresMultipleChoice {
                    index,
                    group_id: g.group_id.clone(),
                });
            }
            if !ids.insert(g.group_id.as_str()) {
                out.push(PartitionViolation::DuplicateGroupId {
                    group_id: g.group_id.clone(),
                });
            }
        }
        if out.is_empty() {
            Ok(())
        } else {
            Err(out)
        }
    }
}

/// A statement with the verifier's raw logit, its (possibly
/// temperature-scaled) score and the hard prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredStatement {
    pub statement: Statement,
    pub logit: f64,
    pub score: f64,
    pub predicted: bool,
}

impl ScoredStatement {
    pub fn new(statement: Statement, logit: f64, temperature: f64) -> Self {
        Self {
            statement,
            logit,
            score: crate::sigmoid(logit / temperature),
            predicted: logit > 0.0,
        }
    }
}
