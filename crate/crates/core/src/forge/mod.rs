//! Turning QA problems and knowledge-base rows into statement groups.

mod adapters;
mod convert;
mod falsehoods;
mod kb;
mod skd;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{GroupKind, Origin, Statement, StatementGroup};

pub use adapters::{adapter_names, run_adapter, Adapter, AdapterOptions};
pub use convert::{apply_conversion_rule, declarative_from_yes_no, indefinite_article, with_article, QuestionForm};
pub use falsehoods::{augment_falsehoods, AnswerSampler, FalsehoodConfig, SampledAnswer, TableSampler};
pub use kb::{perturb_kb_entry, KbEntry};
pub use skd::{render_skd_triple, supported_relations, KnowledgeTriple};

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("ConversionFailure: {reason}")]
    ConversionFailure { reason: String },
    #[error("InsufficientPool: need {needed} replacement subjects, pool offers {available}")]
    InsufficientPool { needed: usize, available: usize },
    #[error("UnknownRelation: {0}")]
    UnknownRelation(String),
    #[error("InvalidProblem: {0}")]
    InvalidProblem(String),
    #[error("Sampler: {0}")]
    Sampler(String),
    #[error("UnknownAdapter: {0}")]
    UnknownAdapter(String),
    #[error("{path}:{line}: {message}")]
    Input { path: String, line: usize, message: String },
    #[error(transparent)]
    Jsonl(#[from] crate::jsonl::JsonlError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultipleChoiceProblem {
    pub id: String,
    pub question: String,
    pub choices: Vec<String>,
    pub answer_index: usize,
    pub question_form: QuestionForm,
}

impl MultipleChoiceProblem {
    pub fn check(&self) -> Result<(), ForgeError> {
        if self.choices.len() < 2 {
            return Err(ForgeError::InvalidProblem(format!(
                "{}: needs at least 2 choices, got {}",
                self.id,
                self.choices.len()
            )));
        }
        if self.answer_index >= self.choices.len() {
            return Err(ForgeError::InvalidProblem(format!(
                "{}: answer_index {} out of range for {} choices",
                self.id,
                self.answer_index,
                self.choices.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BooleanProblem {
    pub id: String,
    pub question: String,
    pub answer: bool,
}

/// One statement per choice; the statement at `answer_index` is the only
/// correct one.
pub fn convert_multiple_choice(problem: &MultipleChoiceProblem) -> Result<StatementGroup, ForgeError> {
    problem.check()?;
    let statements = problem
        .choices
        .iter()
        .enumerate()
        .map(|(i, choice)| {
            let text = apply_conversion_rule(&problem.question, choice, problem.question_form)?;
            Ok(Statement::new(text, i == problem.answer_index, Origin::QuestionChoice, &problem.id))
        })
        .collect::<Result<Vec<_>, ForgeError>>()?;
    Ok(StatementGroup::new(&problem.id, GroupKind::MultipleChoice, statements))
}

/// A single statement built with "yes" as the choice, labeled with the
/// problem's answer.
pub fn convert_boolean(problem: &BooleanProblem) -> Result<StatementGroup, ForgeError> {
    if problem.question.trim().is_empty() {
        return Err(ForgeError::InvalidProblem(format!("{}: empty question", problem.id)));
    }
    let text = declarative_from_yes_no(&problem.question);
    if text.trim().is_empty() {
        return Err(ForgeError::ConversionFailure {
            reason: format!("empty statement for {:?}", problem.question),
        });
    }
    Ok(StatementGroup::new(
        &problem.id,
        GroupKind::Boolean,
        vec![Statement::new(text, problem.answer, Origin::Boolean, &problem.id)],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cannon() -> MultipleChoiceProblem {
        MultipleChoiceProblem {
            id: "csqa-cannon".into(),
            question: "What would someone wear to protect themselves from a cannon?".into(),
            choices: ["ungulate", "bomber", "body armor", "tank", "hat"].map(String::from).to_vec(),
            answer_index: 2,
            question_form: QuestionForm::Interrogative,
        }
    }

    #[test]
    fn cannon_group() {
        let g = convert_multiple_choice(&cannon()).unwrap();
        assert_eq!(g.kind, GroupKind::MultipleChoice);
        assert_eq!(g.statements[2].text, "Someone would wear body armor to protect themselves from a cannon.");
        assert!(g.statements[2].label);
        assert_eq!(g.statements[0].text, "Someone would wear an ungulate to protect themselves from a cannon.");
        assert!(!g.statements[0].label);
        assert_eq!(g.correct_count(), 1);
        assert!(g.validate().is_ok());
    }

    #[test]
    fn label_placement() {
        let p = MultipleChoiceProblem {
            id: "p".into(),
            question: "The man opened the door".into(),
            choices: vec!["and walked in.".into(), "and flew away.".into()],
            answer_index: 0,
            question_form: QuestionForm::Continuation,
        };
        let labels: Vec<bool> = convert_multiple_choice(&p).unwrap().statements.iter().map(|s| s.label).collect();
        assert_eq!(labels, vec![true, false]);
    }

    #[test]
    fn bad_answer_index_rejected() {
        let mut p = cannon();
        p.answer_index = 5;
        assert!(matches!(convert_multiple_choice(&p), Err(ForgeError::InvalidProblem(_))));
        p.choices.truncate(1);
        p.answer_index = 0;
        assert!(matches!(convert_multiple_choice(&p), Err(ForgeError::InvalidProblem(_))));
    }

    #[test]
    fn dog_boolean() {
        let g = convert_boolean(&BooleanProblem {
            id: "sqa-dog".into(),
            question: "Can an average dog follow an instruction manual?".into(),
            answer: false,
        })
        .unwrap();
        assert_eq!(g.kind, GroupKind::Boolean);
        assert_eq!(g.statements.len(), 1);
        assert_eq!(g.statements[0].text, "An average dog can follow an instruction manual.");
        assert!(!g.statements[0].label);
        assert!(g.validate().is_ok());
    }

    #[test]
    fn yes_answer_passes_through() {
        let g = convert_boolean(&BooleanProblem {
            id: "b".into(),
            question: "Is the sun hot?".into(),
            answer: true,
        })
        .unwrap();
        assert!(g.statements[0].label);
    }
}
