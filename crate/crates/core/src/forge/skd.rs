use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ForgeError;
use crate::types::{Origin, Statement};

/// A semi-structured (head, relation, tail) event triple with its
/// annotation score.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KnowledgeTriple {
    #[serde(default)]
    pub id: String,
    pub head: String,
    pub relation: String,
    pub tail: String,
    pub valid: i64,
}

// Relation connectives; the tail follows the connective.
const TEMPLATES: &[(&str, &str)] = &[
    ("xIntent", "Because PersonX wanted"),
    ("xNeed", "Before, PersonX needed"),
    ("xAttr", "PersonX is seen as"),
    ("xEffect", "As a result, PersonX"),
    ("xReact", "As a result, PersonX feels"),
    ("xWant", "As a result, PersonX wants"),
    ("oEffect", "As a result, others"),
    ("oReact", "As a result, others feel"),
    ("oWant", "As a result, others want"),
    ("HinderedBy", "This would not happen if"),
    ("isAfter", "This happens after"),
    ("isBefore", "This happens before"),
    ("Causes", "This causes"),
];

const PLACEHOLDERS: [&str; 3] = ["PersonX", "PersonY", "PersonZ"];

pub fn supported_relations() -> impl Iterator<Item = &'static str> {
    TEMPLATES.iter().map(|(r, _)| *r)
}

fn sentence(s: &str) -> String {
    let s = s.trim();
    if s.ends_with(['.', '!', '?']) {
        s.to_string()
    } else {
        format!("{s}.")
    }
}

/// Renders a triple as "<head>. <connective> <tail>." with person
/// placeholders replaced by distinct names drawn from `name_pool`.
pub fn render_skd_triple<R: Rng + ?Sized>(
    triple: &KnowledgeTriple,
    name_pool: &[String],
    rng: &mut R,
) -> Result<Statement, ForgeError> {
    let connective = TEMPLATES
        .iter()
        .find(|(r, _)| *r == triple.relation)
        .map(|(_, t)| *t)
        .ok_or_else(|| ForgeError::UnknownRelation(triple.relation.clone()))?;
    let mut text = format!("{} {} {}", sentence(&triple.head), connective, sentence(&triple.tail));

    let used: Vec<&str> = PLACEHOLDERS.iter().copied().filter(|p| text.contains(p)).collect();
    if name_pool.len() < used.len() {
        return Err(ForgeError::InsufficientPool {
            needed: used.len(),
            available: name_pool.len(),
        });
    }
    if !used.is_empty() {
        let picks = index::sample(rng, name_pool.len(), used.len()).into_vec();
        for (placeholder, pick) in used.iter().zip(picks) {
            text = text.replace(placeholder, name_pool[pick].trim());
        }
    }
    Ok(Statement::new(text, triple.valid > 0, Origin::Boolean, &triple.id))
}
