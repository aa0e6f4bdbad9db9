use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ForgeError;
use crate::types::{GroupKind, Origin, Statement, StatementGroup};

/// A knowledge-base row: a correct statement and the subject it starts with.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbEntry {
    pub id: String,
    pub subject: String,
    pub full_text: String,
}

/// Byte length of the prefix of `text` that matches `subject`
/// case-insensitively, if any.
fn subject_prefix_len(text: &str, subject: &str) -> Option<usize> {
    let mut text_chars = text.char_indices();
    let mut end = 0;
    for s in subject.chars() {
        let (i, t) = text_chars.next()?;
        if !t.to_lowercase().eq(s.to_lowercase()) {
            return None;
        }
        end = i + t.len_utf8();
    }
    Some(end)
}

fn match_case(replacement: &str, like: &str) -> String {
    let upper = like.chars().next().is_some_and(char::is_uppercase);
    let mut chars = replacement.chars();
    match chars.next() {
        Some(c) if upper => c.to_uppercase().chain(chars).collect(),
        Some(c) => c.to_lowercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Builds a statement group from one KB entry: the original statement
/// (correct) followed by `k` copies whose subject is replaced with distinct
/// subjects drawn from `subject_pool` (incorrect).
///
/// Replacements are emitted in pool order, so the output depends only on
/// which subjects the generator picks.
pub fn perturb_kb_entry<R: Rng + ?Sized>(
    entry: &KbEntry,
    subject_pool: &[String],
    k: usize,
    rng: &mut R,
) -> Result<StatementGroup, ForgeError> {
    if k == 0 {
        return Err(ForgeError::InvalidProblem(format!(
            "{}: k must be at least 1 for a multiple-choice group",
            entry.id
        )));
    }
    let text = entry.full_text.trim();
    let subject = entry.subject.trim();
    let span = subject_prefix_len(text, subject).filter(|&n| n > 0).ok_or_else(|| {
        ForgeError::InvalidProblem(format!("{}: text does not start with subject {subject:?}", entry.id))
    })?;

    let own = subject.to_lowercase();
    let mut seen = vec![own];
    let mut candidates: Vec<&str> = Vec::new();
    for s in subject_pool {
        let s = s.trim();
        let key = s.to_lowercase();
        if !s.is_empty() && !seen.contains(&key) {
            seen.push(key);
            candidates.push(s);
        }
    }
    if candidates.len() < k {
        return Err(ForgeError::InsufficientPool {
            needed: k,
            available: candidates.len(),
        });
    }
    let mut picked = index::sample(rng, candidates.len(), k).into_vec();
    picked.sort_unstable();

    let original_prefix = &text[..span];
    let remainder = &text[span..];
    let mut statements = vec![Statement::new(text, true, Origin::KbOriginal, &entry.id)];
    statements.extend(picked.into_iter().map(|i| {
        let replaced = format!("{}{}", match_case(candidates[i], original_prefix), remainder);
        Statement::new(replaced, false, Origin::KbPerturbed, &entry.id)
    }));
    Ok(StatementGroup::new(&entry.id, GroupKind::MultipleChoice, statements))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn stamps() -> KbEntry {
        KbEntry {
            id: "gkb-1".into(),
            subject: "Rubber stamps".into(),
            full_text: "Rubber stamps provide a way to make messages stand out.".into(),
        }
    }

    fn pool(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn rubber_stamps_group() {
        let pool = pool(&["Arabic numbers", "Bandages", "Meat tenderizers"]);
        let g = perturb_kb_entry(&stamps(), &pool, 3, &mut seed::rng(0)).unwrap();
        let texts: Vec<&str> = g.statements.iter().map(|s| s.text.as_str()).collect();
        assert_eq!(
            texts,
            [
                "Rubber stamps provide a way to make messages stand out.",
                "Arabic numbers provide a way to make messages stand out.",
                "Bandages provide a way to make messages stand out.",
                "Meat tenderizers provide a way to make messages stand out.",
            ]
        );
        let labels: Vec<bool> = g.statements.iter().map(|s| s.label).collect();
        assert_eq!(labels, [true, false, false, false]);
        assert_eq!(g.statements[1].origin, Origin::KbPerturbed);
        assert!(g.validate().is_ok());
    }

    #[test]
    fn same_seed_same_group() {
        let pool = pool(&["Cats", "Dogs", "Birds", "Trees", "Rivers", "Clocks"]);
        let a = perturb_kb_entry(&stamps(), &pool, 3, &mut seed::rng(42)).unwrap();
        let b = perturb_kb_entry(&stamps(), &pool, 3, &mut seed::rng(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn own_subject_and_duplicates_are_not_candidates() {
        let pool = pool(&["rubber stamps", "Cats", "cats"]);
        let err = perturb_kb_entry(&stamps(), &pool, 2, &mut seed::rng(1)).unwrap_err();
        assert!(matches!(err, ForgeError::InsufficientPool { needed: 2, available: 1 }));
    }

    #[test]
    fn zero_k_rejected() {
        let err = perturb_kb_entry(&stamps(), &pool(&["Cats"]), 0, &mut seed::rng(1)).unwrap_err();
        assert!(matches!(err, ForgeError::InvalidProblem(_)));
    }

    #[test]
    fn subject_match_is_case_insensitive() {
        let e = KbEntry {
            id: "x".into(),
            subject: "rubber STAMPS".into(),
            full_text: "Rubber stamps are useful.".into(),
        };
        let g = perturb_kb_entry(&e, &pool(&["bandages"]), 1, &mut seed::rng(1)).unwrap();
        assert_eq!(g.statements[1].text, "Bandages are useful.");
    }

    #[test]
    fn text_must_start_with_subject() {
        let e = KbEntry {
            id: "x".into(),
            subject: "Bandages".into(),
            full_text: "Rubber stamps are useful.".into(),
        };
        assert!(perturb_kb_entry(&e, &pool(&["Cats"]), 1, &mut seed::rng(1)).is_err());
    }
}
