//! Rule-based conversion of (question, choice) pairs into declarative
//! statements.
//!
//! Interrogative questions go through a small wh-word / auxiliary rule table
//! rather than a learned rewriter. Output quality is a data concern; the
//! rules only guarantee a non-empty sentence for every input.

use serde::{Deserialize, Serialize};

use super::ForgeError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionForm {
    Interrogative,
    Cloze,
    Continuation,
    ChoicesOnly,
}

const WH_WORDS: &[&str] = &["what", "which", "who", "whom", "where", "when", "why", "how"];
const COPULAS: &[&str] = &["is", "are", "was", "were"];
const AUXILIARIES: &[&str] = &[
    "is", "are", "was", "were", "can", "could", "will", "would", "shall", "should", "may", "might", "must", "do",
    "does", "did", "has", "have", "had",
];
const DETERMINERS: &[&str] = &[
    "a", "an", "the", "this", "that", "these", "those", "my", "your", "his", "her", "its", "our", "their", "some",
    "any", "every", "each", "most", "many", "all", "no", "several", "both",
];
const PRONOUNS: &[&str] = &[
    "i", "you", "he", "she", "it", "we", "they", "someone", "somebody", "something", "anyone", "anybody",
    "everyone", "everybody", "people", "one", "nobody",
];
const PREPOSITIONS: &[&str] = &[
    "of", "in", "on", "at", "to", "for", "with", "from", "by", "about", "into", "than", "as", "under", "over",
];
// Common base-form verbs; used to find where a determiner-led subject ends.
const BASE_VERBS: &[&str] = &[
    "be", "have", "do", "say", "get", "make", "go", "know", "take", "see", "come", "think", "look", "want", "give",
    "use", "find", "tell", "ask", "work", "seem", "feel", "try", "leave", "call", "keep", "let", "begin", "help",
    "talk", "turn", "start", "show", "hear", "play", "run", "move", "like", "live", "believe", "hold", "bring",
    "happen", "write", "provide", "sit", "stand", "lose", "pay", "meet", "include", "continue", "set", "learn",
    "change", "lead", "understand", "watch", "follow", "stop", "create", "speak", "read", "allow", "add", "spend",
    "grow", "open", "walk", "win", "offer", "remember", "love", "consider", "appear", "buy", "wait", "serve",
    "die", "send", "expect", "build", "stay", "fall", "cut", "reach", "kill", "remain", "suggest", "raise", "pass",
    "sell", "require", "report", "decide", "pull", "eat", "drink", "wear", "swim", "fly", "climb", "jump", "sleep",
    "cook", "carry", "cause", "contain", "survive", "breathe", "float", "sink", "melt", "freeze", "burn", "break",
    "fit", "hurt", "protect", "store", "catch", "chase", "bark", "sing", "dance", "drive", "ride", "throw",
    "hide", "lift", "push", "cross", "fix", "clean", "wash", "feed", "produce", "absorb", "reflect", "travel",
    "count", "speak", "understand", "recognize", "lay", "hatch", "bite", "digest", "see", "smell", "taste",
];
const MASS_NOUNS: &[&str] = &[
    "water", "milk", "food", "money", "air", "sand", "rain", "snow", "ice", "information", "furniture", "music",
    "bread", "rice", "salt", "sugar", "oil", "gold", "silver", "wood", "grass", "fire", "energy", "light", "heat",
    "electricity", "soil", "mud", "dirt", "coffee", "tea", "juice", "meat", "cheese", "butter", "paper", "glass",
    "steel", "iron", "plastic", "cotton", "wool", "clothing", "equipment", "advice", "news", "homework", "love",
    "happiness", "anger", "fear", "sadness", "pain", "time", "space", "weather", "traffic", "oxygen", "carbon",
    "gravity", "blood", "sweat", "soap", "shampoo", "toothpaste", "lava", "smoke", "steam", "wind", "sunlight",
];

fn is_in(list: &[&str], word: &str) -> bool {
    let w = word.to_lowercase();
    list.contains(&w.as_str())
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn starts_uppercase(word: &str) -> bool {
    word.chars().next().is_some_and(char::is_uppercase)
}

fn starts_with_vowel(word: &str) -> bool {
    word.chars()
        .next()
        .is_some_and(|c| matches!(c.to_ascii_lowercase(), 'a' | 'e' | 'i' | 'o' | 'u'))
}

/// `"a"` or `"an"` for the word that follows.
pub fn indefinite_article(next_word: &str) -> &'static str {
    if starts_with_vowel(next_word) {
        "an"
    } else {
        "a"
    }
}

/// Prefixes a bare singular count noun with an indefinite article.
///
/// Only single lowercase words get one; multi-word phrases, plurals (words
/// ending in a single `s`), mass nouns and words that already are
/// determiners are returned unchanged.
pub fn with_article(choice: &str) -> String {
    let choice = choice.trim();
    let single_word = !choice.is_empty() && !choice.contains(char::is_whitespace);
    let bare = choice.chars().all(|c| c.is_lowercase() || c == '-');
    let plural = choice.ends_with('s') && !choice.ends_with("ss");
    if single_word && bare && !plural && !is_in(DETERMINERS, choice) && !is_in(PRONOUNS, choice) && !is_in(MASS_NOUNS, choice)
    {
        format!("{} {}", indefinite_article(choice), choice)
    } else {
        choice.to_string()
    }
}

fn third_person(verb: &str) -> String {
    let lower = verb.to_lowercase();
    match lower.as_str() {
        "be" => return "is".into(),
        "have" => return "has".into(),
        "do" => return "does".into(),
        "go" => return "goes".into(),
        _ => {}
    }
    let bytes = lower.as_bytes();
    let n = bytes.len();
    if n >= 2 && lower.ends_with('y') && !matches!(bytes[n - 2], b'a' | b'e' | b'i' | b'o' | b'u') {
        format!("{}ies", &verb[..verb.len() - 1])
    } else if ["s", "sh", "ch", "x", "z", "o"].iter().any(|e| lower.ends_with(e)) {
        format!("{verb}es")
    } else {
        format!("{verb}s")
    }
}

/// Number of leading words of `words` that form the subject noun phrase.
fn subject_len(words: &[&str], copula: bool) -> usize {
    if words.is_empty() {
        return 0;
    }
    let first = words[0];
    if is_in(PRONOUNS, first) {
        return 1;
    }
    if starts_uppercase(first) && !is_in(DETERMINERS, first) {
        let run = words.iter().take_while(|w| starts_uppercase(w)).count();
        return run.min(words.len());
    }
    let determiner_led = is_in(DETERMINERS, first);
    let fallback = if determiner_led { 2 } else { 1 }.min(words.len());
    if copula {
        // Subject runs until the next determiner or preposition.
        words
            .iter()
            .enumerate()
            .skip(1)
            .find(|(_, w)| is_in(DETERMINERS, w) || is_in(PREPOSITIONS, w))
            .map(|(i, _)| i.max(fallback))
            .unwrap_or(fallback)
    } else {
        let start = if determiner_led { 2 } else { 1 };
        words
            .iter()
            .enumerate()
            .skip(start)
            .take(4)
            .find(|(_, w)| is_in(BASE_VERBS, w))
            .map(|(i, _)| i)
            .unwrap_or(fallback)
    }
}

fn join(words: &[&str]) -> String {
    words.join(" ")
}

fn finish(sentence: String) -> String {
    let mut s = sentence.trim().trim_end_matches(['?', ' ']).to_string();
    if !s.ends_with(['.', '!']) {
        s.push('.');
    }
    capitalize(&s)
}

/// Lowercases a fronted word unless it looks like a proper noun or "I".
fn unfront(word: &str) -> String {
    if word == "I" {
        word.to_string()
    } else {
        word.to_lowercase()
    }
}

fn subject_text(words: &[&str]) -> String {
    let mut text = join(words);
    if let Some(first) = words.first() {
        if is_in(DETERMINERS, first) || is_in(PRONOUNS, first) {
            text = capitalize(&text);
        }
    }
    text
}

/// Rewrites a yes/no question as the affirmative declarative sentence.
///
/// "Can an average dog follow an instruction manual?" becomes
/// "An average dog can follow an instruction manual."
pub fn declarative_from_yes_no(question: &str) -> String {
    let trimmed = question.trim().trim_end_matches('?').trim();
    let words: Vec<&str> = trimmed.split_whitespace().collect();
    if words.is_empty() {
        return String::new();
    }
    let lower_first = words[0].to_lowercase();
    if lower_first == "is" && words.len() > 3 && words[1].eq_ignore_ascii_case("it") && words[2] == "true" && words[3] == "that" {
        return finish(join(&words[4..]));
    }
    if !is_in(AUXILIARIES, &lower_first) || words.len() < 2 {
        return finish(trimmed.to_string());
    }
    let aux = lower_first.as_str();
    let rest = &words[1..];
    let n = subject_len(rest, COPULAS.contains(&aux));
    let subject = subject_text(&rest[..n]);
    let tail = &rest[n..];
    let sentence = match aux {
        "do" | "does" if !tail.is_empty() => {
            let verb = if aux == "does" {
                third_person(tail[0])
            } else {
                tail[0].to_string()
            };
            [subject, verb, join(&tail[1..])].join(" ")
        }
        _ => [subject, aux.to_string(), join(tail)].join(" "),
    };
    finish(sentence)
}

/// Interrogative rewrite for wh-questions; falls back to appending the
/// choice to the question stem.
fn interrogative(question: &str, choice: &str) -> String {
    let trimmed = question.trim().trim_end_matches('?').trim();
    let words: Vec<&str> = trimmed.split_whitespace().collect();
    let choice = choice.trim().trim_end_matches('.');
    let fallback = || finish(format!("{trimmed} {choice}"));
    if words.is_empty() {
        return finish(choice.to_string());
    }
    let wh = words[0].to_lowercase();
    if !WH_WORDS.contains(&wh.as_str()) {
        if is_in(AUXILIARIES, &wh) && choice.eq_ignore_ascii_case("yes") {
            return declarative_from_yes_no(question);
        }
        return fallback();
    }
    // "Which animal ..." keeps the noun with the wh-word.
    let mut idx = 1;
    if wh == "which" && words.len() > 2 && !is_in(AUXILIARIES, words[1]) {
        idx = 2;
    }
    if idx >= words.len() {
        return fallback();
    }
    let next = words[idx].to_lowercase();
    let object = match wh.as_str() {
        "who" | "whom" => choice.to_string(),
        _ => with_article(choice),
    };

    if !is_in(AUXILIARIES, &next) {
        // Subject question: "What causes rain?" -> "<choice> causes rain."
        return match wh.as_str() {
            "what" | "which" | "who" => finish(format!("{} {}", capitalize(&object), join(&words[idx..]))),
            _ => fallback(),
        };
    }

    let aux = next.as_str();
    let after = &words[idx + 1..];
    if COPULAS.contains(&aux) {
        if after.is_empty() {
            return fallback();
        }
        let rest = capitalize(&join(after));
        return match wh.as_str() {
            "what" | "which" | "who" | "whom" => finish(format!("{rest} {aux} {object}")),
            "where" => finish(format!("{rest} {aux} in {object}")),
            _ => fallback(),
        };
    }

    let n = subject_len(after, false);
    if n == 0 || n >= after.len() {
        // No verb after the auxiliary: it is the main verb ("Which animal has stripes?").
        return match wh.as_str() {
            "what" | "which" | "who" => finish(format!("{} {}", capitalize(&object), join(&words[idx..]))),
            _ => fallback(),
        };
    }
    let subject = subject_text(&after[..n]);
    let verb_raw = after[n];
    let rest = join(&after[n + 1..]);
    let (aux_out, verb) = match aux {
        "do" => (None, verb_raw.to_string()),
        "does" => (None, third_person(verb_raw)),
        _ => (Some(unfront(aux)), verb_raw.to_string()),
    };
    let mut head = subject;
    if let Some(a) = aux_out {
        head.push(' ');
        head.push_str(&a);
    }
    head.push(' ');
    head.push_str(&verb);
    let sentence = match wh.as_str() {
        "what" | "which" | "who" | "whom" => [head, object, rest].join(" "),
        "where" => [head, rest, format!("in {object}")].join(" "),
        "when" => [head, rest, choice.to_string()].join(" "),
        "why" => [head, rest, format!("because {choice}")].join(" "),
        _ => return fallback(),
    };
    finish(sentence.split_whitespace().collect::<Vec<_>>().join(" "))
}

fn cloze(question: &str, choice: &str) -> Result<String, ForgeError> {
    let start = question.find('_').ok_or_else(|| ForgeError::ConversionFailure {
        reason: format!("cloze question has no blank: {question:?}"),
    })?;
    let end = start + question[start..].chars().take_while(|&c| c == '_').count();
    let choice = choice.trim();
    let mut before = question[..start].to_string();
    // a/an agreement with the substituted word.
    let trimmed = before.trim_end();
    let last_word_start = trimmed.rfind(char::is_whitespace).map_or(0, |i| i + 1);
    let last = &trimmed[last_word_start..];
    if matches!(last, "a" | "an" | "A" | "An") && trimmed.len() == before.len() - 1 {
        let mut article = indefinite_article(choice).to_string();
        if starts_uppercase(last) {
            article = capitalize(&article);
        }
        before = format!("{}{} ", &trimmed[..last_word_start], article);
    }
    Ok(format!("{before}{choice}{}", &question[end..]))
}

/// Builds the declarative statement for one (question, choice) pair.
pub fn apply_conversion_rule(question: &str, choice: &str, form: QuestionForm) -> Result<String, ForgeError> {
    let out = match form {
        QuestionForm::Cloze => cloze(question, choice)?,
        QuestionForm::Continuation => format!("{} {}", question.trim_end(), choice.trim_start()),
        QuestionForm::ChoicesOnly => choice.to_string(),
        QuestionForm::Interrogative => interrogative(question, choice),
    };
    if out.trim().is_empty() {
        return Err(ForgeError::ConversionFailure {
            reason: format!("empty statement for question {question:?} and choice {choice:?}"),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const CANNON: &str = "What would someone wear to protect themselves from a cannon?";

    #[test]
    fn wh_object_insertion_with_articles() {
        let cases = [
            ("ungulate", "Someone would wear an ungulate to protect themselves from a cannon."),
            ("bomber", "Someone would wear a bomber to protect themselves from a cannon."),
            ("body armor", "Someone would wear body armor to protect themselves from a cannon."),
            ("tank", "Someone would wear a tank to protect themselves from a cannon."),
            ("hat", "Someone would wear a hat to protect themselves from a cannon."),
        ];
        for (choice, expected) in cases {
            assert_eq!(apply_conversion_rule(CANNON, choice, QuestionForm::Interrogative).unwrap(), expected);
        }
    }

    #[test]
    fn yes_no_fronting_is_reversed() {
        assert_eq!(
            declarative_from_yes_no("Can an average dog follow an instruction manual?"),
            "An average dog can follow an instruction manual."
        );
        assert_eq!(declarative_from_yes_no("Is the sky blue?"), "The sky is blue.");
        assert_eq!(declarative_from_yes_no("Is a tomato a fruit?"), "A tomato is a fruit.");
        assert_eq!(declarative_from_yes_no("Does a dog bark?"), "A dog barks.");
        assert_eq!(declarative_from_yes_no("Do penguins fly?"), "Penguins fly.");
        assert_eq!(declarative_from_yes_no("Can Barack Obama swim?"), "Barack Obama can swim.");
        assert_eq!(declarative_from_yes_no("Is it true that fish swim?"), "Fish swim.");
    }

    #[test]
    fn other_wh_templates() {
        let f = QuestionForm::Interrogative;
        assert_eq!(
            apply_conversion_rule("What is the capital of France?", "Paris", f).unwrap(),
            "The capital of France is Paris."
        );
        assert_eq!(
            apply_conversion_rule("What do people use to cut paper?", "scissors", f).unwrap(),
            "People use scissors to cut paper."
        );
        assert_eq!(
            apply_conversion_rule("Where would you find a fish?", "ocean", f).unwrap(),
            "You would find a fish in an ocean."
        );
        assert_eq!(apply_conversion_rule("Who wrote Hamlet?", "Shakespeare", f).unwrap(), "Shakespeare wrote Hamlet.");
        assert_eq!(
            apply_conversion_rule("Which animal has stripes?", "zebra", f).unwrap(),
            "A zebra has stripes."
        );
        assert_eq!(
            apply_conversion_rule("Why do people cry?", "they are sad", f).unwrap(),
            "People cry because they are sad."
        );
    }

    #[test]
    fn unmatched_questions_fall_back_to_appending() {
        let out = apply_conversion_rule("How do you open a jar?", "twist the lid", QuestionForm::Interrogative).unwrap();
        assert_eq!(out, "How do you open a jar twist the lid.");
    }

    #[test]
    fn cloze_substitutes_blank() {
        assert_eq!(
            apply_conversion_rule("A cube has ___ faces.", "six", QuestionForm::Cloze).unwrap(),
            "A cube has six faces."
        );
        assert_eq!(
            apply_conversion_rule("She ate a _ for lunch.", "apple", QuestionForm::Cloze).unwrap(),
            "She ate an apple for lunch."
        );
    }

    #[test]
    fn cloze_without_blank_fails() {
        let err = apply_conversion_rule("No blank here.", "x", QuestionForm::Cloze).unwrap_err();
        assert!(matches!(err, ForgeError::ConversionFailure { .. }));
    }

    #[test]
    fn continuation_joins_with_one_space() {
        assert_eq!(
            apply_conversion_rule("The man opened the door", "and walked in.", QuestionForm::Continuation).unwrap(),
            "The man opened the door and walked in."
        );
        assert_eq!(
            apply_conversion_rule("The man opened the door  ", "  and walked in.", QuestionForm::Continuation).unwrap(),
            "The man opened the door and walked in."
        );
    }

    #[test]
    fn choices_only_is_verbatim() {
        let c = "Rubber stamps provide a way to make messages stand out.";
        assert_eq!(apply_conversion_rule("", c, QuestionForm::ChoicesOnly).unwrap(), c);
        assert!(apply_conversion_rule("", "  ", QuestionForm::ChoicesOnly).is_err());
    }

    #[test]
    fn article_rule() {
        assert_eq!(with_article("ungulate"), "an ungulate");
        assert_eq!(with_article("bomber"), "a bomber");
        assert_eq!(with_article("body armor"), "body armor");
        assert_eq!(with_article("scissors"), "scissors");
        assert_eq!(with_article("glass"), "glass");
        assert_eq!(with_article("dress"), "a dress");
        assert_eq!(with_article("water"), "water");
        assert_eq!(with_article("Paris"), "Paris");
    }

    #[test]
    fn third_person_forms() {
        assert_eq!(third_person("bark"), "barks");
        assert_eq!(third_person("fly"), "flies");
        assert_eq!(third_person("play"), "plays");
        assert_eq!(third_person("watch"), "watches");
        assert_eq!(third_person("have"), "has");
    }
}
