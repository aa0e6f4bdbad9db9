//! Whitespace-and-punctuation tokenizer with a corpus-built vocabulary.
//! Every encoded sequence ends with the reserved EOS id.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::types::Statement;

pub type TokenId = u32;

pub const EOS: TokenId = 0;
pub const UNK: TokenId = 1;
const EOS_TOKEN: &str = "</s>";
const UNK_TOKEN: &str = "<unk>";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "TokenizerRepr", into = "TokenizerRepr")]
pub struct Tokenizer {
    vocab: Vec<String>,
    index: HashMap<String, TokenId>,
}

#[derive(Serialize, Deserialize)]
struct TokenizerRepr {
    vocab: Vec<String>,
}

impl TryFrom<TokenizerRepr> for Tokenizer {
    type Error = String;
    fn try_from(r: TokenizerRepr) -> Result<Self, String> {
        if r.vocab.len() < 2 || r.vocab[0] != EOS_TOKEN || r.vocab[1] != UNK_TOKEN {
            return Err("vocabulary must start with the EOS and UNK entries".into());
        }
        Ok(Self::from_vocab(r.vocab))
    }
}

impl From<Tokenizer> for TokenizerRepr {
    fn from(t: Tokenizer) -> Self {
        TokenizerRepr { vocab: t.vocab }
    }
}

/// Lowercased word and punctuation pieces of `text`.
pub fn split(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut word = String::new();
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        let inner_apostrophe = c == '\''
            && !word.is_empty()
            && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
        if c.is_alphanumeric() || inner_apostrophe {
            word.extend(c.to_lowercase());
            continue;
        }
        if !word.is_empty() {
            out.push(std::mem::take(&mut word));
        }
        if !c.is_whitespace() {
            out.push(c.to_string());
        }
    }
    if !word.is_empty() {
        out.push(word);
    }
    out
}

impl Tokenizer {
    fn from_vocab(vocab: Vec<String>) -> Self {
        let index = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as TokenId))
            .collect();
        Self { vocab, index }
    }

    /// Builds a vocabulary from every piece in `texts`, in sorted order.
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a str>) -> Self {
        let pieces: BTreeSet<String> = texts.into_iter().flat_map(split).collect();
        let mut vocab = vec![EOS_TOKEN.to_string(), UNK_TOKEN.to_string()];
        vocab.extend(pieces.into_iter().filter(|p| p != EOS_TOKEN && p != UNK_TOKEN));
        Self::from_vocab(vocab)
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn id(&self, piece: &str) -> TokenId {
        self.index.get(piece).copied().unwrap_or(UNK)
    }

    /// Token ids of `text` followed by EOS, at most `max_len` long.
    pub fn encode(&self, text: &str, max_len: usize) -> Vec<TokenId> {
        let mut ids: Vec<TokenId> = split(text).iter().map(|p| self.id(p)).collect();
        ids.push(EOS);
        truncate(ids, max_len)
    }
}

/// Keeps at most `max_len` tokens, the last of which is EOS.
pub fn truncate(mut tokens: Vec<TokenId>, max_len: usize) -> Vec<TokenId> {
    let max_len = max_len.max(1);
    if tokens.last() != Some(&EOS) {
        tokens.push(EOS);
    }
    if tokens.len() > max_len {
        tokens.truncate(max_len - 1);
        tokens.push(EOS);
    }
    tokens
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenizedStatement {
    pub statement: Statement,
    pub tokens: Vec<TokenId>,
}

pub fn truncate_statement(statement: &Statement, tokenizer: &Tokenizer, max_len: usize) -> TokenizedStatement {
    TokenizedStatement {
        statement: statement.clone(),
        tokens: tokenizer.encode(&statement.text, max_len),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Origin;

    #[test]
    fn splits_words_and_punctuation() {
        assert_eq!(split("Arnold doesn't like to wait."), ["arnold", "doesn't", "like", "to", "wait", "."]);
        assert_eq!(split("a,b  c!"), ["a", ",", "b", "c", "!"]);
    }

    #[test]
    fn vocabulary_is_sorted_and_reserved() {
        let t = Tokenizer::build(["b a", "c a."]);
        assert_eq!(t.vocab(), ["</s>", "<unk>", ".", "a", "b", "c"]);
        assert_eq!(t.encode("a zebra", 128), vec![3, UNK, EOS]);
    }

    fn statement_of(n: usize) -> Statement {
        let text = (0..n).map(|i| format!("w{i}")).collect::<Vec<_>>().join(" ");
        Statement::new(text, true, Origin::Boolean, "s")
    }

    #[test]
    fn truncation_keeps_eos() {
        let long = statement_of(200);
        let tok = Tokenizer::build([long.text.as_str()]);
        let short = truncate_statement(&statement_of(10), &tok, 128);
        assert_eq!(short.tokens.len(), 11);
        let cut = truncate_statement(&long, &tok, 128);
        assert_eq!(cut.tokens.len(), 128);
        assert_eq!(*cut.tokens.last().unwrap(), EOS);
        assert_eq!(cut.tokens[..127], tok.encode(&long.text, 1000)[..127]);
        assert_eq!(truncate_statement(&long, &tok, 1).tokens, vec![EOS]);
    }

    #[test]
    fn serde_round_trip_rebuilds_index() {
        let t = Tokenizer::build(["hello world"]);
        let json = serde_json::to_string(&t).unwrap();
        let back: Tokenizer = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.id("world"), t.id("world"));
        assert!(serde_json::from_str::<Tokenizer>(r#"{"vocab":["x"]}"#).is_err());
    }
}
