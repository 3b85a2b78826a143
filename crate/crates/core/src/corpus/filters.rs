use std::fs;
use std::path::Path;

use regex::Regex;

use super::{sentence_bleu, Document, Sentence};
use crate::error::{Error, Result};
use crate::text::tokenize;

/// Repetitive one-sentence Wikipedia stub ("X is a city in Y.").
pub const CITY_PATTERN: &str = r"^.* is a city in .*$";

/// A candidate (simple, complex) sentence pair extracted from a document pair.
#[derive(Debug, Clone, PartialEq)]
pub struct SentencePair {
    pub pair_id: String,
    pub simple: Sentence,
    pub complex: Sentence,
}

impl SentencePair {
    pub fn new(pair_id: impl Into<String>, simple: Sentence, complex: Sentence) -> Self {
        SentencePair {
            pair_id: pair_id.into(),
            simple,
            complex,
        }
    }

    /// Standalone pair from raw text, indices zeroed.
    pub fn from_texts(pair_id: impl Into<String>, simple: &str, complex: &str) -> Self {
        let sentence = |text: &str| Sentence {
            text: text.to_string(),
            tokens: tokenize(text),
            para_index: 0,
            sent_index: 0,
        };
        SentencePair::new(pair_id, sentence(simple), sentence(complex))
    }
}

/// Drops sentences with fewer than 4 tokens or ending in a colon, then
/// drops paragraphs left empty and renumbers sentences.
pub fn preprocess_wiki(doc: &Document) -> Document {
    let paragraphs: Vec<Vec<&str>> = doc
        .paragraphs
        .iter()
        .map(|p| {
            p.iter()
                .filter(|s| s.tokens.len() >= 4 && !s.text.trim_end().ends_with(':'))
                .map(|s| s.text.as_str())
                .collect()
        })
        .collect();
    Document::from_texts(doc.doc_id.clone(), doc.level, &paragraphs)
        .expect("retained sentences were already non-empty")
}

/// One regex per line; blank lines and `#` comments are skipped.
pub fn parse_patterns(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

pub fn load_patterns(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_patterns(&text))
}

/// Removes pairs whose simple sentence matches any of `patterns`.
pub fn pattern_filter<P: AsRef<str>>(
    pairs: Vec<SentencePair>,
    patterns: &[P],
) -> Result<Vec<SentencePair>> {
    let compiled = patterns
        .iter()
        .map(|p| {
            Regex::new(p.as_ref()).map_err(|e| Error::InvalidPattern {
                pattern: p.as_ref().to_string(),
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairs
        .into_iter()
        .filter(|pair| !compiled.iter().any(|re| re.is_match(&pair.simple.text)))
        .collect())
}

/// Keeps pairs with `low <= BLEU(simple, complex) <= high`.
pub fn bleu_filter(pairs: Vec<SentencePair>, low: f64, high: f64) -> Result<Vec<SentencePair>> {
    if !(0.0..=1.0).contains(&low) || !(0.0..=1.0).contains(&high) || low >= high {
        return Err(Error::InvalidArgument(format!(
            "bleu bounds must satisfy 0 <= low < high <= 1, got {low}, {high}"
        )));
    }
    let mut kept = Vec::with_capacity(pairs.len());
    for pair in pairs {
        let score = sentence_bleu(&pair.simple.tokens, &pair.complex.tokens)?;
        if (low..=high).contains(&score) {
            kept.push(pair);
        }
    }
    Ok(kept)
}
