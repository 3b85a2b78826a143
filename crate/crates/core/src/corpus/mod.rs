//! Documents, document pairs and the JSON-lines corpus format.

mod annotation;
mod bleu;
mod candidates;
mod filters;
mod levels;

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::tokenize;

pub use annotation::{
    load_annotations, merge_annotations, parse_annotations, validate_annotation_file,
    write_annotations, AlignmentLabelKind, AnnotationKey, AnnotationRecord, LabelSource,
};
pub(crate) use annotation::check_indices;
pub use bleu::sentence_bleu;
pub use candidates::select_candidates;
pub use filters::{
    bleu_filter, load_patterns, parse_patterns, pattern_filter, preprocess_wiki, SentencePair,
    CITY_PATTERN,
};
pub use levels::{compose, compose_sets, derive_nonadjacent, LabelSet, LevelPair};

#[derive(Debug, Clone, PartialEq)]
pub struct Sentence {
    pub text: String,
    pub tokens: Vec<String>,
    pub para_index: usize,
    pub sent_index: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: String,
    /// Readability level; 0 is the original article. Absent for corpora without levels.
    pub level: Option<i32>,
    pub paragraphs: Vec<Vec<Sentence>>,
}

impl Document {
    /// Builds a document from raw sentence strings, tokenizing each one.
    /// Whitespace-only sentences are rejected. Empty paragraphs are kept out.
    pub fn from_texts<S: AsRef<str>>(
        doc_id: impl Into<String>,
        level: Option<i32>,
        paragraphs: &[Vec<S>],
    ) -> Result<Document> {
        let mut out = Vec::with_capacity(paragraphs.len());
        let mut sent_index = 0;
        for para in paragraphs.iter().filter(|p| !p.is_empty()) {
            let mut sentences = Vec::with_capacity(para.len());
            for text in para {
                let text = text.as_ref();
                let tokens = tokenize(text);
                if tokens.is_empty() {
                    return Err(Error::InvalidArgument(format!(
                        "whitespace-only sentence at index {sent_index}"
                    )));
                }
                sentences.push(Sentence {
                    text: text.to_string(),
                    tokens,
                    para_index: out.len(),
                    sent_index,
                });
                sent_index += 1;
            }
            out.push(sentences);
        }
        Ok(Document {
            doc_id: doc_id.into(),
            level,
            paragraphs: out,
        })
    }

    pub fn sentences(&self) -> impl Iterator<Item = &Sentence> + '_ {
        self.paragraphs.iter().flatten()
    }

    pub fn sentence_count(&self) -> usize {
        self.paragraphs.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.sentence_count() == 0
    }

    pub fn sentence(&self, index: usize) -> Option<&Sentence> {
        self.sentences().nth(index)
    }

    /// Document-level sentence index ranges, one per paragraph.
    pub fn paragraph_ranges(&self) -> Vec<Range<usize>> {
        let mut start = 0;
        self.paragraphs
            .iter()
            .map(|p| {
                let r = start..start + p.len();
                start = r.end;
                r
            })
            .collect()
    }

    fn texts(&self) -> Vec<Vec<String>> {
        self.paragraphs
            .iter()
            .map(|p| p.iter().map(|s| s.text.clone()).collect())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocumentPair {
    pub pair_id: String,
    pub simple: Document,
    pub complex: Document,
}

#[derive(Serialize, Deserialize)]
struct RawDocument {
    doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    level: Option<i32>,
    paragraphs: Vec<Vec<String>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPair {
    pair_id: String,
    simple: RawDocument,
    complex: RawDocument,
}

impl RawDocument {
    fn into_document(self) -> std::result::Result<Document, String> {
        if self.paragraphs.is_empty() {
            return Err(format!("document {:?} has no paragraphs", self.doc_id));
        }
        if self.paragraphs.iter().any(Vec::is_empty) {
            return Err(format!("document {:?} has an empty paragraph", self.doc_id));
        }
        Document::from_texts(self.doc_id, self.level, &self.paragraphs).map_err(|e| e.to_string())
    }
}

impl DocumentPair {
    fn from_raw(raw: RawPair) -> std::result::Result<DocumentPair, String> {
        let simple = raw.simple.into_document()?;
        let complex = raw.complex.into_document()?;
        if let (Some(s), Some(c)) = (simple.level, complex.level) {
            if s <= c {
                return Err(format!(
                    "simple level {s} must be greater than complex level {c}"
                ));
            }
        }
        Ok(DocumentPair {
            pair_id: raw.pair_id,
            simple,
            complex,
        })
    }

    fn to_raw(&self) -> RawPair {
        let doc = |d: &Document| RawDocument {
            doc_id: d.doc_id.clone(),
            level: d.level,
            paragraphs: d.texts(),
        };
        RawPair {
            pair_id: self.pair_id.clone(),
            simple: doc(&self.simple),
            complex: doc(&self.complex),
        }
    }
}

/// Parses a JSON-lines corpus. Blank lines are skipped; line numbers are 1-based.
pub fn parse_corpus(reader: impl BufRead) -> Result<Vec<DocumentPair>> {
    let mut pairs = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawPair = serde_json::from_str(&line).map_err(|e| Error::MalformedLine {
            line: line_no,
            message: e.to_string(),
        })?;
        let pair = DocumentPair::from_raw(raw).map_err(|message| Error::MalformedLine {
            line: line_no,
            message,
        })?;
        if !seen.insert(pair.pair_id.clone()) {
            return Err(Error::DuplicatePair(pair.pair_id));
        }
        pairs.push(pair);
    }
    Ok(pairs)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<DocumentPair>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(BufReader::new(file))
}

pub fn write_corpus(mut writer: impl Write, pairs: &[DocumentPair]) -> std::io::Result<()> {
    for pair in pairs {
        serde_json::to_writer(&mut writer, &pair.to_raw())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_corpus(path: impl AsRef<Path>, pairs: &[DocumentPair]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_corpus(BufWriter::new(file), pairs).map_err(|e| Error::io(path, e))
}
