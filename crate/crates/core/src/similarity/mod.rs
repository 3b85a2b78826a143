//! Sentence similarity scorers and the emission matrices they produce.

mod lexical;
mod matrix;

use serde::{Deserialize, Serialize};

use crate::corpus::{DocumentPair, Sentence};
use crate::error::{Error, Result};

pub use lexical::{
    build_idf, char_ngram_sim, jaccard_sim, tfidf_cosine, IdfTable, DEFAULT_NGRAM_ORDERS,
};
pub use matrix::{load_external_matrix, save_matrix, SimilarityMatrix};

/// Scores a (simple, complex) sentence pair in `[0, 1]`.
///
/// Sentences reaching a scorer are non-empty (ingestion rejects blank
/// sentences), so built-ins fall back to 0 rather than erroring.
pub trait SentenceScorer: Sync {
    fn score(&self, simple: &Sentence, complex: &Sentence) -> f64;
}

impl<F> SentenceScorer for F
where
    F: Fn(&Sentence, &Sentence) -> f64 + Sync,
{
    fn score(&self, simple: &Sentence, complex: &Sentence) -> f64 {
        self(simple, complex)
    }
}

/// Built-in scorer selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scorer {
    Jaccard,
    Tfidf { idf: IdfTable },
    CharNgram { orders: Vec<usize> },
}

impl Scorer {
    pub fn char_ngram() -> Self {
        Scorer::CharNgram {
            orders: DEFAULT_NGRAM_ORDERS.to_vec(),
        }
    }
}

impl SentenceScorer for Scorer {
    fn score(&self, simple: &Sentence, complex: &Sentence) -> f64 {
        let r = match self {
            Scorer::Jaccard => jaccard_sim(&simple.tokens, &complex.tokens),
            Scorer::Tfidf { idf } => tfidf_cosine(&simple.tokens, &complex.tokens, idf),
            Scorer::CharNgram { orders } => char_ngram_sim(&simple.text, &complex.text, orders),
        };
        r.unwrap_or(0.0)
    }
}

/// Looks scores up in a precomputed document-level matrix by sentence index.
pub struct MatrixScorer<'a>(pub &'a SimilarityMatrix);

impl SentenceScorer for MatrixScorer<'_> {
    fn score(&self, simple: &Sentence, complex: &Sentence) -> f64 {
        self.0.get(simple.sent_index, complex.sent_index)
    }
}

/// `values[i][j] = scorer(s_i, c_j)` over all sentences of the pair.
pub fn score_pair(pair: &DocumentPair, scorer: &dyn SentenceScorer) -> Result<SimilarityMatrix> {
    if pair.simple.is_empty() || pair.complex.is_empty() {
        return Err(Error::EmptyInput("score_pair needs two non-empty documents"));
    }
    let simple: Vec<&Sentence> = pair.simple.sentences().collect();
    let complex: Vec<&Sentence> = pair.complex.sentences().collect();
    SimilarityMatrix::from_fn(pair.pair_id.clone(), simple.len(), complex.len(), |i, j| {
        scorer.score(simple[i], complex[j])
    })
}
