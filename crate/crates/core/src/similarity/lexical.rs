use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::error::{Error, Result};
use crate::text::normalize;

pub fn jaccard_sim<S: AsRef<str>>(a: &[S], b: &[S]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("jaccard_sim needs non-empty token lists"));
    }
    let lower = |xs: &[S]| -> HashSet<String> { xs.iter().map(|t| t.as_ref().to_lowercase()).collect() };
    let (a, b) = (lower(a), lower(b));
    let inter = a.intersection(&b).count();
    let union = a.len() + b.len() - inter;
    Ok(inter as f64 / union as f64)
}

/// Smoothed inverse sentence frequency: `ln((1 + N) / (1 + df)) + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdfTable {
    weights: BTreeMap<String, f64>,
    document_count: usize,
}

impl IdfTable {
    /// Table with no observed tokens, so every token gets the unseen weight.
    pub fn empty(document_count: usize) -> Self {
        IdfTable {
            weights: BTreeMap::new(),
            document_count,
        }
    }

    pub fn document_count(&self) -> usize {
        self.document_count
    }

    pub fn idf(&self, token: &str) -> f64 {
        match self.weights.get(token) {
            Some(&w) => w,
            None => (1.0 + self.document_count as f64).ln() + 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Builds idf weights where each sentence of every document counts as one
/// "document" for the frequency statistics.
pub fn build_idf(corpus: &[Document]) -> Result<IdfTable> {
    if corpus.is_empty() {
        return Err(Error::EmptyInput("build_idf needs at least one document"));
    }
    let mut df: BTreeMap<String, usize> = BTreeMap::new();
    let mut n = 0usize;
    for sentence in corpus.iter().flat_map(Document::sentences) {
        n += 1;
        let unique: HashSet<&str> = sentence.tokens.iter().map(String::as_str).collect();
        for tok in unique {
            *df.entry(tok.to_lowercase()).or_insert(0) += 1;
        }
    }
    let weights = df
        .into_iter()
        .map(|(tok, d)| (tok, ((1 + n) as f64 / (1 + d) as f64).ln() + 1.0))
        .collect();
    Ok(IdfTable {
        weights,
        document_count: n,
    })
}

fn counts<T: Ord, I: IntoIterator<Item = T>>(items: I) -> BTreeMap<T, f64> {
    let mut map = BTreeMap::new();
    for it in items {
        *map.entry(it).or_insert(0.0) += 1.0;
    }
    map
}

fn cosine<T: Ord>(a: &BTreeMap<T, f64>, b: &BTreeMap<T, f64>) -> f64 {
    let dot: f64 = a
        .iter()
        .filter_map(|(k, x)| b.get(k).map(|y| x * y))
        .sum();
    let na = a.values().map(|x| x * x).sum::<f64>();
    let nb = b.values().map(|x| x * x).sum::<f64>();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    // sqrt of the product keeps identical vectors at exactly 1
    (dot / (na * nb).sqrt()).clamp(0.0, 1.0)
}

/// Cosine of raw-count tf times idf vectors.
pub fn tfidf_cosine<S: AsRef<str>>(a: &[S], b: &[S], idf: &IdfTable) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("tfidf_cosine needs non-empty token lists"));
    }
    let weigh = |xs: &[S]| {
        let mut v = counts(xs.iter().map(|t| t.as_ref().to_lowercase()));
        for (tok, w) in v.iter_mut() {
            *w *= idf.idf(tok);
        }
        v
    };
    Ok(cosine(&weigh(a), &weigh(b)))
}

pub const DEFAULT_NGRAM_ORDERS: [usize; 3] = [2, 3, 4];

/// Mean over `orders` of the cosine between character n-gram count vectors
/// of the normalized strings. An order longer than either string scores 0
/// and still counts in the mean.
pub fn char_ngram_sim(a: &str, b: &str, orders: &[usize]) -> Result<f64> {
    let (a, b) = (normalize(a), normalize(b));
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("char_ngram_sim needs non-empty strings"));
    }
    if orders.is_empty() || orders.contains(&0) {
        return Err(Error::InvalidArgument(
            "char_ngram_sim orders must be non-empty and positive".into(),
        ));
    }
    let (ca, cb): (Vec<char>, Vec<char>) = (a.chars().collect(), b.chars().collect());
    let total: f64 = orders
        .iter()
        .map(|&n| cosine(&counts(ca.windows(n)), &counts(cb.windows(n))))
        .sum();
    Ok(total / orders.len() as f64)
}
