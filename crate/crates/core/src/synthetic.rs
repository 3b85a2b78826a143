//! Seeded generator for document pairs with known sentence alignments.
//!
//! Complex documents are drawn from a Zipfian vocabulary. Each simple
//! document walks its complex counterpart in order: a sentence is dropped,
//! split into two partially aligned halves, or kept as a noisy paraphrase.
//! A few unaligned sentences are inserted to make "no match" decisions matter.

use chrono::{DateTime, Utc};
use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{AlignmentLabelKind, AnnotationRecord, Document, DocumentPair, LabelSource};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub pairs: usize,
    pub seed: u64,
    pub vocab_size: usize,
    pub zipf_exponent: f64,
    pub paragraphs: (usize, usize),
    pub sentences_per_paragraph: (usize, usize),
    pub sentence_length: (usize, usize),
    pub deletion_rate: f64,
    pub split_rate: f64,
    /// Per-token substitution probability in rewritten sentences.
    pub noise_rate: f64,
    /// Probability of inserting an unaligned sentence after each simple sentence.
    pub insertion_rate: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            pairs: 200,
            seed: 0,
            vocab_size: 2000,
            zipf_exponent: 1.0,
            paragraphs: (3, 6),
            sentences_per_paragraph: (2, 4),
            sentence_length: (8, 16),
            deletion_rate: 0.2,
            split_rate: 0.15,
            noise_rate: 0.35,
            insertion_rate: 0.1,
        }
    }
}

impl SyntheticConfig {
    fn validate(&self) -> Result<()> {
        let rates = [self.deletion_rate, self.split_rate, self.noise_rate, self.insertion_rate];
        if rates.iter().any(|r| !(0.0..=1.0).contains(r)) || self.deletion_rate + self.split_rate > 1.0 {
            return Err(Error::InvalidArgument("synthetic rates must lie in [0, 1] and deletion + split <= 1".into()));
        }
        for (name, (lo, hi)) in [
            ("paragraphs", self.paragraphs),
            ("sentences_per_paragraph", self.sentences_per_paragraph),
            ("sentence_length", self.sentence_length),
        ] {
            if lo == 0 || lo > hi {
                return Err(Error::InvalidArgument(format!("{name} range ({lo}, {hi}) is invalid")));
            }
        }
        if self.sentence_length.0 < 4 {
            return Err(Error::InvalidArgument("sentences need at least 4 tokens to split".into()));
        }
        if self.vocab_size < 2 || self.zipf_exponent.is_nan() {
            return Err(Error::InvalidArgument("vocabulary needs at least 2 words".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub pairs: Vec<DocumentPair>,
    /// Positive gold labels only; every other cell is not aligned.
    pub gold: Vec<AnnotationRecord>,
}

const SYLLABLES: [&str; 20] = [
    "ka", "lo", "mi", "ne", "su", "ta", "ri", "po", "da", "fe", "gu", "hi", "jo", "be", "vu", "ze",
    "wa", "ye", "co", "xi",
];

fn word(index: usize) -> String {
    let mut n = index;
    let mut w = String::new();
    loop {
        w.push_str(SYLLABLES[n % SYLLABLES.len()]);
        n /= SYLLABLES.len();
        if n == 0 {
            break;
        }
        n -= 1;
    }
    w
}

struct Generator {
    rng: ChaCha8Rng,
    vocab: Vec<String>,
    zipf: WeightedIndex<f64>,
}

impl Generator {
    fn draw(&mut self) -> String {
        self.vocab[self.zipf.sample(&mut self.rng)].clone()
    }

    fn sentence(&mut self, len: usize) -> Vec<String> {
        (0..len).map(|_| self.draw()).collect()
    }

    fn paraphrase(&mut self, tokens: &[String], noise: f64) -> Vec<String> {
        tokens
            .iter()
            .map(|t| if self.rng.gen_bool(noise) { self.draw() } else { t.clone() })
            .collect()
    }
}

fn render(tokens: &[String]) -> String {
    let mut s = tokens.join(" ");
    if let Some(first) = s.get_mut(0..1) {
        first.make_ascii_uppercase();
    }
    s.push('.');
    s
}

pub fn generate(config: &SyntheticConfig) -> Result<SyntheticCorpus> {
    config.validate()?;
    let weights: Vec<f64> = (1..=config.vocab_size)
        .map(|r| (r as f64).powf(-config.zipf_exponent))
        .collect();
    let mut g = Generator {
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        vocab: (0..config.vocab_size).map(word).collect(),
        zipf: WeightedIndex::new(&weights).map_err(|e| Error::InvalidArgument(e.to_string()))?,
    };
    let epoch = DateTime::<Utc>::UNIX_EPOCH;
    let mut pairs = Vec::with_capacity(config.pairs);
    let mut gold = Vec::new();

    for p in 0..config.pairs {
        let pair_id = format!("syn-{p:04}");
        let para_count = g.rng.gen_range(config.paragraphs.0..=config.paragraphs.1);
        let mut complex: Vec<Vec<Vec<String>>> = Vec::with_capacity(para_count);
        for _ in 0..para_count {
            let n = g.rng.gen_range(config.sentences_per_paragraph.0..=config.sentences_per_paragraph.1);
            let para = (0..n)
                .map(|_| {
                    let len = g.rng.gen_range(config.sentence_length.0..=config.sentence_length.1);
                    g.sentence(len)
                })
                .collect();
            complex.push(para);
        }

        let mut simple: Vec<Vec<String>> = Vec::new();
        let mut labels: Vec<(usize, usize, AlignmentLabelKind)> = Vec::new();
        let mut simple_idx = 0;
        let mut complex_idx = 0;
        for para in &complex {
            let mut out = Vec::new();
            for tokens in para {
                let roll: f64 = g.rng.gen();
                if roll < config.deletion_rate {
                    // dropped
                } else if roll < config.deletion_rate + config.split_rate {
                    let cut = g.rng.gen_range(2..=tokens.len() - 2);
                    for half in [&tokens[..cut], &tokens[cut..]] {
                        out.push(render(&g.paraphrase(half, config.noise_rate)));
                        labels.push((simple_idx, complex_idx, AlignmentLabelKind::PartiallyAligned));
                        simple_idx += 1;
                    }
                } else {
                    out.push(render(&g.paraphrase(tokens, config.noise_rate)));
                    labels.push((simple_idx, complex_idx, AlignmentLabelKind::Aligned));
                    simple_idx += 1;
                }
                if g.rng.gen_bool(config.insertion_rate) {
                    let len = g.rng.gen_range(config.sentence_length.0..=config.sentence_length.1);
                    let extra = g.sentence(len);
                    out.push(render(&extra));
                    simple_idx += 1;
                }
                complex_idx += 1;
            }
            if !out.is_empty() {
                simple.push(out);
            }
        }
        if simple.is_empty() {
            // keep every document non-empty: rewrite the first complex sentence
            let tokens = complex[0][0].clone();
            simple.push(vec![render(&g.paraphrase(&tokens, config.noise_rate))]);
            labels.push((0, 0, AlignmentLabelKind::Aligned));
        }

        let complex_text: Vec<Vec<String>> = complex
            .iter()
            .map(|para| para.iter().map(|t| render(t)).collect())
            .collect();
        pairs.push(DocumentPair {
            simple: Document::from_texts(format!("{pair_id}.1"), Some(1), &simple)?,
            complex: Document::from_texts(format!("{pair_id}.0"), Some(0), &complex_text)?,
            pair_id: pair_id.clone(),
        });
        gold.extend(labels.into_iter().map(|(s, c, label)| AnnotationRecord {
            pair_id: pair_id.clone(),
            simple_sent: s,
            complex_sent: c,
            label,
            source: LabelSource::Human,
            timestamp: epoch,
        }));
    }
    Ok(SyntheticCorpus { pairs, gold })
}
