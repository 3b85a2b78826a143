//! Paragraph alignment pre-pass.
//!
//! Sentence similarities are pooled into paragraph similarities, paragraph
//! pairs are aligned by threshold rules (one rule set tuned for Newsela-style
//! news rewrites, one for Wikipedia), and complex paragraphs aligned to the
//! same simple paragraph are merged into blocks for the sentence CRF.

mod thresholds;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::corpus::{DocumentPair, Sentence};
use crate::error::{Error, Result};
use crate::similarity::SentenceScorer;

pub use thresholds::{load_thresholds, ThresholdSet, Variant};

/// `d(i, j) = |i/k - j/l|` for 1-based paragraph indices.
pub fn relative_distance(i: usize, j: usize, k: usize, l: usize) -> Result<f64> {
    if i == 0 || j == 0 || i > k || j > l {
        return Err(Error::Index(format!(
            "paragraph ({i}, {j}) outside 1..={k} x 1..={l}"
        )));
    }
    Ok(dist(i - 1, j - 1, k, l))
}

/// 0-based variant used internally; arguments are known to be in range.
fn dist(i: usize, j: usize, k: usize, l: usize) -> f64 {
    ((i + 1) as f64 / k as f64 - (j + 1) as f64 / l as f64).abs()
}

/// `channels x k x l` pooled similarities. Channel 0 averages each simple
/// sentence's best match; the last channel is the best sentence pair overall.
#[derive(Debug, Clone, PartialEq)]
pub struct ParagraphSimilarity {
    pub channels: usize,
    pub k: usize,
    pub l: usize,
    values: Vec<f64>,
}

impl ParagraphSimilarity {
    pub fn from_values(channels: usize, k: usize, l: usize, values: Vec<f64>) -> Result<Self> {
        if channels == 0 || k == 0 || l == 0 {
            return Err(Error::InvalidArgument("paragraph similarity dimensions must be positive".into()));
        }
        if values.len() != channels * k * l {
            return Err(Error::dimension("paragraph similarity values", channels * k * l, values.len()));
        }
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("paragraph similarity {v} outside [0, 1]")));
        }
        Ok(ParagraphSimilarity { channels, k, l, values })
    }

    #[inline]
    pub fn get(&self, channel: usize, i: usize, j: usize) -> f64 {
        self.values[(channel * self.k + i) * self.l + j]
    }
}

fn check_paragraphs(paras: &[Vec<Sentence>], side: &'static str) -> Result<()> {
    if paras.is_empty() || paras.iter().any(Vec::is_empty) {
        return Err(Error::EmptyInput(side));
    }
    Ok(())
}

/// (mean over simple sentences of the row max, overall max) for one paragraph pair.
fn pool(simple: &[Sentence], complex: &[Sentence], scorer: &dyn SentenceScorer) -> (f64, f64) {
    let mut sum = 0.0;
    let mut overall = f64::NEG_INFINITY;
    for s in simple {
        let best = complex
            .iter()
            .map(|c| scorer.score(s, c))
            .fold(f64::NEG_INFINITY, f64::max);
        sum += best;
        overall = overall.max(best);
    }
    (sum / simple.len() as f64, overall)
}

/// Two-channel similarity: channel 0 is the average over simple sentences
/// of their best match in the complex paragraph, channel 1 the best
/// sentence-pair score.
pub fn paragraph_similarity_newsela(
    simple: &[Vec<Sentence>],
    complex: &[Vec<Sentence>],
    scorer: &dyn SentenceScorer,
) -> Result<ParagraphSimilarity> {
    check_paragraphs(simple, "simple paragraphs must be non-empty")?;
    check_paragraphs(complex, "complex paragraphs must be non-empty")?;
    let (k, l) = (simple.len(), complex.len());
    let mut values = vec![0.0; 2 * k * l];
    for (i, sp) in simple.iter().enumerate() {
        for (j, cp) in complex.iter().enumerate() {
            let (avg, max) = pool(sp, cp, scorer);
            values[i * l + j] = avg;
            values[(k + i) * l + j] = max;
        }
    }
    ParagraphSimilarity::from_values(2, k, l, values)
}

/// Single-channel similarity: best sentence-pair score per paragraph pair.
pub fn paragraph_similarity_wiki(
    simple: &[Vec<Sentence>],
    complex: &[Vec<Sentence>],
    scorer: &dyn SentenceScorer,
) -> Result<ParagraphSimilarity> {
    check_paragraphs(simple, "simple paragraphs must be non-empty")?;
    check_paragraphs(complex, "complex paragraphs must be non-empty")?;
    let (k, l) = (simple.len(), complex.len());
    let mut values = Vec::with_capacity(k * l);
    for sp in simple {
        for cp in complex {
            values.push(pool(sp, cp, scorer).1);
        }
    }
    ParagraphSimilarity::from_values(1, k, l, values)
}

/// Which rule set an alignment entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Witness {
    /// Best average-similarity match that is also positionally close.
    BestMatch,
    /// Some sentence pair is near-identical.
    HighSimilarity,
    /// Two consecutive complex paragraphs both score high (split or fusion).
    ConsecutivePair,
    /// Survived candidate selection and pruning (Wikipedia rules).
    Candidate,
    /// Supplied externally, e.g. a gold paragraph alignment.
    Given,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParagraphAlignment {
    pub k: usize,
    pub l: usize,
    matrix: Vec<bool>,
    witnesses: Vec<(usize, usize, Witness)>,
}

impl ParagraphAlignment {
    pub fn empty(k: usize, l: usize) -> Self {
        ParagraphAlignment {
            k,
            l,
            matrix: vec![false; k * l],
            witnesses: Vec::new(),
        }
    }

    /// Alignment from explicit 0-based `(simple_para, complex_para)` pairs.
    pub fn from_pairs(k: usize, l: usize, pairs: &[(usize, usize)]) -> Result<Self> {
        let mut out = Self::empty(k, l);
        for &(i, j) in pairs {
            if i >= k || j >= l {
                return Err(Error::Index(format!("paragraph pair ({i}, {j}) outside {k}x{l}")));
            }
            out.set(i, j, Witness::Given);
        }
        Ok(out)
    }

    fn set(&mut self, i: usize, j: usize, why: Witness) {
        self.matrix[i * self.l + j] = true;
        if !self.witnesses.contains(&(i, j, why)) {
            self.witnesses.push((i, j, why));
        }
    }

    pub fn is_aligned(&self, i: usize, j: usize) -> bool {
        self.matrix[i * self.l + j]
    }

    /// Rows of 0/1 entries.
    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        self.matrix.chunks(self.l.max(1)).map(|r| r.iter().map(|&b| b as u8).collect()).collect()
    }

    pub fn aligned_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.k)
            .flat_map(|i| (0..self.l).map(move |j| (i, j)))
            .filter(|&(i, j)| self.is_aligned(i, j))
            .collect()
    }

    /// Rules that fired for `(i, j)`.
    pub fn witnesses(&self, i: usize, j: usize) -> Vec<Witness> {
        let mut w: Vec<Witness> = self
            .witnesses
            .iter()
            .filter(|&&(a, b, _)| (a, b) == (i, j))
            .map(|&(_, _, w)| w)
            .collect();
        w.sort();
        w
    }
}

fn expect(sim: &ParagraphSimilarity, th: &ThresholdSet, variant: Variant, channels: usize) -> Result<()> {
    if th.variant != variant {
        return Err(Error::InvalidArgument(format!(
            "{variant:?} alignment needs {variant:?} thresholds, got {:?}",
            th.variant
        )));
    }
    if sim.channels != channels {
        return Err(Error::dimension("paragraph similarity channels", channels, sim.channels));
    }
    Ok(())
}

/// Newsela rules. For simple paragraph `i`:
/// (a) the complex paragraph with the best average similarity, if it clears
///     `tau1` and lies within relative distance `tau2`;
/// (b) any complex paragraph whose best sentence pair exceeds `tau3`;
/// (c) consecutive complex paragraphs `j-1, j` whose best sentence pairs both
///     exceed `tau4` and both lie within distance `tau5`.
pub fn align_paragraphs_newsela(sim: &ParagraphSimilarity, th: &ThresholdSet) -> Result<ParagraphAlignment> {
    expect(sim, th, Variant::Newsela, 2)?;
    let (k, l) = (sim.k, sim.l);
    let mut out = ParagraphAlignment::empty(k, l);
    for i in 0..k {
        let mut j_max = 0;
        for j in 1..l {
            if sim.get(0, i, j) > sim.get(0, i, j_max) {
                j_max = j;
            }
        }
        if sim.get(0, i, j_max) > th.tau1 && dist(i, j_max, k, l) < th.tau2 {
            out.set(i, j_max, Witness::BestMatch);
        }
        for j in 0..l {
            if sim.get(1, i, j) > th.tau3 {
                out.set(i, j, Witness::HighSimilarity);
            }
            if j > 0
                && sim.get(1, i, j) > th.tau4
                && sim.get(1, i, j - 1) > th.tau4
                && dist(i, j, k, l) < th.tau5
                && dist(i, j - 1, k, l) < th.tau5
            {
                out.set(i, j, Witness::ConsecutivePair);
                out.set(i, j - 1, Witness::ConsecutivePair);
            }
        }
    }
    Ok(out)
}

/// Wikipedia rules. Candidates for simple paragraph `i` are complex
/// paragraphs with similarity above `tau1` within relative distance `tau2`.
/// When several candidates spread widely (range over `l` above `tau3` and
/// range above `tau4` paragraphs), only the candidate closest to `i` and
/// those scoring above `tau5` survive.
pub fn align_paragraphs_wiki(sim: &ParagraphSimilarity, th: &ThresholdSet) -> Result<ParagraphAlignment> {
    expect(sim, th, Variant::Wiki, 1)?;
    let (k, l) = (sim.k, sim.l);
    let mut out = ParagraphAlignment::empty(k, l);
    for i in 0..k {
        let mut cand: Vec<usize> = (0..l)
            .filter(|&j| sim.get(0, i, j) > th.tau1 && dist(i, j, k, l) < th.tau2)
            .collect();
        if cand.is_empty() {
            continue;
        }
        let range = (cand[cand.len() - 1] - cand[0]) as f64;
        if cand.len() > 1 && range / l as f64 > th.tau3 && range > th.tau4 {
            let mut closest = cand[0];
            for &m in &cand[1..] {
                if m.abs_diff(i) < closest.abs_diff(i) {
                    closest = m;
                }
            }
            cand.retain(|&m| m == closest || sim.get(0, i, m) > th.tau5);
        }
        for j in cand {
            out.set(i, j, Witness::Candidate);
        }
    }
    Ok(out)
}

/// Computes paragraph similarity and alignment with the rule set matching
/// `th.variant`.
pub fn align_paragraphs(
    pair: &DocumentPair,
    scorer: &dyn SentenceScorer,
    th: &ThresholdSet,
) -> Result<ParagraphAlignment> {
    let (s, c) = (&pair.simple.paragraphs, &pair.complex.paragraphs);
    match th.variant {
        Variant::Newsela => align_paragraphs_newsela(&paragraph_similarity_newsela(s, c, scorer)?, th),
        Variant::Wiki => align_paragraphs_wiki(&paragraph_similarity_wiki(s, c, scorer)?, th),
    }
}

/// A simple paragraph together with one run of consecutive aligned complex
/// paragraphs; the unit the sentence CRF decodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub simple_para: usize,
    /// Document-level simple sentence indices.
    pub simple: Vec<usize>,
    pub complex_paras: Range<usize>,
    /// Document-level complex sentence indices, in order.
    pub complex: Vec<usize>,
}

impl Block {
    /// Single block spanning both documents.
    pub fn whole(pair: &DocumentPair) -> Self {
        Block {
            simple_para: 0,
            simple: (0..pair.simple.sentence_count()).collect(),
            complex_paras: 0..pair.complex.paragraphs.len(),
            complex: (0..pair.complex.sentence_count()).collect(),
        }
    }
}

/// Groups each simple paragraph's aligned complex paragraphs into maximal
/// runs of consecutive indices and concatenates each run's sentences.
/// Simple paragraphs without alignment produce no block.
pub fn merge_blocks(align: &ParagraphAlignment, pair: &DocumentPair) -> Result<Vec<Block>> {
    let (k, l) = (pair.simple.paragraphs.len(), pair.complex.paragraphs.len());
    if (align.k, align.l) != (k, l) {
        return Err(Error::dimension(
            format!("paragraph alignment of pair {:?}", pair.pair_id),
            format!("{k}x{l}"),
            format!("{}x{}", align.k, align.l),
        ));
    }
    let simple_ranges = pair.simple.paragraph_ranges();
    let complex_ranges = pair.complex.paragraph_ranges();
    let mut blocks = Vec::new();
    for i in 0..k {
        let mut j = 0;
        while j < l {
            if !align.is_aligned(i, j) {
                j += 1;
                continue;
            }
            let start = j;
            while j < l && align.is_aligned(i, j) {
                j += 1;
            }
            blocks.push(Block {
                simple_para: i,
                simple: simple_ranges[i].clone().collect(),
                complex_paras: start..j,
                complex: (complex_ranges[start].start..complex_ranges[j - 1].end).collect(),
            });
        }
    }
    Ok(blocks)
}
