use super::inference::{viterbi_with, Transitions};
use super::model::CrfModel;
use crate::corpus::DocumentPair;
use crate::error::{Error, Result};
use crate::para_align::Block;
use crate::similarity::SimilarityMatrix;

/// Maps block-local labels to document-level `(simple, complex)` pairs,
/// skipping unaligned positions.
pub fn map_block_labels(labels: &[usize], simple: &[usize], complex: &[usize]) -> Vec<(usize, usize)> {
    labels
        .iter()
        .zip(simple)
        .filter(|(&a, _)| a != 0)
        .map(|(&a, &s)| (s, complex[a - 1]))
        .collect()
}

/// Runs Viterbi once per block (or over the whole pair when `blocks` is
/// `None`) and returns the predicted aligned pairs sorted by simple index.
/// Simple sentences outside every block stay unaligned.
pub fn decode_pair(
    model: &CrfModel,
    pair: &DocumentPair,
    sim: &SimilarityMatrix,
    blocks: Option<&[Block]>,
) -> Result<Vec<(usize, usize)>> {
    if pair.simple.is_empty() {
        return Err(Error::EmptyInput("cannot decode a pair with an empty simple document"));
    }
    sim.check_against(pair)?;
    let whole;
    let blocks = match blocks {
        Some(b) => b,
        None => {
            whole = [Block::whole(pair)];
            &whole[..]
        }
    };
    let mut out = Vec::new();
    for block in blocks {
        if block.simple.is_empty() {
            continue;
        }
        let sub = sim.submatrix(&block.simple, &block.complex);
        let trans = Transitions::new(model, sub.cols());
        let (seq, _) = viterbi_with(model, &sub, &trans)?;
        out.extend(map_block_labels(&seq.labels, &block.simple, &block.complex));
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

/// Per-sentence argmax of the emission scores alone, ignoring transitions.
/// Ties go to the smaller label, so label 0 wins a tie with any sentence.
pub fn decode_independent(model: &CrfModel, sim: &SimilarityMatrix) -> Vec<usize> {
    (0..sim.rows())
        .map(|i| {
            let mut best = (0, model.null_emission);
            for a in 1..=sim.cols() {
                let v = model.emission_unchecked(sim, i, a);
                if v > best.1 {
                    best = (a, v);
                }
            }
            best.0
        })
        .collect()
}
