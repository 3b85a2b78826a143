use std::collections::HashMap;

use crate::error::{Error, Result};

const MAX_ORDER: usize = 4;

fn ngram_counts(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut counts = HashMap::new();
    for gram in tokens.windows(n) {
        *counts.entry(gram).or_insert(0) += 1;
    }
    counts
}

/// Sentence-level BLEU over orders 1..=4 with uniform weights and brevity
/// penalty. Precisions for orders >= 2 use add-one smoothing; the unigram
/// precision is unsmoothed, so a hypothesis sharing no token with the
/// reference scores 0.
pub fn sentence_bleu(hypothesis: &[String], reference: &[String]) -> Result<f64> {
    if hypothesis.is_empty() || reference.is_empty() {
        return Err(Error::EmptyInput("sentence_bleu needs non-empty token lists"));
    }
    let mut log_sum = 0.0;
    for n in 1..=MAX_ORDER {
        let hyp = ngram_counts(hypothesis, n);
        let refc = ngram_counts(reference, n);
        let total: usize = hyp.values().sum();
        let matched: usize = hyp
            .iter()
            .map(|(gram, &c)| c.min(refc.get(gram).copied().unwrap_or(0)))
            .sum();
        let precision = if n == 1 {
            matched as f64 / total as f64
        } else {
            (matched + 1) as f64 / (total + 1) as f64
        };
        if precision == 0.0 {
            return Ok(0.0);
        }
        log_sum += precision.ln() / MAX_ORDER as f64;
    }
    let c = hypothesis.len() as f64;
    let r = reference.len() as f64;
    let bp = if c > r { 1.0 } else { (1.0 - r / c).exp() };
    Ok((bp * log_sum.exp()).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::tokenize;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn identical_is_one() {
        let s = toks("a b c d e f g h i j");
        assert_eq!(sentence_bleu(&s, &s).unwrap(), 1.0);
    }

    #[test]
    fn disjoint_is_zero() {
        // Unigram precision 0/10 leaves nothing to smooth.
        let h = toks("a b c d e f g h i j");
        let r = toks("k l m n o p q r s t");
        assert_eq!(sentence_bleu(&h, &r).unwrap(), 0.0);
    }

    #[test]
    fn half_reference_pays_brevity_penalty() {
        // All precisions are 1 (orders >= 2 are (m+1)/(t+1) with m = t);
        // BP = exp(1 - 8/4).
        let r = toks("w1 w2 w3 w4 w5 w6 w7 w8");
        let h = r[..4].to_vec();
        let got = sentence_bleu(&h, &r).unwrap();
        assert!((got - (-1.0f64).exp()).abs() < 1e-15, "{got}");
    }

    #[test]
    fn hand_computed_smoothed_value() {
        // p1 = 5/6, p2 = (3+1)/(5+1), p3 = (1+1)/(4+1), p4 = (0+1)/(3+1); product 1/18.
        let h = toks("the cat sat on the mat");
        let r = toks("the cat is on the mat");
        let got = sentence_bleu(&h, &r).unwrap();
        assert!((got - 18f64.powf(-0.25)).abs() < 1e-12, "{got}");
    }

    #[test]
    fn empty_rejected() {
        assert!(sentence_bleu(&[], &toks("x")).is_err());
        assert!(sentence_bleu(&toks("x"), &[]).is_err());
    }
}
