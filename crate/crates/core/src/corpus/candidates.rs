use std::collections::BTreeSet;

use super::{DocumentPair, Sentence};
use crate::error::{Error, Result};
use crate::similarity::SentenceScorer;

/// For every simple sentence, the union over `scorers` of the best-scoring
/// complex sentence (lowest index on ties). Output is sorted by
/// `(simple_sent, complex_sent)`.
pub fn select_candidates(
    pair: &DocumentPair,
    scorers: &[&dyn SentenceScorer],
) -> Result<Vec<(usize, usize)>> {
    if scorers.is_empty() {
        return Err(Error::InvalidArgument("select_candidates needs a scorer".into()));
    }
    if pair.complex.is_empty() {
        return Err(Error::EmptyInput("select_candidates needs a non-empty complex document"));
    }
    let complex: Vec<&Sentence> = pair.complex.sentences().collect();
    let mut out = BTreeSet::new();
    for s in pair.simple.sentences() {
        for scorer in scorers {
            let mut best = (0, f64::NEG_INFINITY);
            for c in &complex {
                let v = scorer.score(s, c);
                if v > best.1 {
                    best = (c.sent_index, v);
                }
            }
            out.insert((s.sent_index, best.0));
        }
    }
    Ok(out.into_iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::similarity::{build_idf, Scorer};

    fn pair() -> DocumentPair {
        DocumentPair {
            pair_id: "p".into(),
            simple: Document::from_texts("s", None, &[vec!["the dog ran home", "birds sang loudly"]]).unwrap(),
            complex: Document::from_texts(
                "c",
                None,
                &[vec!["a cat slept", "the dog ran quickly home", "many birds sang very loudly today"]],
            )
            .unwrap(),
        }
    }

    #[test]
    fn one_scorer_one_candidate_each() {
        let got = select_candidates(&pair(), &[&Scorer::Jaccard]).unwrap();
        assert_eq!(got, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn agreeing_scorers_collapse() {
        let p = pair();
        let idf = Scorer::Tfidf {
            idf: build_idf(&[p.simple.clone(), p.complex.clone()]).unwrap(),
        };
        let ng = Scorer::char_ngram();
        let scorers: [&dyn SentenceScorer; 4] = [&Scorer::Jaccard, &idf, &ng, &Scorer::Jaccard];
        assert_eq!(select_candidates(&p, &scorers).unwrap(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn ties_pick_lowest_and_union_bounded() {
        let p = pair();
        let flat = |_: &Sentence, _: &Sentence| 0.5;
        let last = |_: &Sentence, c: &Sentence| c.sent_index as f64 / 10.0;
        let got = select_candidates(&p, &[&flat, &last]).unwrap();
        assert_eq!(got, vec![(0, 0), (0, 2), (1, 0), (1, 2)]);
    }

    #[test]
    fn empty_complex_rejected() {
        let mut p = pair();
        p.complex.paragraphs.clear();
        assert!(select_candidates(&p, &[&Scorer::Jaccard]).is_err());
        assert!(select_candidates(&pair(), &[]).is_err());
    }
}
