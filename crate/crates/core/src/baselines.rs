//! Similarity-plus-threshold baseline aligners and dev-set threshold tuning.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::corpus::DocumentPair;
use crate::error::{Error, Result};
use crate::eval::{evaluate, evaluate_corpus, EvalReport, GoldStandard, Task};
use crate::similarity::{score_pair, Scorer, SimilarityMatrix};

/// For each simple sentence, its best complex sentence if the score exceeds
/// `threshold`. Complex sentences may be reused. Ties pick the lower index.
pub fn greedy_align(sim: &SimilarityMatrix, threshold: f64) -> Vec<(usize, usize)> {
    (0..sim.rows())
        .filter_map(|i| {
            let (j, v) = row_argmax(sim.row(i))?;
            (v > threshold).then_some((i, j))
        })
        .collect()
}

fn row_argmax(row: &[f64]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (j, &v) in row.iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((j, v));
        }
    }
    best
}

/// Every cell scoring strictly above `threshold`, in row-major order.
pub fn classify_pairs(sim: &SimilarityMatrix, threshold: f64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..sim.rows() {
        for (j, &v) in sim.row(i).iter().enumerate() {
            if v > threshold {
                out.push((i, j));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AlignStrategy {
    /// Threshold every cell.
    Classify,
    /// Threshold each simple sentence's best match.
    Greedy,
}

impl AlignStrategy {
    pub fn predict(self, sim: &SimilarityMatrix, threshold: f64) -> Vec<(usize, usize)> {
        match self {
            AlignStrategy::Classify => classify_pairs(sim, threshold),
            AlignStrategy::Greedy => greedy_align(sim, threshold),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdClassifier {
    pub scorer: Scorer,
    pub threshold: f64,
    pub strategy: AlignStrategy,
}

impl ThresholdClassifier {
    pub fn new(scorer: Scorer, threshold: f64, strategy: AlignStrategy) -> Result<Self> {
        check_threshold(threshold)?;
        Ok(ThresholdClassifier {
            scorer,
            threshold,
            strategy,
        })
    }

    pub fn align(&self, pair: &DocumentPair) -> Result<Vec<(usize, usize)>> {
        Ok(self.strategy.predict(&score_pair(pair, &self.scorer)?, self.threshold))
    }
}

fn check_threshold(t: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::InvalidArgument(format!("threshold {t} outside [0, 1]")));
    }
    Ok(())
}

/// Picks the threshold with the best micro-averaged F1 on `dev`.
///
/// Candidates are every observed score plus 0 and 1, which covers every
/// distinct prediction set under strict `>` thresholding. Ties go to the
/// larger threshold. Fails when the dev set has no scorable gold positive.
pub fn tune_threshold(
    dev: &[(SimilarityMatrix, GoldStandard)],
    task: Task,
    strategy: AlignStrategy,
) -> Result<(f64, EvalReport)> {
    if dev.is_empty() {
        return Err(Error::EmptyInput("tune_threshold needs a dev set"));
    }
    // (score, gold positive) for every cell that can be predicted.
    let mut cells: Vec<(f64, bool)> = Vec::new();
    let mut positives = 0usize;
    for (sim, gold) in dev {
        positives += gold
            .positives(task)
            .filter(|c| !gold.identical.contains(c))
            .count();
        let mut push = |i: usize, j: usize, v: f64| {
            if !gold.identical.contains(&(i, j)) {
                cells.push((v, task.is_positive(gold.label(i, j))));
            }
        };
        match strategy {
            AlignStrategy::Classify => {
                for i in 0..sim.rows() {
                    for (j, &v) in sim.row(i).iter().enumerate() {
                        push(i, j, v);
                    }
                }
            }
            AlignStrategy::Greedy => {
                for i in 0..sim.rows() {
                    if let Some((j, v)) = row_argmax(sim.row(i)) {
                        push(i, j, v);
                    }
                }
            }
        }
    }
    if positives == 0 {
        return Err(Error::InvalidArgument(format!(
            "dev set has no {} positive pairs; F1 is undefined",
            task.as_str()
        )));
    }

    let mut candidates: Vec<f64> = cells.iter().map(|c| c.0).chain([0.0, 1.0]).collect();
    candidates.sort_by(|a, b| b.total_cmp(a));
    candidates.dedup();
    cells.sort_by(|a, b| b.0.total_cmp(&a.0));

    let (mut tp, mut fp) = (0usize, 0usize);
    let mut next = 0;
    let mut best: Option<(f64, f64)> = None;
    for &t in &candidates {
        while next < cells.len() && cells[next].0 > t {
            if cells[next].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            next += 1;
        }
        let f1 = EvalReport::from_counts(task, tp, fp, positives - tp, 0).f1;
        if best.is_none_or(|(_, b)| f1 > b) {
            best = Some((t, f1));
        }
    }
    let (threshold, _) = best.expect("candidates include 0 and 1");
    let reports: Vec<EvalReport> = dev
        .iter()
        .map(|(sim, gold)| {
            let pred: BTreeSet<_> = strategy.predict(sim, threshold).into_iter().collect();
            evaluate(&pred, gold, task)
        })
        .collect();
    Ok((threshold, evaluate_corpus(&reports)?))
}
