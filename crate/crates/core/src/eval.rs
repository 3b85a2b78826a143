//! Precision, recall and F1 for the two binary alignment tasks.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{AlignmentLabelKind, AnnotationRecord, DocumentPair};
use crate::error::{Error, Result};
use crate::text::normalize;

/// Task 1 counts aligned and partially aligned pairs as positive; Task 2
/// counts only aligned pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Task1,
    Task2,
}

impl Task {
    pub const BOTH: [Task; 2] = [Task::Task1, Task::Task2];

    pub fn is_positive(self, label: AlignmentLabelKind) -> bool {
        match self {
            Task::Task1 => label != AlignmentLabelKind::NotAligned,
            Task::Task2 => label == AlignmentLabelKind::Aligned,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Task1 => "task1",
            Task::Task2 => "task2",
        }
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "task1" | "1" => Ok(Task::Task1),
            "task2" | "2" => Ok(Task::Task2),
            other => Err(Error::InvalidArgument(format!("unknown task {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub excluded_identical: usize,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn from_counts(task: Task, tp: usize, fp: usize, fn_: usize, excluded_identical: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        EvalReport {
            task,
            tp,
            fp,
            fn_,
            precision,
            recall,
            f1,
            excluded_identical,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Plain-text table of several reports, one row each.
    pub fn table(reports: &[EvalReport]) -> String {
        let mut out = format!(
            "{:<6} {:>7} {:>7} {:>7} {:>9} {:>7} {:>7} {:>9}\n",
            "task", "tp", "fp", "fn", "precision", "recall", "f1", "identical"
        );
        for r in reports {
            out.push_str(&format!(
                "{:<6} {:>7} {:>7} {:>7} {:>9.4} {:>7.4} {:>7.4} {:>9}\n",
                r.task.as_str(),
                r.tp,
                r.fp,
                r.fn_,
                r.precision,
                r.recall,
                r.f1,
                r.excluded_identical
            ));
        }
        out
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&EvalReport::table(std::slice::from_ref(self)))
    }
}

/// Gold labels for one document pair. Cells without a label are
/// not aligned. `identical` lists cells whose sentences match after
/// normalization; they are left out of scoring.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GoldStandard {
    pub labels: BTreeMap<(usize, usize), AlignmentLabelKind>,
    pub identical: BTreeSet<(usize, usize)>,
}

impl GoldStandard {
    pub fn new(labels: BTreeMap<(usize, usize), AlignmentLabelKind>) -> Self {
        GoldStandard {
            labels,
            identical: BTreeSet::new(),
        }
    }

    /// Gold for `pair` from annotation records (other pairs' records are
    /// ignored; later records override earlier ones), with identical
    /// sentence pairs marked.
    pub fn from_records<'a>(
        pair: &DocumentPair,
        records: impl IntoIterator<Item = &'a AnnotationRecord>,
    ) -> Result<Self> {
        let mut labels = BTreeMap::new();
        for rec in records.into_iter().filter(|r| r.pair_id == pair.pair_id) {
            crate::corpus::check_indices(pair, rec.simple_sent, rec.complex_sent)?;
            labels.insert((rec.simple_sent, rec.complex_sent), rec.label);
        }
        Ok(GoldStandard {
            labels,
            identical: identical_pairs(pair),
        })
    }

    pub fn label(&self, i: usize, j: usize) -> AlignmentLabelKind {
        self.labels.get(&(i, j)).copied().unwrap_or(AlignmentLabelKind::NotAligned)
    }

    pub fn positives(&self, task: Task) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.labels
            .iter()
            .filter(move |(_, &l)| task.is_positive(l))
            .map(|(&k, _)| k)
    }
}

/// Cells whose sentences are equal after lowercasing and whitespace collapse.
pub fn identical_pairs(pair: &DocumentPair) -> BTreeSet<(usize, usize)> {
    let complex: Vec<String> = pair.complex.sentences().map(|s| normalize(&s.text)).collect();
    let mut out = BTreeSet::new();
    for (i, s) in pair.simple.sentences().enumerate() {
        let s = normalize(&s.text);
        for (j, c) in complex.iter().enumerate() {
            if &s == c {
                out.insert((i, j));
            }
        }
    }
    out
}

/// Scores predicted positive cells against gold after removing identical
/// pairs from both sides.
pub fn evaluate(pred: &BTreeSet<(usize, usize)>, gold: &GoldStandard, task: Task) -> EvalReport {
    let gold_pos: BTreeSet<(usize, usize)> = gold.positives(task).collect();
    let excluded = pred
        .union(&gold_pos)
        .filter(|c| gold.identical.contains(c))
        .count();
    let keep = |c: &&(usize, usize)| !gold.identical.contains(c);
    let tp = pred.intersection(&gold_pos).filter(keep).count();
    let fp = pred.difference(&gold_pos).filter(keep).count();
    let fn_ = gold_pos.difference(pred).filter(keep).count();
    EvalReport::from_counts(task, tp, fp, fn_, excluded)
}

/// Micro-average: sums counts across pairs, then recomputes the ratios.
pub fn evaluate_corpus(reports: &[EvalReport]) -> Result<EvalReport> {
    let first = reports
        .first()
        .ok_or(Error::EmptyInput("evaluate_corpus needs at least one report"))?;
    if reports.iter().any(|r| r.task != first.task) {
        return Err(Error::InvalidArgument("cannot pool reports from different tasks".into()));
    }
    let sum = |f: fn(&EvalReport) -> usize| reports.iter().map(f).sum::<usize>();
    Ok(EvalReport::from_counts(
        first.task,
        sum(|r| r.tp),
        sum(|r| r.fp),
        sum(|r| r.fn_),
        sum(|r| r.excluded_identical),
    ))
}
