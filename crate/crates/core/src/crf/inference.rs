use super::features::Slots;
use super::model::CrfModel;
use super::AlignmentSequence;
use crate::error::{Error, Result};
use crate::similarity::SimilarityMatrix;

/// Transition scores for one complex-side size, precomputed per feature slot
/// and expanded into a dense `(n+1) x (n+1)` table.
pub(crate) struct Transitions {
    width: usize,
    slots: Slots,
    /// `table[cur * width + prev]`
    table: Vec<f64>,
    start: Vec<f64>,
}

impl Transitions {
    pub fn new(model: &CrfModel, n: usize) -> Self {
        let slots = Slots::new(n);
        let slot_scores: Vec<f64> = (0..slots.len()).map(|s| model.ffnn(slots.features(s))).collect();
        let width = n + 1;
        let mut table = vec![0.0; width * width];
        for cur in 0..width {
            for prev in 0..width {
                table[cur * width + prev] = slot_scores[slots.transition(cur, prev)];
            }
        }
        let start = (0..width).map(|a| slot_scores[slots.start(a)]).collect();
        Transitions {
            width,
            slots,
            table,
            start,
        }
    }

    #[inline]
    fn row(&self, cur: usize) -> &[f64] {
        &self.table[cur * self.width..(cur + 1) * self.width]
    }
}

/// Emission scores, `m x (n+1)`, label 0 in column 0.
fn emissions(model: &CrfModel, sim: &SimilarityMatrix) -> Vec<f64> {
    let width = sim.cols() + 1;
    let mut out = Vec::with_capacity(sim.rows() * width);
    for i in 0..sim.rows() {
        out.push(model.null_emission);
        out.extend(sim.row(i).iter().map(|&v| model.emission_scale * v + model.emission_bias));
    }
    out
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn check_labels(sim: &SimilarityMatrix, labels: &[usize]) -> Result<()> {
    if labels.len() != sim.rows() {
        return Err(Error::dimension("label sequence length", sim.rows(), labels.len()));
    }
    if let Some((i, &a)) = labels.iter().enumerate().find(|(_, &a)| a > sim.cols()) {
        return Err(Error::Index(format!(
            "label {a} at position {i} exceeds complex size {}",
            sim.cols()
        )));
    }
    Ok(())
}

/// Total score of `labels`: emissions plus transitions, the first
/// transition coming from the virtual start label.
pub fn sequence_score(model: &CrfModel, sim: &SimilarityMatrix, labels: &[usize]) -> Result<f64> {
    check_labels(sim, labels)?;
    let mut score = 0.0;
    for (i, &a) in labels.iter().enumerate() {
        score += model.emission_unchecked(sim, i, a);
        score += if i == 0 {
            model.start_score(a)
        } else {
            model.transition_score(a, labels[i - 1])
        };
    }
    Ok(score)
}

/// Highest-scoring label sequence in `O(m n^2)`.
///
/// Ties go to the smaller label at the latest position where optimal
/// sequences differ.
pub fn viterbi(model: &CrfModel, sim: &SimilarityMatrix) -> Result<(AlignmentSequence, f64)> {
    let trans = Transitions::new(model, sim.cols());
    viterbi_with(model, sim, &trans)
}

pub(crate) fn viterbi_with(
    model: &CrfModel,
    sim: &SimilarityMatrix,
    trans: &Transitions,
) -> Result<(AlignmentSequence, f64)> {
    let m = sim.rows();
    if m == 0 {
        return Err(Error::EmptyInput("viterbi needs at least one simple sentence"));
    }
    let width = sim.cols() + 1;
    let emit = emissions(model, sim);
    let mut delta: Vec<f64> = (0..width).map(|a| trans.start[a] + emit[a]).collect();
    let mut next = vec![0.0; width];
    let mut back = vec![0u32; m * width];
    for i in 1..m {
        for (cur, slot) in next.iter_mut().enumerate() {
            let row = trans.row(cur);
            let mut best = f64::NEG_INFINITY;
            let mut arg = 0;
            for (prev, (&d, &t)) in delta.iter().zip(row).enumerate() {
                let v = d + t;
                if v > best {
                    best = v;
                    arg = prev;
                }
            }
            *slot = best + emit[i * width + cur];
            back[i * width + cur] = arg as u32;
        }
        std::mem::swap(&mut delta, &mut next);
    }
    let mut last = 0;
    for a in 1..width {
        if delta[a] > delta[last] {
            last = a;
        }
    }
    let score = delta[last];
    let mut labels = vec![0; m];
    labels[m - 1] = last;
    for i in (1..m).rev() {
        labels[i - 1] = back[i * width + labels[i]] as usize;
    }
    Ok((
        AlignmentSequence {
            pair_id: sim.pair_id.clone(),
            labels,
        },
        score,
    ))
}

/// Forward pass: `alpha[i * width + a]`.
fn forward(trans: &Transitions, emit: &[f64], m: usize, width: usize) -> Vec<f64> {
    let mut alpha = vec![0.0; m * width];
    for a in 0..width {
        alpha[a] = trans.start[a] + emit[a];
    }
    let mut buf = vec![0.0; width];
    for i in 1..m {
        let (done, rest) = alpha.split_at_mut(i * width);
        let prev = &done[(i - 1) * width..];
        for cur in 0..width {
            for (b, (&p, &t)) in buf.iter_mut().zip(prev.iter().zip(trans.row(cur))) {
                *b = p + t;
            }
            rest[cur] = log_sum_exp(&buf) + emit[i * width + cur];
        }
    }
    alpha
}

/// Backward pass: `beta[i * width + a]`, with `beta` of the last row 0.
fn backward(trans: &Transitions, emit: &[f64], m: usize, width: usize) -> Vec<f64> {
    let mut beta = vec![0.0; m * width];
    let mut buf = vec![0.0; width];
    for i in (0..m - 1).rev() {
        for prev in 0..width {
            for (cur, b) in buf.iter_mut().enumerate() {
                *b = trans.table[cur * width + prev] + emit[(i + 1) * width + cur] + beta[(i + 1) * width + cur];
            }
            beta[i * width + prev] = log_sum_exp(&buf);
        }
    }
    beta
}

/// `log` of the sum over all `(n+1)^m` label sequences of `exp(score)`.
pub fn log_partition(model: &CrfModel, sim: &SimilarityMatrix) -> Result<f64> {
    let m = sim.rows();
    if m == 0 {
        return Err(Error::EmptyInput("log_partition needs at least one simple sentence"));
    }
    let width = sim.cols() + 1;
    let trans = Transitions::new(model, sim.cols());
    let alpha = forward(&trans, &emissions(model, sim), m, width);
    Ok(log_sum_exp(&alpha[(m - 1) * width..]))
}

/// Negative log-likelihood of `gold` and its gradient over the flat
/// parameter layout of [`CrfModel::params`].
pub fn nll_and_grad(
    model: &CrfModel,
    sim: &SimilarityMatrix,
    gold: &[usize],
) -> Result<(f64, Vec<f64>)> {
    check_labels(sim, gold)?;
    let m = sim.rows();
    if m == 0 {
        return Err(Error::EmptyInput("nll_and_grad needs at least one simple sentence"));
    }
    let n = sim.cols();
    let width = n + 1;
    let trans = Transitions::new(model, n);
    let emit = emissions(model, sim);
    let alpha = forward(&trans, &emit, m, width);
    let beta = backward(&trans, &emit, m, width);
    let log_z = log_sum_exp(&alpha[(m - 1) * width..]);

    let gold_score = {
        let mut s = 0.0;
        for (i, &a) in gold.iter().enumerate() {
            s += emit[i * width + a];
            s += if i == 0 {
                trans.start[a]
            } else {
                trans.table[a * width + gold[i - 1]]
            };
        }
        s
    };

    // Expected minus empirical statistics; the gradient of the NLL.
    let mut slot_delta = vec![0.0; trans.slots.len()];
    let (mut d_null, mut d_scale, mut d_bias) = (0.0, 0.0, 0.0);

    for i in 0..m {
        for a in 0..width {
            let p = (alpha[i * width + a] + beta[i * width + a] - log_z).exp();
            if a == 0 {
                d_null += p;
            } else {
                d_scale += p * sim.get(i, a - 1);
                d_bias += p;
            }
            if i == 0 {
                slot_delta[trans.slots.start(a)] += p;
            }
        }
    }
    for i in 1..m {
        let prev_alpha = &alpha[(i - 1) * width..i * width];
        for cur in 0..width {
            let tail = emit[i * width + cur] + beta[i * width + cur] - log_z;
            let row = trans.row(cur);
            for prev in 0..width {
                let p = (prev_alpha[prev] + row[prev] + tail).exp();
                slot_delta[trans.slots.transition(cur, prev)] += p;
            }
        }
    }
    for (i, &a) in gold.iter().enumerate() {
        if a == 0 {
            d_null -= 1.0;
        } else {
            d_scale -= sim.get(i, a - 1);
            d_bias -= 1.0;
        }
        let slot = if i == 0 {
            trans.slots.start(a)
        } else {
            trans.slots.transition(a, gold[i - 1])
        };
        slot_delta[slot] -= 1.0;
    }

    let mut grad = vec![0.0; model.param_count()];
    for (slot, &delta) in slot_delta.iter().enumerate() {
        model.ffnn_backward(trans.slots.features(slot), delta, &mut grad);
    }
    grad[model.null_emission_index()] += d_null;
    grad[model.emission_scale_index()] += d_scale;
    grad[model.emission_bias_index()] += d_bias;

    Ok((log_z - gold_score, grad))
}
