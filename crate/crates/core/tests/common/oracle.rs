//! Brute-force reference for the CRF, written directly from the model
//! definition without touching the crate's inference code.

#![allow(dead_code)]

use rand::Rng;
use simalign::crf::{Activation, CrfModel};
use simalign::similarity::SimilarityMatrix;

/// `[g1, g2, g3, g4]` for `cur` following `prev`; `None` is the virtual start.
pub fn features(cur: usize, prev: Option<usize>) -> [f64; 4] {
    match prev {
        None => [0.0, 0.0, 0.0, if cur == 0 { 1.0 } else { 0.0 }],
        Some(p) => [
            (cur as f64 - p as f64).abs(),
            (cur == 0 && p != 0) as u8 as f64,
            (cur != 0 && p == 0) as u8 as f64,
            (cur == 0 && p == 0) as u8 as f64,
        ],
    }
}

pub fn network(model: &CrfModel, x: [f64; 4]) -> f64 {
    let mut out = model.b2;
    for h in 0..model.hidden {
        let mut pre = model.b1[h];
        for k in 0..4 {
            pre += model.w1[h][k] * x[k];
        }
        let act = match model.activation {
            Activation::Tanh => pre.tanh(),
            Activation::Relu => pre.max(0.0),
        };
        out += model.w2[h] * act;
    }
    out
}

pub fn emission(model: &CrfModel, sim: &SimilarityMatrix, i: usize, a: usize) -> f64 {
    if a == 0 {
        model.null_emission
    } else {
        model.emission_scale * sim.get(i, a - 1) + model.emission_bias
    }
}

pub fn score(model: &CrfModel, sim: &SimilarityMatrix, labels: &[usize]) -> f64 {
    let mut total = 0.0;
    for (i, &a) in labels.iter().enumerate() {
        let prev = if i == 0 { None } else { Some(labels[i - 1]) };
        total += emission(model, sim, i, a) + network(model, features(a, prev));
    }
    total
}

/// Every sequence in `{0..=n}^m`, in lexicographic order.
pub fn all_sequences(m: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..m {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                (0..=n).map(move |a| {
                    let mut next = prefix.clone();
                    next.push(a);
                    next
                })
            })
            .collect();
    }
    out
}

pub fn scored(model: &CrfModel, sim: &SimilarityMatrix) -> Vec<(Vec<usize>, f64)> {
    all_sequences(sim.rows(), sim.cols())
        .into_iter()
        .map(|labels| {
            let s = score(model, sim, &labels);
            (labels, s)
        })
        .collect()
}

/// `log sum exp(score)` by plain summation around the max.
pub fn log_z(model: &CrfModel, sim: &SimilarityMatrix) -> f64 {
    let scores: Vec<f64> = scored(model, sim).into_iter().map(|(_, s)| s).collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + scores.iter().map(|s| (s - max).exp()).sum::<f64>().ln()
}

pub fn nll(model: &CrfModel, sim: &SimilarityMatrix, gold: &[usize]) -> f64 {
    log_z(model, sim) - score(model, sim, gold)
}

/// Best sequence and the gap to the runner-up score.
pub fn argmax(model: &CrfModel, sim: &SimilarityMatrix) -> (Vec<usize>, f64, f64) {
    let mut all = scored(model, sim);
    all.sort_by(|a, b| b.1.total_cmp(&a.1));
    let gap = if all.len() > 1 { all[0].1 - all[1].1 } else { f64::INFINITY };
    let (labels, best) = all.swap_remove(0);
    (labels, best, gap)
}

/// Model with every parameter uniform in `[-scale, scale]`.
pub fn random_model(rng: &mut impl Rng, hidden: usize, activation: Activation, scale: f64) -> CrfModel {
    let mut model = CrfModel::zeros(hidden, 0.0);
    model.activation = activation;
    let params: Vec<f64> = (0..model.param_count()).map(|_| rng.gen_range(-scale..=scale)).collect();
    model.set_params(&params);
    model
}

pub fn random_sim(rng: &mut impl Rng, m: usize, n: usize) -> SimilarityMatrix {
    let rows = (0..m).map(|_| (0..n).map(|_| rng.gen::<f64>()).collect()).collect();
    SimilarityMatrix::new("oracle", rows).expect("valid matrix")
}

pub fn random_labels(rng: &mut impl Rng, m: usize, n: usize) -> Vec<usize> {
    (0..m).map(|_| rng.gen_range(0..=n)).collect()
}

/// Central differences of the brute-force NLL over every flat parameter.
pub fn finite_difference(model: &CrfModel, sim: &SimilarityMatrix, gold: &[usize], eps: f64) -> Vec<f64> {
    let base = model.params();
    (0..base.len())
        .map(|k| {
            let mut plus = model.clone();
            let mut p = base.clone();
            p[k] += eps;
            plus.set_params(&p);
            let mut minus = model.clone();
            p[k] = base[k] - eps;
            minus.set_params(&p);
            (nll(&plus, sim, gold) - nll(&minus, sim, gold)) / (2.0 * eps)
        })
        .collect()
}

/// `|a - b|` relative to the larger magnitude, floored at `floor` so
/// near-zero components are compared absolutely.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}
