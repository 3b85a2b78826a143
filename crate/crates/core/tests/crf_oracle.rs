mod common;

use common::oracle;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use simalign::crf::{
    log_partition, nll_and_grad, sequence_score, train, train_from, viterbi, Activation, CrfModel,
    OptimizerKind, TrainConfig, TrainingInstance, AlignmentSequence,
};
use simalign::similarity::SimilarityMatrix;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sim(rows: &[&[f64]]) -> SimilarityMatrix {
    SimilarityMatrix::new("t", rows.iter().map(|r| r.to_vec()).collect()).unwrap()
}

fn activation(r: &mut impl Rng) -> Activation {
    if r.gen_bool(0.5) {
        Activation::Tanh
    } else {
        Activation::Relu
    }
}

#[test]
fn viterbi_matches_exhaustive_search() {
    let mut r = rng(11);
    for trial in 0..150 {
        let (m, n) = (r.gen_range(1..=4), r.gen_range(0..=4));
        let act = activation(&mut r);
        let hidden = r.gen_range(1..=4);
        let model = oracle::random_model(&mut r, hidden, act, 1.0);
        let s = oracle::random_sim(&mut r, m, n);
        let (seq, best) = viterbi(&model, &s).unwrap();
        let (labels, expected, gap) = oracle::argmax(&model, &s);
        assert!((best - expected).abs() < 1e-9, "trial {trial}: {best} vs {expected}");
        if gap > 1e-9 {
            assert_eq!(seq.labels, labels, "trial {trial}");
        }
    }
}

#[test]
fn partition_and_normalization() {
    let mut r = rng(12);
    for trial in 0..100 {
        let (m, n) = (r.gen_range(1..=4), r.gen_range(0..=4));
        let act = activation(&mut r);
        let model = oracle::random_model(&mut r, 3, act, 1.0);
        let s = oracle::random_sim(&mut r, m, n);
        let lz = log_partition(&model, &s).unwrap();
        let brute: f64 = oracle::scored(&model, &s).iter().map(|(_, v)| v.exp()).sum();
        assert!(oracle::relative_error(lz.exp(), brute, 0.0) < 1e-9, "trial {trial}");
        if m <= 3 && n <= 3 {
            let total: f64 = oracle::all_sequences(m, n)
                .iter()
                .map(|a| (sequence_score(&model, &s, a).unwrap() - lz).exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-9, "trial {trial}: {total}");
        }
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut r = rng(13);
    for trial in 0..25 {
        let (m, n) = (r.gen_range(1..=4), r.gen_range(1..=4));
        let hidden = r.gen_range(1..=3);
        let model = oracle::random_model(&mut r, hidden, Activation::Tanh, 1.0);
        let s = oracle::random_sim(&mut r, m, n);
        let gold = oracle::random_labels(&mut r, m, n);
        let (nll, grad) = nll_and_grad(&model, &s, &gold).unwrap();
        assert!((nll - oracle::nll(&model, &s, &gold)).abs() < 1e-9);
        let fd = oracle::finite_difference(&model, &s, &gold, 1e-4);
        for (k, (a, f)) in grad.iter().zip(&fd).enumerate() {
            let err = oracle::relative_error(*a, *f, 1e-2);
            assert!(err < 1e-4, "trial {trial}, {}: analytic {a} vs numeric {f}", model.param_name(k));
        }
    }
}

#[test]
fn toy_sequence_scores() {
    let model = CrfModel::zeros(4, 0.0);
    let s = sim(&[&[0.9, 0.2], &[0.1, 0.8]]);
    assert!((sequence_score(&model, &s, &[1, 2]).unwrap() - 1.7).abs() < 1e-12);
    assert_eq!(sequence_score(&model, &s, &[0, 0]).unwrap(), 0.0);
    let (seq, best) = viterbi(&model, &s).unwrap();
    assert_eq!(seq.labels, vec![1, 2]);
    assert!((best - 1.7).abs() < 1e-12);
    let expected: f64 = oracle::scored(&model, &s).iter().map(|(_, v)| v.exp()).sum::<f64>().ln();
    assert!((log_partition(&model, &s).unwrap() - expected).abs() < 1e-12);
    assert!(sequence_score(&model, &s, &[1]).is_err());
    assert!(sequence_score(&model, &s, &[1, 3]).is_err());
}

#[test]
fn degenerate_shapes() {
    let model = CrfModel::init(8, 0);
    let empty_complex = SimilarityMatrix::new("t", vec![vec![], vec![], vec![]]).unwrap();
    assert_eq!(viterbi(&model, &empty_complex).unwrap().0.labels, vec![0, 0, 0]);
    let none = SimilarityMatrix::new("t", vec![]).unwrap_or_else(|_| SimilarityMatrix::from_fn("t", 0, 2, |_, _| 0.0).unwrap());
    assert!(viterbi(&model, &none).is_err());

    let flat = CrfModel::zeros(2, 0.0);
    assert!((log_partition(&flat, &sim(&[&[0.0]])).unwrap() - 2f64.ln()).abs() < 1e-15);
    let (nll, _) = nll_and_grad(&flat, &sim(&[&[0.3], &[0.3]]), &[1, 0]).unwrap();
    // constant similarity shifts every non-null emission by the same amount,
    // so equal mass needs sim 0 for the four sequences to tie
    assert!(nll > 0.0);
    let (nll, _) = nll_and_grad(&flat, &sim(&[&[0.0], &[0.0]]), &[1, 0]).unwrap();
    assert!((nll - 2.0 * 2f64.ln()).abs() < 1e-12);
}

#[test]
fn confident_model_has_near_zero_nll() {
    let model = CrfModel::zeros(2, -50.0);
    let (nll, _) = nll_and_grad(&model, &sim(&[&[1.0]]), &[1]).unwrap();
    assert!((0.0..1e-3).contains(&nll), "{nll}");
}

#[test]
fn exact_ties_prefer_smaller_labels() {
    // every sequence scores 0
    let model = CrfModel::zeros(3, 0.0);
    let s = SimilarityMatrix::from_fn("t", 3, 3, |_, _| 0.0).unwrap();
    assert_eq!(viterbi(&model, &s).unwrap().0.labels, vec![0, 0, 0]);
    // last position tied between 1 and 2; earlier position forced to 2
    let s = sim(&[&[0.0, 5.0 / 8.0], &[0.5, 0.5]]);
    let model = CrfModel::zeros(3, -1.0);
    assert_eq!(viterbi(&model, &s).unwrap().0.labels, vec![2, 1]);
}

#[test]
fn constant_emission_shift() {
    let mut r = rng(14);
    for _ in 0..30 {
        let (m, n) = (r.gen_range(1..=4), r.gen_range(1..=4));
        let model = oracle::random_model(&mut r, 3, Activation::Tanh, 1.0);
        let s = oracle::random_sim(&mut r, m, n);
        let c = r.gen_range(-3.0..3.0);
        let mut shifted = model.clone();
        shifted.null_emission += c;
        shifted.emission_bias += c;
        let (a, sa) = viterbi(&model, &s).unwrap();
        let (b, sb) = viterbi(&shifted, &s).unwrap();
        let (_, _, gap) = oracle::argmax(&model, &s);
        if gap > 1e-9 {
            assert_eq!(a.labels, b.labels);
        }
        assert!((sb - sa - m as f64 * c).abs() < 1e-9);
        let labels = oracle::random_labels(&mut r, m, n);
        let d = sequence_score(&shifted, &s, &labels).unwrap() - sequence_score(&model, &s, &labels).unwrap();
        assert!((d - m as f64 * c).abs() < 1e-9);
    }
}

/// Viterbi that calls the network for every transition instead of a table.
fn viterbi_on_the_fly(model: &CrfModel, s: &SimilarityMatrix) -> Vec<usize> {
    let (m, width) = (s.rows(), s.cols() + 1);
    let mut delta: Vec<f64> = (0..width)
        .map(|a| model.start_score(a) + model.emission_score(s, 0, a).unwrap())
        .collect();
    let mut back = vec![vec![0; width]; m];
    for i in 1..m {
        let mut next = vec![0.0; width];
        for cur in 0..width {
            let (mut arg, mut best) = (0, f64::NEG_INFINITY);
            for prev in 0..width {
                let v = delta[prev] + model.transition_score(cur, prev);
                if v > best {
                    best = v;
                    arg = prev;
                }
            }
            next[cur] = best + model.emission_score(s, i, cur).unwrap();
            back[i][cur] = arg;
        }
        delta = next;
    }
    let mut last = 0;
    for a in 1..width {
        if delta[a] > delta[last] {
            last = a;
        }
    }
    let mut labels = vec![last; m];
    for i in (1..m).rev() {
        labels[i - 1] = back[i][labels[i]];
    }
    labels
}

#[test]
fn table_decode_equals_on_the_fly() {
    let mut r = rng(15);
    for _ in 0..50 {
        let (m, n) = (r.gen_range(1..=8), r.gen_range(0..=8));
        let act = activation(&mut r);
        let model = oracle::random_model(&mut r, 4, act, 1.0);
        let s = oracle::random_sim(&mut r, m, n);
        assert_eq!(viterbi(&model, &s).unwrap().0.labels, viterbi_on_the_fly(&model, &s));
    }
}

#[test]
fn transitions_depend_on_gap_only() {
    let mut r = rng(16);
    let model = oracle::random_model(&mut r, 4, Activation::Tanh, 1.0);
    for (a, b, c) in [(3, 1, 4), (2, 5, 1), (1, 1, 7)] {
        assert_eq!(model.transition_score(a, b), model.transition_score(a + c, b + c));
    }
}

fn instance(s: SimilarityMatrix, labels: Vec<usize>) -> TrainingInstance {
    TrainingInstance {
        sim: s,
        gold: AlignmentSequence {
            pair_id: "t".into(),
            labels,
        },
    }
}

#[test]
fn training_decreases_nll() {
    let data = vec![instance(sim(&[&[0.7, 0.2, 0.1], &[0.3, 0.4, 0.5], &[0.1, 0.2, 0.3]]), vec![1, 2, 0])];
    for optimizer in [OptimizerKind::Adam, OptimizerKind::GradientDescent] {
        let config = TrainConfig {
            learning_rate: 0.1,
            epochs: 200,
            optimizer,
            ..TrainConfig::default()
        };
        let out = train(&data, &config).unwrap();
        let first = out.epoch_nll[0];
        let last = *out.epoch_nll.last().unwrap();
        assert!(last < first, "{optimizer:?}: {first} -> {last}");
        let (final_nll, _) = nll_and_grad(&out.model, &data[0].sim, &data[0].gold.labels).unwrap();
        assert!(final_nll < first);
    }
}

#[test]
fn zero_learning_rate_is_identity() {
    let data = vec![instance(sim(&[&[0.7, 0.2], &[0.3, 0.4]]), vec![1, 2])];
    let start = CrfModel::init(8, 5);
    let config = TrainConfig {
        learning_rate: 0.0,
        epochs: 5,
        train_emission_affine: true,
        ..TrainConfig::default()
    };
    let out = train_from(start.clone(), &data, &config).unwrap();
    assert_eq!(out.model.params().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
               start.params().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
}

#[test]
fn training_is_deterministic_and_checks_inputs() {
    let mut r = rng(17);
    let data: Vec<TrainingInstance> = (0..6)
        .map(|_| {
            let (m, n) = (r.gen_range(1..=5), r.gen_range(1..=5));
            instance(oracle::random_sim(&mut r, m, n), oracle::random_labels(&mut r, m, n))
        })
        .collect();
    let config = TrainConfig {
        epochs: 10,
        batch_size: Some(4),
        l2: 1e-3,
        ..TrainConfig::default()
    };
    let a = train(&data, &config).unwrap();
    let b = train(&data, &config).unwrap();
    assert_eq!(a.model.to_json(), b.model.to_json());
    assert_eq!(a.epoch_nll, b.epoch_nll);
    // frozen emission affine
    assert_eq!((a.model.emission_scale, a.model.emission_bias), (1.0, 0.0));

    let mut bad = data.clone();
    bad[3].gold.labels.push(0);
    assert!(train(&bad, &config).is_err());
    assert!(train(&[], &config).is_err());
}

mod props {
    use proptest::prelude::*;

    use super::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn nll_is_non_negative(seed in any::<u64>(), m in 1usize..5, n in 0usize..5) {
            let mut r = rng(seed);
            let model = oracle::random_model(&mut r, 2, Activation::Tanh, 2.0);
            let s = oracle::random_sim(&mut r, m, n);
            let gold = oracle::random_labels(&mut r, m, n);
            let (nll, grad) = nll_and_grad(&model, &s, &gold).unwrap();
            prop_assert!(nll >= -1e-12);
            prop_assert!(grad.iter().all(|g| g.is_finite()));
            let (_, best) = viterbi(&model, &s).unwrap();
            prop_assert!(log_partition(&model, &s).unwrap() >= best);
        }
    }
}
