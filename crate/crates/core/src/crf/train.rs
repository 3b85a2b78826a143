use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::inference::nll_and_grad;
use super::model::{CrfModel, DEFAULT_HIDDEN};
use super::AlignmentSequence;
use crate::error::{Error, Result};
use crate::similarity::SimilarityMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    GradientDescent,
    Adam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub optimizer: OptimizerKind,
    /// Weight decay on the network weights (not biases or emissions).
    pub l2: f64,
    pub seed: u64,
    pub train_emission_affine: bool,
    pub hidden: usize,
    /// `None` takes one step per epoch over the whole dataset.
    pub batch_size: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-2,
            epochs: 100,
            optimizer: OptimizerKind::Adam,
            l2: 0.0,
            seed: 0,
            train_emission_affine: false,
            hidden: DEFAULT_HIDDEN,
            batch_size: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainingInstance {
    pub sim: SimilarityMatrix,
    pub gold: AlignmentSequence,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: CrfModel,
    /// Mean NLL per epoch, measured on the parameters each batch was stepped from.
    pub epoch_nll: Vec<f64>,
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new(len: usize) -> Self {
        Adam {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::BETA1.powi(self.t);
        let c2 = 1.0 - Self::BETA2.powi(self.t);
        for k in 0..params.len() {
            self.m[k] = Self::BETA1 * self.m[k] + (1.0 - Self::BETA1) * grad[k];
            self.v[k] = Self::BETA2 * self.v[k] + (1.0 - Self::BETA2) * grad[k] * grad[k];
            params[k] -= lr * (self.m[k] / c1) / ((self.v[k] / c2).sqrt() + Self::EPS);
        }
    }
}

fn validate(dataset: &[TrainingInstance], config: &TrainConfig) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::EmptyInput("training set is empty"));
    }
    if !(config.learning_rate >= 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::InvalidArgument(format!("learning rate {}", config.learning_rate)));
    }
    if !(config.l2 >= 0.0 && config.l2.is_finite()) {
        return Err(Error::InvalidArgument(format!("l2 {}", config.l2)));
    }
    if config.epochs == 0 || config.hidden == 0 || config.batch_size == Some(0) {
        return Err(Error::InvalidArgument(
            "epochs, hidden and batch size must be positive".into(),
        ));
    }
    for (k, inst) in dataset.iter().enumerate() {
        let (m, n) = (inst.sim.rows(), inst.sim.cols());
        if m == 0 {
            return Err(Error::InvalidArgument(format!("instance {k} has no simple sentences")));
        }
        if inst.gold.labels.len() != m {
            return Err(Error::dimension(format!("gold length of instance {k}"), m, inst.gold.labels.len()));
        }
        if let Some(&a) = inst.gold.labels.iter().find(|&&a| a > n) {
            return Err(Error::Index(format!("instance {k}: gold label {a} exceeds {n}")));
        }
    }
    Ok(())
}

/// Trains a freshly initialized model (seeded by `config.seed`).
pub fn train(dataset: &[TrainingInstance], config: &TrainConfig) -> Result<TrainOutcome> {
    train_from(CrfModel::init(config.hidden, config.seed), dataset, config)
}

/// Maximizes the conditional log-likelihood of the gold sequences, starting
/// from `model`. Instances are visited in dataset order; per-batch gradients
/// are summed in that order, so results are reproducible.
pub fn train_from(
    mut model: CrfModel,
    dataset: &[TrainingInstance],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    validate(dataset, config)?;
    let batch = config.batch_size.unwrap_or(dataset.len());
    let n_params = model.param_count();
    let net_weights = 6 * model.hidden;
    let frozen = [model.emission_scale_index(), model.emission_bias_index()];
    let mut adam = Adam::new(n_params);
    let mut params = model.params();
    let mut epoch_nll = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        let mut total = 0.0;
        for chunk in dataset.chunks(batch) {
            model.set_params(&params);
            let results: Vec<(f64, Vec<f64>)> = chunk
                .par_iter()
                .map(|inst| nll_and_grad(&model, &inst.sim, &inst.gold.labels))
                .collect::<Result<_>>()?;
            let mut grad = vec![0.0; n_params];
            for (nll, g) in &results {
                total += nll;
                for (acc, x) in grad.iter_mut().zip(g) {
                    *acc += x;
                }
            }
            let scale = 1.0 / chunk.len() as f64;
            for (k, g) in grad.iter_mut().enumerate() {
                *g *= scale;
                // w1 and w2 only; b1 sits between them in the layout
                let is_weight = k < 4 * model.hidden || (5 * model.hidden..net_weights).contains(&k);
                if is_weight {
                    *g += config.l2 * params[k];
                }
            }
            if !config.train_emission_affine {
                for k in frozen {
                    grad[k] = 0.0;
                }
            }
            match config.optimizer {
                OptimizerKind::Adam => adam.step(&mut params, &grad, config.learning_rate),
                OptimizerKind::GradientDescent => {
                    for (p, g) in params.iter_mut().zip(&grad) {
                        *p -= config.learning_rate * g;
                    }
                }
            }
        }
        epoch_nll.push(total / dataset.len() as f64);
    }
    model.set_params(&params);
    if let Some(idx) = params.iter().position(|v| !v.is_finite()) {
        return Err(Error::Model(format!("training diverged at {}", model.param_name(idx))));
    }
    Ok(TrainOutcome { model, epoch_nll })
}
