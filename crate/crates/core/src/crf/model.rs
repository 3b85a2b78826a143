use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::features::{start_features, transition_features};
use crate::error::{Error, Result};
use crate::similarity::SimilarityMatrix;

pub const CHECKPOINT_VERSION: &str = "crf-v1";
pub const DEFAULT_HIDDEN: usize = 32;
pub const DEFAULT_NULL_EMISSION: f64 = 0.5;
const INIT_RANGE: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }

    /// Derivative expressed through the activation output.
    #[inline]
    fn derivative(self, pre: f64, out: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - out * out,
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// CRF parameters: a `4 -> hidden -> 1` feedforward transition scorer plus
/// the emission parameters.
///
/// Emission for position `i` and label `a`:
/// `emission_scale * sim[i][a-1] + emission_bias` when `a >= 1`,
/// `null_emission` when `a == 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrfModel {
    pub version: String,
    pub hidden: usize,
    pub activation: Activation,
    pub w1: Vec<[f64; 4]>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub null_emission: f64,
    pub emission_scale: f64,
    pub emission_bias: f64,
}

impl CrfModel {
    /// All network weights zero, default emissions except `null_emission`.
    pub fn zeros(hidden: usize, null_emission: f64) -> Self {
        CrfModel {
            version: CHECKPOINT_VERSION.to_string(),
            hidden,
            activation: Activation::Tanh,
            w1: vec![[0.0; 4]; hidden],
            b1: vec![0.0; hidden],
            w2: vec![0.0; hidden],
            b2: 0.0,
            null_emission,
            emission_scale: 1.0,
            emission_bias: 0.0,
        }
    }

    /// Tanh network with weights uniform in `[-0.1, 0.1]` drawn from `seed`,
    /// output bias 0 and null emission 0.5.
    pub fn init(hidden: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut model = CrfModel::zeros(hidden, DEFAULT_NULL_EMISSION);
        for row in model.w1.iter_mut() {
            for w in row.iter_mut() {
                *w = rng.gen_range(-INIT_RANGE..=INIT_RANGE);
            }
        }
        for b in model.b1.iter_mut() {
            *b = rng.gen_range(-INIT_RANGE..=INIT_RANGE);
        }
        for w in model.w2.iter_mut() {
            *w = rng.gen_range(-INIT_RANGE..=INIT_RANGE);
        }
        model
    }

    pub fn ffnn(&self, x: [f64; 4]) -> f64 {
        let mut out = self.b2;
        for h in 0..self.hidden {
            let w = &self.w1[h];
            let pre = self.b1[h] + w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + w[3] * x[3];
            out += self.w2[h] * self.activation.apply(pre);
        }
        out
    }

    /// Adds `upstream * d ffnn(x) / d theta` into `grad` (flat parameter layout).
    pub(crate) fn ffnn_backward(&self, x: [f64; 4], upstream: f64, grad: &mut [f64]) {
        if upstream == 0.0 {
            return;
        }
        let h_n = self.hidden;
        let (b1_off, w2_off, b2_off) = (4 * h_n, 5 * h_n, 6 * h_n);
        for h in 0..h_n {
            let w = &self.w1[h];
            let pre = self.b1[h] + w[0] * x[0] + w[1] * x[1] + w[2] * x[2] + w[3] * x[3];
            let out = self.activation.apply(pre);
            grad[w2_off + h] += upstream * out;
            let d_pre = upstream * self.w2[h] * self.activation.derivative(pre, out);
            for (k, xk) in x.iter().enumerate() {
                grad[4 * h + k] += d_pre * xk;
            }
            grad[b1_off + h] += d_pre;
        }
        grad[b2_off] += upstream;
    }

    pub fn transition_score(&self, a_i: usize, a_prev: usize) -> f64 {
        self.ffnn(transition_features(a_i, a_prev).as_array())
    }

    pub fn start_score(&self, a_1: usize) -> f64 {
        self.ffnn(start_features(a_1).as_array())
    }

    /// Emission of label `label` at 0-based simple position `i`.
    pub fn emission_score(&self, sim: &SimilarityMatrix, i: usize, label: usize) -> Result<f64> {
        if i >= sim.rows() || label > sim.cols() {
            return Err(Error::Index(format!(
                "emission ({i}, {label}) outside {}x{} (labels 0..={})",
                sim.rows(),
                sim.cols(),
                sim.cols()
            )));
        }
        Ok(self.emission_unchecked(sim, i, label))
    }

    #[inline]
    pub(crate) fn emission_unchecked(&self, sim: &SimilarityMatrix, i: usize, label: usize) -> f64 {
        if label == 0 {
            self.null_emission
        } else {
            self.emission_scale * sim.get(i, label - 1) + self.emission_bias
        }
    }

    pub fn param_count(&self) -> usize {
        6 * self.hidden + 4
    }

    pub(crate) fn null_emission_index(&self) -> usize {
        6 * self.hidden + 1
    }

    pub(crate) fn emission_scale_index(&self) -> usize {
        6 * self.hidden + 2
    }

    pub(crate) fn emission_bias_index(&self) -> usize {
        6 * self.hidden + 3
    }

    /// Flat parameter vector: `w1` row-major, `b1`, `w2`, `b2`,
    /// `null_emission`, `emission_scale`, `emission_bias`.
    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        p.extend(self.w1.iter().flatten());
        p.extend(&self.b1);
        p.extend(&self.w2);
        p.extend([self.b2, self.null_emission, self.emission_scale, self.emission_bias]);
        p
    }

    pub fn set_params(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.param_count(), "parameter vector length");
        let h = self.hidden;
        for (row, chunk) in self.w1.iter_mut().zip(p[..4 * h].chunks_exact(4)) {
            row.copy_from_slice(chunk);
        }
        self.b1.copy_from_slice(&p[4 * h..5 * h]);
        self.w2.copy_from_slice(&p[5 * h..6 * h]);
        self.b2 = p[6 * h];
        self.null_emission = p[6 * h + 1];
        self.emission_scale = p[6 * h + 2];
        self.emission_bias = p[6 * h + 3];
    }

    /// Human-readable name of flat parameter `idx`.
    pub fn param_name(&self, idx: usize) -> String {
        let h = self.hidden;
        match idx {
            i if i < 4 * h => format!("w1[{}][{}]", i / 4, i % 4),
            i if i < 5 * h => format!("b1[{}]", i - 4 * h),
            i if i < 6 * h => format!("w2[{}]", i - 5 * h),
            i if i == 6 * h => "b2".into(),
            i if i == 6 * h + 1 => "null_emission".into(),
            i if i == 6 * h + 2 => "emission_scale".into(),
            _ => "emission_bias".into(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.version != CHECKPOINT_VERSION {
            return Err(Error::Model(format!(
                "checkpoint version {:?}, expected {CHECKPOINT_VERSION:?}",
                self.version
            )));
        }
        let h = self.hidden;
        if h == 0 || self.w1.len() != h || self.b1.len() != h || self.w2.len() != h {
            return Err(Error::Model(format!(
                "inconsistent shapes for hidden size {h}: w1 {}, b1 {}, w2 {}",
                self.w1.len(),
                self.b1.len(),
                self.w2.len()
            )));
        }
        if let Some(idx) = self.params().iter().position(|v| !v.is_finite()) {
            return Err(Error::Model(format!("non-finite {}", self.param_name(idx))));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: CrfModel =
            serde_json::from_str(text).map_err(|e| Error::Model(format!("corrupt checkpoint: {e}")))?;
        model.validate()?;
        Ok(model)
    }
}

pub fn save_model(model: &CrfModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, model.to_json() + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<CrfModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    CrfModel::from_json(&text)
}
