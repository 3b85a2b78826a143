//! Linear-chain CRF over per-document alignment labels.
//!
//! Each simple sentence `i` takes a label `a_i` in `0..=n`: the 1-based index
//! of its complex counterpart, or 0 when it has none. A sequence scores the
//! sum of per-position emissions (sentence similarity, or a learned constant
//! for label 0) and transitions `T(a_i, a_{i-1})` produced by a small
//! feedforward network over four label-distance features.

mod decode;
mod features;
mod inference;
mod model;
mod train;

use serde::{Deserialize, Serialize};

pub use decode::{decode_independent, decode_pair, map_block_labels};
pub use features::{start_features, transition_features, TransitionFeatures};
pub use inference::{log_partition, nll_and_grad, sequence_score, viterbi};
pub use model::{
    load_model, save_model, Activation, CrfModel, CHECKPOINT_VERSION, DEFAULT_HIDDEN,
    DEFAULT_NULL_EMISSION,
};
pub use train::{train, train_from, OptimizerKind, TrainConfig, TrainOutcome, TrainingInstance};

/// One label per simple sentence; 0 means unaligned.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentSequence {
    pub pair_id: String,
    pub labels: Vec<usize>,
}
