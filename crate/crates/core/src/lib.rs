//! Sentence alignment between complex documents and their simplified
//! rewrites.
//!
//! The aligner is a linear-chain CRF whose label for each simple sentence is
//! the index of its complex counterpart (or 0 for "unaligned"). Emission
//! scores come from any [`similarity::SentenceScorer`] or from externally
//! produced matrices; transitions are scored by a small feedforward network
//! over label-distance features. A paragraph-alignment pre-pass shrinks the
//! label space before decoding.

pub mod baselines;
pub mod corpus;
pub mod crf;
pub mod error;
pub mod eval;
pub mod para_align;
pub mod pipeline;
pub mod similarity;
pub mod synthetic;
pub mod text;

pub use error::{Error, Result};
