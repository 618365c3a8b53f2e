//! Privacy-preserving mood prediction from mobile typed-text data.
//!
//! The crate covers the whole experimental pipeline: a synthetic event-log
//! generator with planted identity and mood signals, daily featurization,
//! MLP and kernel SVM classifiers, the noisy-identity MLP that obfuscates
//! user identity in learned representations, and the evaluation protocol
//! (nested cross-validation, identity probes, signed-rank tests, trade-off
//! reporting).

pub mod analysis;
pub mod artifact;
pub mod cli;
pub mod datamodel;
pub mod error;
pub mod eval;
mod extended_float;
pub mod features;
pub mod nimlp;
pub mod nnet;
pub mod plot;
pub mod rng;
pub mod svm;
pub mod synthgen;

pub use error::{Error, Result};
