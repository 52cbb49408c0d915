//! Situation recognition over verb/role frames with a gated graph network.
//!
//! A situation is a verb plus a noun assignment for each role of the verb's
//! frame. The model scores both from per-image feature vectors: a fixed
//! 7-slot graph (slot 0 = verb, slots 1-6 = padded role slots) is initialized
//! from the features, messages propagate for a configurable number of steps
//! through a choice of edge structures, and softmax heads read each slot.
//!
//! The crate provides training (RMSProp + BPTT on a deterministic tape),
//! greedy and beam decoding, the standard accuracy metrics, structure
//! analysis (message-norm matrices, embedding export), a synthetic data
//! generator with plantable cross-role correlation, and a CLI.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod inference;
pub mod model;
pub mod numerics;
pub mod ontology;
pub mod synthetic;
pub mod topology;
pub mod training;

pub use error::{Error, Result};
