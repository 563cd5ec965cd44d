//! Crowd label aggregation, annotation-based difficulty scoring and
//! easy-to-hard curriculum training of feed-forward networks.
//!
//! The pipeline: load or [simulate](synth) crowd annotations, aggregate them
//! into consensus labels ([`aggregation`]), score each training item's
//! difficulty ([`difficulty`]), split the training set into difficulty bins
//! with a greedy per-bin learning-rate search ([`curriculum`]), and train the
//! [network](nn) bin by bin. [`experiment`] runs whole conditions over many
//! seeds and compares them with [`metrics`].

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aggregation;
pub mod curriculum;
pub mod data;
pub mod difficulty;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod nn;
pub mod par;
pub mod synth;

pub use error::{Error, Result};
