//! Token-level attribution maps for text classifiers and the metrics used to
//! judge them.
//!
//! The crate is `no_std` (with `alloc`). Everything here is pure computation
//! over the [`TextClassifier`] and [`MaskedLm`] interfaces; file formats, the
//! remote-model transport and the command-line driver live in the `attrlab`
//! crate.
//!
//! Module map:
//!
//! - [`types`]: sequences, classifier outputs, mask candidates, attribution maps.
//! - [`models`]: bag-of-words classifier, bigram masked LM, deterministic doubles.
//! - [`attribution`]: leave-one-out, input marginalization, LIME and LIME with MLM infilling.
//! - [`metrics`]: deletion curves, human agreement, sanity checks, descriptive statistics.
//! - [`roar`]: remove-and-retrain corpora and the retraining harness.
//! - [`numstats`]: AUC, Pearson, Welch's t-test, weighted ridge, seeded RNG.
//! - [`annotations`]: turning raw human annotations into binary token highlights.

#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is how NaN gets rejected alongside out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod annotations;
pub mod attribution;
mod error;
pub mod metrics;
pub mod models;
pub mod numstats;
pub mod roar;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    AttributionMap, BinaryMap, ClassifierOutput, LabeledExample, MaskCandidate, MaskedLm, PerturbationMode,
    PhraseAnnotation, ScoreSpace, SentenceHighlights, TextClassifier, TokenSequence,
};
