//! Desk-scale models that run offline: a retrainable bag-of-words
//! classifier, a bigram masked LM and deterministic doubles.

mod bow;
pub mod doubles;
mod ngram;

pub use bow::{softmax, train_bow, train_bow_with_history, BowClassifier, TrainConfig, TrainingData};
pub use doubles::{
    keyword_corpus, make_double, ConstantClassifier, DeltaMlm, DoubleKind, FixedMlm, KeywordClassifier,
    LookupClassifier, ModelDouble, PresenceClassifier, TableMlm, UniformMlm,
};
pub use ngram::{NgramMlm, DEFAULT_ALPHA, DEFAULT_LAMBDA};

use crate::types::TokenSequence;
use crate::Result;

/// Trains the bigram MLM; see [`NgramMlm`].
pub fn train_ngram_mlm(texts: &[TokenSequence], alpha: f64, lambda: f64) -> Result<NgramMlm> {
    NgramMlm::train(texts, alpha, lambda)
}
