use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{log_odds, DEFAULT_EPSILON};
use crate::types::{AttributionMap, PerturbationMode, ScoreSpace, TextClassifier, TokenSequence};
use crate::{Error, Result};

pub const UNK_TOKEN: &str = "[UNK]";
pub const PAD_TOKEN: &str = "[PAD]";

/// Leave-one-out configuration: delete the token, or overwrite it with a
/// fixed placeholder.
#[derive(Debug, Clone, PartialEq)]
pub struct LooConfig {
    pub mode: PerturbationMode,
    pub log_odds_space: bool,
}

impl LooConfig {
    /// LOO_empty: the token is erased without replacement.
    pub fn empty() -> Self {
        LooConfig { mode: PerturbationMode::DeleteToken, log_odds_space: true }
    }

    /// LOO_unk: the token is overwritten with `[UNK]`.
    pub fn unk() -> Self {
        Self::replace(UNK_TOKEN)
    }

    /// LOO_zero: the token is overwritten with `[PAD]`, which the builtin
    /// classifier maps to an all-zero feature.
    pub fn zero() -> Self {
        Self::replace(PAD_TOKEN)
    }

    pub fn replace(token: &str) -> Self {
        LooConfig { mode: PerturbationMode::ReplaceWithFixed(token.into()), log_odds_space: true }
    }

    pub fn method_name(&self) -> String {
        match &self.mode {
            PerturbationMode::DeleteToken => "loo-empty".into(),
            PerturbationMode::ReplaceWithFixed(t) if t == UNK_TOKEN => "loo-unk".into(),
            PerturbationMode::ReplaceWithFixed(t) if t == PAD_TOKEN => "loo-zero".into(),
            PerturbationMode::ReplaceWithFixed(t) => format!("loo-replace:{t}"),
            _ => "loo".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.mode {
            PerturbationMode::DeleteToken | PerturbationMode::ReplaceWithFixed(_) => self.mode.validate(),
            other => Err(Error::InvalidConfig(format!("LOO does not support {other:?}"))),
        }
    }
}

impl Default for LooConfig {
    fn default() -> Self {
        Self::empty()
    }
}

/// `scores[i] = g(f(x)) − g(f(x₋ᵢ))` at `target_label`, with `g` the
/// log-odds transform or the identity.
pub fn loo_attribution<C: TextClassifier + ?Sized>(
    classifier: &C,
    sequence: &TokenSequence,
    target_label: &str,
    config: &LooConfig,
) -> Result<AttributionMap> {
    config.validate()?;
    sequence.validate()?;
    if config.mode == PerturbationMode::DeleteToken && sequence.len() < 2 {
        return Err(Error::InputTooShort { len: sequence.len(), min: 2 });
    }
    let transform = |p: f64| if config.log_odds_space { log_odds(p, DEFAULT_EPSILON) } else { p };
    let base = transform(classifier.prob(sequence, target_label)?);
    let mut scores = Vec::with_capacity(sequence.len());
    for i in 0..sequence.len() {
        let counterfactual = match &config.mode {
            PerturbationMode::DeleteToken => sequence.without(i)?,
            PerturbationMode::ReplaceWithFixed(t) => sequence.replaced(i, t)?,
            _ => unreachable!("validated above"),
        };
        scores.push(base - transform(classifier.prob(&counterfactual, target_label)?));
    }
    let space = if config.log_odds_space { ScoreSpace::LogOdds } else { ScoreSpace::Probability };
    Ok(AttributionMap::new(scores, config.method_name(), target_label, space))
}
