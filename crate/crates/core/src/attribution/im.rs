use alloc::format;
use alloc::vec::Vec;

use super::{log_odds, DEFAULT_EPSILON};
use crate::types::{AttributionMap, MaskCandidate, MaskedLm, ScoreSpace, TextClassifier, TokenSequence};
use crate::{Error, Result};

/// Input marginalization settings. Candidates are thresholded at
/// `min_likelihood` and then truncated to `top_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImConfig {
    pub top_k: usize,
    pub min_likelihood: f64,
    /// Rescale the kept likelihoods to sum to one.
    pub renormalize: bool,
    pub epsilon: f64,
}

impl Default for ImConfig {
    fn default() -> Self {
        ImConfig { top_k: 10, min_likelihood: 1e-5, renormalize: true, epsilon: DEFAULT_EPSILON }
    }
}

impl ImConfig {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::InvalidConfig("top_k must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.min_likelihood) {
            return Err(Error::InvalidConfig(format!("min_likelihood {} not in [0, 1)", self.min_likelihood)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return Err(Error::InvalidConfig(format!("epsilon {} not in (0, 0.5)", self.epsilon)));
        }
        Ok(())
    }
}

/// What happened at one position while marginalizing.
#[derive(Debug, Clone, PartialEq)]
pub struct ImPosition {
    pub candidates: Vec<MaskCandidate>,
    /// Weight of each candidate in the expectation (renormalized if configured).
    pub weights: Vec<f64>,
    /// Target-label probability of each counterfactual.
    pub counterfactual_probs: Vec<f64>,
    /// `Σ weight · f(counterfactual)`; `None` when no candidate survived.
    pub expected: Option<f64>,
    /// Weight carried by the original token (0 when it is not a candidate).
    pub original_weight: f64,
}

/// The attribution map together with every intermediate quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct ImTrace {
    pub map: AttributionMap,
    pub base_prob: f64,
    pub positions: Vec<ImPosition>,
}

/// `scores[i] = log_odds(f(x)) − log_odds(Σ p̂(x̃) f(x₋ᵢ, x̃))` over the MLM's
/// candidates for position `i`.
pub fn im_attribution<C, M>(
    classifier: &C,
    mlm: &M,
    sequence: &TokenSequence,
    target_label: &str,
    config: &ImConfig,
) -> Result<AttributionMap>
where
    C: TextClassifier + ?Sized,
    M: MaskedLm + ?Sized,
{
    Ok(im_trace(classifier, mlm, sequence, target_label, config)?.map)
}

/// [`im_attribution`] keeping the per-position expectation and candidate weights.
///
/// A position whose candidate list is empty after filtering scores 0 and is
/// listed in `map.no_candidates`.
pub fn im_trace<C, M>(
    classifier: &C,
    mlm: &M,
    sequence: &TokenSequence,
    target_label: &str,
    config: &ImConfig,
) -> Result<ImTrace>
where
    C: TextClassifier + ?Sized,
    M: MaskedLm + ?Sized,
{
    config.validate()?;
    sequence.validate()?;
    let base_prob = classifier.prob(sequence, target_label)?;
    let base_log_odds = log_odds(base_prob, config.epsilon);

    let mut scores = Vec::with_capacity(sequence.len());
    let mut positions = Vec::with_capacity(sequence.len());
    let mut no_candidates = Vec::new();
    for i in 0..sequence.len() {
        let original = sequence.token(i)?;
        let candidates = mlm.fill_mask(sequence, i, config.top_k, config.min_likelihood)?;
        let mass: f64 = candidates.iter().map(|c| c.likelihood).sum();
        if candidates.is_empty() || (config.renormalize && mass <= 0.0) {
            no_candidates.push(i);
            scores.push(0.0);
            positions.push(ImPosition {
                candidates,
                weights: Vec::new(),
                counterfactual_probs: Vec::new(),
                expected: None,
                original_weight: 0.0,
            });
            continue;
        }
        let weights: Vec<f64> =
            candidates.iter().map(|c| if config.renormalize { c.likelihood / mass } else { c.likelihood }).collect();
        let mut counterfactual_probs = Vec::with_capacity(candidates.len());
        for c in &candidates {
            let p = if c.token == original {
                base_prob
            } else {
                classifier.prob(&sequence.replaced(i, &c.token)?, target_label)?
            };
            counterfactual_probs.push(p);
        }
        let expected: f64 = weights.iter().zip(&counterfactual_probs).map(|(w, p)| w * p).sum();
        let original_weight =
            candidates.iter().zip(&weights).filter(|(c, _)| c.token == original).map(|(_, w)| *w).sum();
        scores.push(base_log_odds - log_odds(expected, config.epsilon));
        positions.push(ImPosition {
            candidates,
            weights,
            counterfactual_probs,
            expected: Some(expected),
            original_weight,
        });
    }
    let mut map = AttributionMap::new(scores, "im", target_label, ScoreSpace::LogOdds);
    map.no_candidates = no_candidates;
    Ok(ImTrace { map, base_prob, positions })
}
