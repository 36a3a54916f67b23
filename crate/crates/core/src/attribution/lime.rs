use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::numstats::{weighted_ridge, SplitMix64};
use crate::types::{AttributionMap, MaskedLm, ScoreSpace, TextClassifier, TokenSequence};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LimeConfig {
    pub num_samples: usize,
    pub kernel_width: f64,
    pub ridge_lambda: f64,
    pub seed: u64,
    /// Replace masked tokens with the MLM's top-1 instead of deleting them.
    pub infill: bool,
    pub mask_token: String,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig {
            num_samples: 1000,
            kernel_width: 25.0,
            ridge_lambda: 1.0,
            seed: 0,
            infill: false,
            mask_token: "[MASK]".into(),
        }
    }
}

impl LimeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_samples < 2 {
            return Err(Error::InvalidConfig("num_samples must be at least 2".into()));
        }
        if !(self.kernel_width > 0.0) {
            return Err(Error::InvalidConfig("kernel_width must be positive".into()));
        }
        if !(self.ridge_lambda >= 0.0) {
            return Err(Error::InvalidConfig("ridge_lambda must be non-negative".into()));
        }
        Ok(())
    }

    pub fn method_name(&self) -> &'static str {
        if self.infill {
            "lime-mlm"
        } else {
            "lime"
        }
    }
}

/// Draws `count` keep-masks over `n` tokens: the number of masked tokens is
/// uniform in `1..=max_masked`, then the masked subset is uniform.
pub fn sample_masks(n: usize, max_masked: usize, count: usize, rng: &mut SplitMix64) -> Vec<Vec<bool>> {
    (0..count)
        .map(|_| {
            let r = rng.range_inclusive(1, max_masked);
            let mut keep = alloc::vec![true; n];
            for i in rng.subset(n, r) {
                keep[i] = false;
            }
            keep
        })
        .collect()
}

fn kernel_weight(keep: &[bool], kernel_width: f64) -> f64 {
    let n = keep.len() as f64;
    let kept = keep.iter().filter(|&&k| k).count() as f64;
    // Cosine distance between the binary keep vector and the all-ones vector.
    let distance = if kept == 0.0 { 1.0 } else { 1.0 - libm::sqrt(kept / n) };
    libm::exp(-(distance * distance) / (kernel_width * kernel_width))
}

/// LIME: a weighted ridge surrogate of the target-label probability over
/// which tokens survive masking. Coefficients are the scores.
///
/// Vanilla LIME deletes masked tokens and masks at most `n − 1` of them so the
/// classifier never sees an empty input. With `infill`, every masked position
/// takes the MLM's top-1 candidate for the original context.
pub fn lime_attribution<C: TextClassifier + ?Sized>(
    classifier: &C,
    mlm: Option<&dyn MaskedLm>,
    sequence: &TokenSequence,
    target_label: &str,
    config: &LimeConfig,
) -> Result<AttributionMap> {
    config.validate()?;
    sequence.validate()?;
    let n = sequence.len();
    let infill_tokens: Option<Vec<String>> = if config.infill {
        let mlm = mlm.ok_or_else(|| Error::InvalidConfig("LIME infill needs a masked LM".into()))?;
        let mut tokens = Vec::with_capacity(n);
        for i in 0..n {
            let replacement = mlm.top1(sequence, i)?.map(|c| c.token);
            tokens.push(replacement.unwrap_or_else(|| sequence.tokens()[i].clone()));
        }
        Some(tokens)
    } else {
        if n < 2 {
            return Err(Error::InputTooShort { len: n, min: 2 });
        }
        None
    };
    let max_masked = if config.infill { n } else { n - 1 };

    let mut rng = SplitMix64::new(config.seed);
    let mut masks = sample_masks(n, max_masked, config.num_samples, &mut rng);
    if masks.windows(2).all(|w| w[0] == w[1]) {
        masks = sample_masks(n, max_masked, config.num_samples, &mut rng);
        if masks.windows(2).all(|w| w[0] == w[1]) {
            return Err(Error::DegenerateDesign);
        }
    }

    let mut cache: BTreeMap<Vec<bool>, f64> = BTreeMap::new();
    let mut targets = Vec::with_capacity(masks.len());
    for keep in &masks {
        let p = match cache.get(keep) {
            Some(&p) => p,
            None => {
                let counterfactual = match &infill_tokens {
                    None => sequence.retain_positions(keep)?,
                    Some(fill) => {
                        let tokens = sequence
                            .tokens()
                            .iter()
                            .zip(fill)
                            .zip(keep)
                            .map(|((orig, rep), &k)| if k { orig.clone() } else { rep.clone() })
                            .collect();
                        TokenSequence::with_segments(tokens, sequence.segment_ids().map(<[u8]>::to_vec))?
                    }
                };
                let p = classifier.prob(&counterfactual, target_label)?;
                cache.insert(keep.clone(), p);
                p
            }
        };
        targets.push(p);
    }

    let design: Vec<Vec<f64>> =
        masks.iter().map(|keep| keep.iter().map(|&k| if k { 1.0 } else { 0.0 }).collect()).collect();
    let weights: Vec<f64> = masks.iter().map(|k| kernel_weight(k, config.kernel_width)).collect();
    let fit = weighted_ridge(&design, &targets, &weights, config.ridge_lambda)?;
    Ok(AttributionMap::new(fit.coefficients, config.method_name(), target_label, ScoreSpace::SurrogateWeight))
}
