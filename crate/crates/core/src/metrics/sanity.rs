use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::models::BowClassifier;
use crate::types::{AttributionMap, LabeledExample};
use crate::{Error, Result};

/// How much attributions move when the classifier head is re-randomized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SanityResult {
    pub sign_change_pct: f64,
    pub mean_abs_diff: f64,
    pub trials: usize,
}

const ZERO_SIGN_TOLERANCE: f64 = 1e-12;

/// Exactly-zero scores have no sign. A move between zero and a non-zero value
/// counts only when the non-zero side exceeds `1e-12` in magnitude.
pub fn sign_changed(before: f64, after: f64) -> bool {
    let sign = |x: f64| {
        if x > 0.0 {
            1
        } else if x < 0.0 {
            -1
        } else {
            0
        }
    };
    match (sign(before), sign(after)) {
        (a, b) if a == b => false,
        (0, _) => after.abs() > ZERO_SIGN_TOLERANCE,
        (_, 0) => before.abs() > ZERO_SIGN_TOLERANCE,
        _ => true,
    }
}

/// Compares `attribute` on `classifier` with `attribute` on `trials` copies of
/// the classifier whose head was randomized with seeds `seed, seed + 1, …`.
pub fn sanity_check<F>(
    attribute: F,
    classifier: &BowClassifier,
    examples: &[LabeledExample],
    trials: usize,
    seed: u64,
) -> Result<SanityResult>
where
    F: Fn(&BowClassifier, &LabeledExample) -> Result<AttributionMap>,
{
    if trials == 0 {
        return Err(Error::InvalidConfig("trials must be at least 1".into()));
    }
    let originals: Vec<AttributionMap> = examples.iter().map(|e| attribute(classifier, e)).collect::<Result<_>>()?;
    let (mut changed, mut total, mut abs_sum) = (0usize, 0usize, 0.0f64);
    for t in 0..trials {
        let randomized = classifier.randomize_head(seed.wrapping_add(t as u64));
        for (example, before) in examples.iter().zip(&originals) {
            let after = attribute(&randomized, example)?;
            if after.len() != before.len() {
                return Err(Error::LengthMismatch { expected: before.len(), found: after.len() });
            }
            for (&b, &a) in before.scores.iter().zip(&after.scores) {
                changed += usize::from(sign_changed(b, a));
                abs_sum += (a - b).abs();
                total += 1;
            }
        }
    }
    let (sign_change_pct, mean_abs_diff) =
        if total == 0 { (0.0, 0.0) } else { (100.0 * changed as f64 / total as f64, abs_sum / total as f64) };
    Ok(SanityResult { sign_change_pct, mean_abs_diff, trials })
}
