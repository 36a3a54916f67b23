use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::ceil_fraction;
use crate::numstats::trapezoid_auc;
use crate::types::{AttributionMap, MaskedLm, TextClassifier, TokenSequence};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeletionMode {
    /// Remove tokens; the sequence shrinks.
    Delete,
    /// Overwrite tokens with the MLM's top-1 for the current sequence.
    MlmReplace,
}

/// Target-class confidence as top-attributed tokens are perturbed one by one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeletionCurve {
    /// Fraction of the original tokens perturbed at each step, from 0.
    pub fractions: Vec<f64>,
    pub confidences: Vec<f64>,
    /// Trapezoidal area with the step axis rescaled to `[0, 1]`.
    pub auc: f64,
}

fn require_mlm(mode: DeletionMode, mlm: Option<&dyn MaskedLm>) -> Result<Option<&dyn MaskedLm>> {
    match (mode, mlm) {
        (DeletionMode::MlmReplace, None) => Err(Error::InvalidConfig("MLM replacement needs a masked LM".into())),
        (_, m) => Ok(m),
    }
}

fn infill_top1(mlm: &dyn MaskedLm, sequence: &TokenSequence, position: usize) -> Result<TokenSequence> {
    match mlm.top1(sequence, position)? {
        Some(c) => sequence.replaced(position, &c.token),
        None => Ok(sequence.clone()),
    }
}

/// Perturbs `ceil(max_fraction · n)` tokens in descending attribution order
/// (ties by position) and records the target confidence after each step.
///
/// Delete mode stops one token short of emptying the sequence.
pub fn deletion_curve<C: TextClassifier + ?Sized>(
    classifier: &C,
    sequence: &TokenSequence,
    target_label: &str,
    map: &AttributionMap,
    max_fraction: f64,
    mode: DeletionMode,
    mlm: Option<&dyn MaskedLm>,
) -> Result<DeletionCurve> {
    sequence.validate()?;
    let n = sequence.len();
    map.validate(n)?;
    if !(max_fraction > 0.0 && max_fraction <= 1.0) {
        return Err(Error::InvalidConfig("max_fraction must lie in (0, 1]".into()));
    }
    let mlm = require_mlm(mode, mlm)?;
    let mut steps = ceil_fraction(max_fraction, n);
    if mode == DeletionMode::Delete {
        if n < 2 {
            return Err(Error::InputTooShort { len: n, min: 2 });
        }
        steps = steps.min(n - 1);
    }
    let order = map.ranking();

    let mut confidences = Vec::with_capacity(steps + 1);
    confidences.push(classifier.prob(sequence, target_label)?);
    let mut keep = alloc::vec![true; n];
    let mut current = sequence.clone();
    for &pos in &order[..steps] {
        current = match mode {
            DeletionMode::Delete => {
                keep[pos] = false;
                sequence.retain_positions(&keep)?
            }
            DeletionMode::MlmReplace => infill_top1(mlm.expect("checked"), &current, pos)?,
        };
        confidences.push(classifier.prob(&current, target_label)?);
    }
    let fractions: Vec<f64> = (0..=steps).map(|t| t as f64 / n as f64).collect();
    let axis: Vec<f64> = (0..=steps).map(|t| t as f64 / steps as f64).collect();
    let auc = trapezoid_auc(&axis, &confidences)?;
    Ok(DeletionCurve { fractions, confidences, auc })
}

/// One-step confidence drop `f(x) − f(perturbed at i)` for every position.
pub fn first_step_drops<C: TextClassifier + ?Sized>(
    classifier: &C,
    sequence: &TokenSequence,
    target_label: &str,
    mode: DeletionMode,
    mlm: Option<&dyn MaskedLm>,
) -> Result<Vec<f64>> {
    sequence.validate()?;
    if sequence.len() < 2 {
        return Err(Error::InputTooShort { len: sequence.len(), min: 2 });
    }
    let mlm = require_mlm(mode, mlm)?;
    let base = classifier.prob(sequence, target_label)?;
    (0..sequence.len())
        .map(|i| {
            let perturbed = match mode {
                DeletionMode::Delete => sequence.without(i)?,
                DeletionMode::MlmReplace => infill_top1(mlm.expect("checked"), sequence, i)?,
            };
            Ok(base - classifier.prob(&perturbed, target_label)?)
        })
        .collect()
}

/// The position whose single perturbation lowers the target confidence the
/// most; the earliest position wins ties.
pub fn first_step_optimality_check<C: TextClassifier + ?Sized>(
    classifier: &C,
    sequence: &TokenSequence,
    target_label: &str,
    mode: DeletionMode,
    mlm: Option<&dyn MaskedLm>,
) -> Result<usize> {
    let drops = first_step_drops(classifier, sequence, target_label, mode, mlm)?;
    Ok(crate::types::rank_descending(&drops)[0])
}
