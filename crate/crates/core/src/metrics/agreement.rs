use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::types::{AttributionMap, BinaryMap, LabeledExample};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgreementScores {
    pub iou: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tau: f64,
}

/// Zeroes negative scores, divides by the largest positive score and keeps
/// tokens at or above `tau`.
pub fn binarize(scores: &[f64], tau: f64) -> BinaryMap {
    let max = scores.iter().fold(0.0f64, |m, &s| m.max(s));
    let bits = scores
        .iter()
        .map(|&s| {
            let v = if max > 0.0 { s.max(0.0) / max } else { 0.0 };
            u8::from(max > 0.0 && v >= tau)
        })
        .collect();
    BinaryMap { bits, threshold: tau }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidConfig(alloc::format!("tau {tau} not in (0, 1)")))
    }
}

/// IoU, precision, recall and F1 of the binarized map against a human
/// highlight. Empty prediction and empty highlight give IoU 1 and zeros elsewhere.
pub fn agreement_scores(map: &AttributionMap, highlight: &[u8], tau: f64) -> Result<AgreementScores> {
    check_tau(tau)?;
    if map.len() != highlight.len() {
        return Err(Error::LengthMismatch { expected: highlight.len(), found: map.len() });
    }
    let pred = binarize(&map.scores, tau);
    let (mut inter, mut union, mut n_pred, mut n_gold) = (0usize, 0usize, 0usize, 0usize);
    for (&p, &g) in pred.bits.iter().zip(highlight) {
        let (p, g) = (p == 1, g == 1);
        inter += usize::from(p && g);
        union += usize::from(p || g);
        n_pred += usize::from(p);
        n_gold += usize::from(g);
    }
    let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let iou = if union == 0 { 1.0 } else { ratio(inter, union) };
    let precision = ratio(inter, n_pred);
    let recall = ratio(inter, n_gold);
    let f1 = if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 };
    Ok(AgreementScores { iou, precision, recall, f1, tau })
}

/// The 19-point grid `0.05, 0.10, …, 0.95`.
pub fn default_tau_grid() -> Vec<f64> {
    (1..20).map(|x| x as f64 / 20.0).collect()
}

/// Example-averaged agreement at each threshold and the threshold with the
/// best mean F1 (ties go to the smaller threshold).
///
/// The averaged `f1` is the mean of per-example F1 values, so it is not in
/// general the harmonic mean of the averaged precision and recall.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub best_tau: f64,
    pub best: AgreementScores,
    pub per_tau: Vec<AgreementScores>,
}

pub fn agreement_sweep(maps: &[AttributionMap], examples: &[LabeledExample], taus: &[f64]) -> Result<SweepResult> {
    if maps.len() != examples.len() {
        return Err(Error::Misaligned(alloc::format!("{} maps for {} examples", maps.len(), examples.len())));
    }
    if examples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    if taus.is_empty() {
        return Err(Error::InvalidConfig("empty tau grid".into()));
    }
    let highlights: Vec<&[u8]> =
        examples.iter().map(|e| e.highlight.as_deref().ok_or(Error::NoHighlights)).collect::<Result<_>>()?;
    let count = examples.len() as f64;
    let mut per_tau = Vec::with_capacity(taus.len());
    for &tau in taus {
        let mut sum = AgreementScores { iou: 0.0, precision: 0.0, recall: 0.0, f1: 0.0, tau };
        for (map, highlight) in maps.iter().zip(&highlights) {
            let s = agreement_scores(map, highlight, tau)?;
            sum.iou += s.iou;
            sum.precision += s.precision;
            sum.recall += s.recall;
            sum.f1 += s.f1;
        }
        per_tau.push(AgreementScores {
            iou: sum.iou / count,
            precision: sum.precision / count,
            recall: sum.recall / count,
            f1: sum.f1 / count,
            tau,
        });
    }
    let mut best = per_tau[0];
    for s in &per_tau[1..] {
        if s.f1 > best.f1 || (s.f1 == best.f1 && s.tau < best.tau) {
            best = *s;
        }
    }
    Ok(SweepResult { best_tau: best.tau, best, per_tau })
}
