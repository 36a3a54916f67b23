//! Domain types shared by every attribution method and metric, plus the two
//! model interfaces they are written against.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Tolerance on `Σ probs = 1` for classifier outputs and on the total mass of
/// a candidate list.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Segment ids are 0 (premise / passage), 1 (hypothesis / question), 2 (answer).
pub const MAX_SEGMENT_ID: u8 = 2;

/// A pre-tokenized classifier input.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TokenSequence {
    tokens: Vec<String>,
    segment_ids: Option<Vec<u8>>,
}

impl TokenSequence {
    pub fn new<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::with_segments(tokens.into_iter().map(Into::into).collect(), None)
    }

    pub fn with_segments(tokens: Vec<String>, segment_ids: Option<Vec<u8>>) -> Result<Self> {
        let seq = TokenSequence { tokens, segment_ids };
        seq.validate()?;
        Ok(seq)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tokens.is_empty() {
            return Err(Error::EmptyInput);
        }
        if let Some(pos) = self.tokens.iter().position(String::is_empty) {
            return Err(Error::InvalidSequence(format!("empty token at position {pos}")));
        }
        if let Some(ids) = &self.segment_ids {
            if ids.len() != self.tokens.len() {
                return Err(Error::LengthMismatch { expected: self.tokens.len(), found: ids.len() });
            }
            if let Some(bad) = ids.iter().find(|&&id| id > MAX_SEGMENT_ID) {
                return Err(Error::InvalidSequence(format!("segment id {bad} not in 0..=2")));
            }
        }
        Ok(())
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn segment_ids(&self) -> Option<&[u8]> {
        self.segment_ids.as_deref()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    /// Always false for a validated sequence.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn token(&self, position: usize) -> Result<&str> {
        self.tokens.get(position).map(String::as_str).ok_or(Error::PositionOutOfRange { position, len: self.len() })
    }

    pub fn check_position(&self, position: usize) -> Result<()> {
        if position < self.len() {
            Ok(())
        } else {
            Err(Error::PositionOutOfRange { position, len: self.len() })
        }
    }

    /// The sequence with position `i` (and its segment id) removed.
    pub fn without(&self, position: usize) -> Result<Self> {
        self.check_position(position)?;
        if self.len() == 1 {
            return Err(Error::InputTooShort { len: 1, min: 2 });
        }
        let mut out = self.clone();
        out.tokens.remove(position);
        if let Some(ids) = &mut out.segment_ids {
            ids.remove(position);
        }
        Ok(out)
    }

    /// The sequence keeping only positions where `keep[i]` is true.
    pub fn retain_positions(&self, keep: &[bool]) -> Result<Self> {
        if keep.len() != self.len() {
            return Err(Error::LengthMismatch { expected: self.len(), found: keep.len() });
        }
        let tokens: Vec<String> = self.tokens.iter().zip(keep).filter(|(_, &k)| k).map(|(t, _)| t.clone()).collect();
        let segment_ids =
            self.segment_ids.as_ref().map(|ids| ids.iter().zip(keep).filter(|(_, &k)| k).map(|(&s, _)| s).collect());
        Self::with_segments(tokens, segment_ids)
    }

    /// The sequence with the token at `position` substituted; segment ids are kept.
    pub fn replaced(&self, position: usize, token: &str) -> Result<Self> {
        self.check_position(position)?;
        if token.is_empty() {
            return Err(Error::InvalidSequence("replacement token is empty".to_string()));
        }
        let mut out = self.clone();
        out.tokens[position] = token.to_string();
        Ok(out)
    }
}

/// `(start, end, score)` over token positions, half-open.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhraseAnnotation {
    pub start: usize,
    pub end: usize,
    pub score: f64,
}

/// Sentence-level highlights with the token span of every sentence.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceHighlights {
    pub bounds: Vec<(usize, usize)>,
    pub bits: Vec<u8>,
}

/// A corpus example with its optional human annotations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub id: String,
    pub sequence: TokenSequence,
    pub gold_label: String,
    pub highlight: Option<Vec<u8>>,
    pub annotator_counts: Option<Vec<u32>>,
    pub phrase_annotations: Option<Vec<PhraseAnnotation>>,
    pub sentence_highlights: Option<SentenceHighlights>,
}

impl LabeledExample {
    pub fn new(id: impl Into<String>, sequence: TokenSequence, gold_label: impl Into<String>) -> Self {
        LabeledExample {
            id: id.into(),
            sequence,
            gold_label: gold_label.into(),
            highlight: None,
            annotator_counts: None,
            phrase_annotations: None,
            sentence_highlights: None,
        }
    }

    pub fn with_highlight(mut self, highlight: Vec<u8>) -> Self {
        self.highlight = Some(highlight);
        self
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        self.sequence.validate()?;
        let n = self.sequence.len();
        if self.id.is_empty() {
            return Err(Error::InvalidExample("empty id".to_string()));
        }
        if let Some(h) = &self.highlight {
            if h.len() != n {
                return Err(Error::InvalidExample(format!("highlight has {} entries for {n} tokens", h.len())));
            }
            if h.iter().any(|&b| b > 1) {
                return Err(Error::InvalidExample("highlight is not binary".to_string()));
            }
        }
        if let Some(c) = &self.annotator_counts {
            if c.len() != n {
                return Err(Error::InvalidExample(format!("annotator_counts has {} entries for {n} tokens", c.len())));
            }
        }
        if let Some(spans) = &self.phrase_annotations {
            for s in spans {
                if s.start >= s.end || s.end > n {
                    return Err(Error::SpanOutOfRange { start: s.start, end: s.end, len: n });
                }
                if !(0.0..=1.0).contains(&s.score) {
                    return Err(Error::InvalidExample(format!("phrase score {} outside [0, 1]", s.score)));
                }
            }
        }
        if let Some(sh) = &self.sentence_highlights {
            if sh.bits.len() != sh.bounds.len() {
                return Err(Error::InvalidExample("sentence highlight bits and bounds differ in length".to_string()));
            }
        }
        Ok(())
    }
}

/// Label → probability, normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassifierOutput {
    probs: BTreeMap<String, f64>,
}

impl ClassifierOutput {
    pub fn new(probs: BTreeMap<String, f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::InvalidOutput(format!("{} labels, need at least 2", probs.len())));
        }
        let mut total = 0.0;
        for (label, &p) in &probs {
            if !p.is_finite() || !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidOutput(format!("probability {p} for {label:?}")));
            }
            total += p;
        }
        if (total - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(Error::InvalidOutput(format!("probabilities sum to {total}")));
        }
        Ok(ClassifierOutput { probs })
    }

    pub fn from_pairs<'a, I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (&'a str, f64)>,
    {
        Self::new(pairs.into_iter().map(|(l, p)| (l.to_string(), p)).collect())
    }

    pub fn probs(&self) -> &BTreeMap<String, f64> {
        &self.probs
    }

    pub fn prob(&self, label: &str) -> Result<f64> {
        self.probs.get(label).copied().ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Highest-probability label; ties go to the lexicographically first label.
    pub fn argmax(&self) -> &str {
        let mut best: Option<(&String, f64)> = None;
        for (label, &p) in &self.probs {
            if best.is_none_or(|(_, bp)| p > bp) {
                best = Some((label, p));
            }
        }
        best.map(|(l, _)| l.as_str()).unwrap_or("")
    }
}

/// One MLM proposal for a masked position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskCandidate {
    pub token: String,
    pub likelihood: f64,
}

impl MaskCandidate {
    pub fn new(token: impl Into<String>, likelihood: f64) -> Self {
        MaskCandidate { token: token.into(), likelihood }
    }
}

/// Descending likelihood, ties broken by ascending token.
pub fn candidate_order(a: &MaskCandidate, b: &MaskCandidate) -> Ordering {
    b.likelihood.partial_cmp(&a.likelihood).unwrap_or(Ordering::Equal).then_with(|| a.token.cmp(&b.token))
}

/// Sort a full distribution, drop entries below `min_likelihood`, keep `top_k`.
pub fn select_candidates(mut candidates: Vec<MaskCandidate>, top_k: usize, min_likelihood: f64) -> Vec<MaskCandidate> {
    candidates.retain(|c| c.likelihood >= min_likelihood);
    candidates.sort_by(candidate_order);
    candidates.truncate(top_k);
    candidates
}

/// Checks a candidate list against the interface contract: likelihoods in
/// range, sorted descending, total mass at most one.
pub fn validate_candidates(candidates: &[MaskCandidate]) -> Result<()> {
    let mut total = 0.0;
    for (i, c) in candidates.iter().enumerate() {
        if c.token.is_empty() {
            return Err(Error::Protocol(format!("candidate {i} has an empty token")));
        }
        if !c.likelihood.is_finite() || !(0.0..=1.0).contains(&c.likelihood) {
            return Err(Error::Protocol(format!(
                "candidate {:?} has likelihood {} outside [0, 1]",
                c.token, c.likelihood
            )));
        }
        if i > 0 && candidates[i - 1].likelihood < c.likelihood {
            return Err(Error::Protocol(format!("candidates not sorted at index {i}")));
        }
        total += c.likelihood;
    }
    if total > 1.0 + NORMALIZATION_TOLERANCE {
        return Err(Error::Protocol(format!("candidate likelihoods sum to {total}")));
    }
    Ok(())
}

/// Which space an attribution's scores live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScoreSpace {
    #[serde(rename = "log-odds")]
    LogOdds,
    #[serde(rename = "probability")]
    Probability,
    #[serde(rename = "surrogate-weight")]
    SurrogateWeight,
}

impl ScoreSpace {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreSpace::LogOdds => "log-odds",
            ScoreSpace::Probability => "probability",
            ScoreSpace::SurrogateWeight => "surrogate-weight",
        }
    }
}

/// Per-token scores for one target label, produced by one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionMap {
    pub scores: Vec<f64>,
    pub method: String,
    pub target_label: String,
    pub space: ScoreSpace,
    /// Positions where input marginalization found no candidate and scored 0.
    #[serde(default)]
    pub no_candidates: Vec<usize>,
}

impl AttributionMap {
    pub fn new(
        scores: Vec<f64>,
        method: impl Into<String>,
        target_label: impl Into<String>,
        space: ScoreSpace,
    ) -> Self {
        AttributionMap {
            scores,
            method: method.into(),
            target_label: target_label.into(),
            space,
            no_candidates: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn validate(&self, n_tokens: usize) -> Result<()> {
        if self.scores.len() != n_tokens {
            return Err(Error::LengthMismatch { expected: n_tokens, found: self.scores.len() });
        }
        if self.scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig("attribution map has non-finite scores".to_string()));
        }
        Ok(())
    }

    /// Positions by descending score; ties keep the earlier position first.
    pub fn ranking(&self) -> Vec<usize> {
        rank_descending(&self.scores)
    }
}

/// Stable descending argsort: equal scores keep their original order.
pub fn rank_descending(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    order
}

/// A thresholded attribution map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMap {
    pub bits: Vec<u8>,
    pub threshold: f64,
}

impl BinaryMap {
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }
}

/// How a token is intervened on when building a counterfactual.
#[derive(Debug, Clone, PartialEq)]
pub enum PerturbationMode {
    DeleteToken,
    ReplaceWithFixed(String),
    MarginalizeMlm { top_k: usize, min_likelihood: f64 },
    InfillTop1Mlm,
}

impl PerturbationMode {
    pub fn validate(&self) -> Result<()> {
        match self {
            PerturbationMode::ReplaceWithFixed(t) if t.is_empty() => {
                Err(Error::InvalidConfig("replacement token is empty".to_string()))
            }
            PerturbationMode::MarginalizeMlm { top_k, min_likelihood } => {
                if *top_k == 0 {
                    return Err(Error::InvalidConfig("top_k must be at least 1".to_string()));
                }
                if !(0.0..1.0).contains(min_likelihood) {
                    return Err(Error::InvalidConfig(format!("min_likelihood {min_likelihood} not in [0, 1)")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// A text classifier `f` mapping a token sequence to label probabilities.
///
/// Implementations must be deterministic for a fixed state and safe to call
/// from several workers at once.
pub trait TextClassifier: Send + Sync {
    fn classify(&self, sequence: &TokenSequence) -> Result<ClassifierOutput>;

    /// Probability of `label` for `sequence`.
    fn prob(&self, sequence: &TokenSequence, label: &str) -> Result<f64> {
        self.classify(sequence)?.prob(label)
    }
}

/// A masked language model proposing replacements for one position.
///
/// `fill_mask` returns at most `top_k` candidates with likelihood at least
/// `min_likelihood`, sorted by descending likelihood (ties by token).
pub trait MaskedLm: Send + Sync {
    fn fill_mask(
        &self,
        sequence: &TokenSequence,
        position: usize,
        top_k: usize,
        min_likelihood: f64,
    ) -> Result<Vec<MaskCandidate>>;

    /// The single most likely replacement, if any.
    fn top1(&self, sequence: &TokenSequence, position: usize) -> Result<Option<MaskCandidate>> {
        Ok(self.fill_mask(sequence, position, 1, 0.0)?.into_iter().next())
    }
}

impl<T: TextClassifier + ?Sized> TextClassifier for &T {
    fn classify(&self, sequence: &TokenSequence) -> Result<ClassifierOutput> {
        (**self).classify(sequence)
    }
}

impl<T: TextClassifier + ?Sized> TextClassifier for alloc::boxed::Box<T> {
    fn classify(&self, sequence: &TokenSequence) -> Result<ClassifierOutput> {
        (**self).classify(sequence)
    }
}

impl<T: MaskedLm + ?Sized> MaskedLm for &T {
    fn fill_mask(
        &self,
        sequence: &TokenSequence,
        position: usize,
        top_k: usize,
        min_likelihood: f64,
    ) -> Result<Vec<MaskCandidate>> {
        (**self).fill_mask(sequence, position, top_k, min_likelihood)
    }
}

impl<T: MaskedLm + ?Sized> MaskedLm for alloc::boxed::Box<T> {
    fn fill_mask(
        &self,
        sequence: &TokenSequence,
        position: usize,
        top_k: usize,
        min_likelihood: f64,
    ) -> Result<Vec<MaskCandidate>> {
        (**self).fill_mask(sequence, position, top_k, min_likelihood)
    }
}

/// Common argument checks for `fill_mask` implementations.
pub fn check_fill_mask_args(sequence: &TokenSequence, position: usize, top_k: usize) -> Result<()> {
    sequence.check_position(position)?;
    if top_k == 0 {
        return Err(Error::InvalidConfig("top_k must be at least 1".to_string()));
    }
    Ok(())
}
