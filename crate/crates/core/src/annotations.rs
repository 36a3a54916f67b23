//! Turning the three human-annotation styles into token-level highlights.
//!
//! Each function is pure: it reads the raw annotation on an example and
//! returns a binary highlight of the example's length. `with_*` helpers
//! store the result on a copy of the example.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::types::LabeledExample;
use crate::{Error, Result};

pub const SST_LOW: f64 = 0.3;
pub const SST_HIGH: f64 = 0.7;
pub const SST_MAX_LEN_FRAC: f64 = 0.5;

/// Keeps confident phrases (score at most `low` or at least `high`) no longer
/// than `max_len_frac` of the sentence, and marks every token they cover.
/// A phrase of exactly `max_len_frac * n` tokens is kept.
pub fn preprocess_sst_phrases(example: &LabeledExample, low: f64, high: f64, max_len_frac: f64) -> Result<Vec<u8>> {
    if !(low <= high) || !(max_len_frac > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sst filter needs low <= high and a positive length fraction, got {low}, {high}, {max_len_frac}"
        )));
    }
    let n = example.sequence.len();
    let phrases = example.phrase_annotations.as_deref().ok_or(Error::NoHighlights)?;
    let mut bits = vec![0u8; n];
    for p in phrases {
        if p.start >= p.end || p.end > n {
            return Err(Error::SpanOutOfRange { start: p.start, end: p.end, len: n });
        }
        let confident = p.score <= low || p.score >= high;
        let short = (p.end - p.start) as f64 <= max_len_frac * n as f64;
        if confident && short {
            bits[p.start..p.end].fill(1);
        }
    }
    Ok(bits)
}

/// Marks tokens chosen by at least `min_count` annotators.
pub fn filter_by_annotators(example: &LabeledExample, min_count: u32) -> Result<Vec<u8>> {
    let counts = example.annotator_counts.as_deref().ok_or(Error::MissingCounts)?;
    if counts.len() != example.sequence.len() {
        return Err(Error::LengthMismatch { expected: example.sequence.len(), found: counts.len() });
    }
    Ok(counts.iter().map(|&c| u8::from(c >= min_count)).collect())
}

/// Spreads sentence-level bits over the tokens of each sentence. The
/// boundaries must tile `[0, n)` in order.
pub fn expand_sentence_highlights(example: &LabeledExample) -> Result<Vec<u8>> {
    let n = example.sequence.len();
    let sh = example.sentence_highlights.as_ref().ok_or(Error::NoHighlights)?;
    if sh.bits.len() != sh.bounds.len() {
        return Err(Error::BadBoundaries(format!("{} bits for {} sentences", sh.bits.len(), sh.bounds.len())));
    }
    let mut cursor = 0;
    let mut out = Vec::with_capacity(n);
    for (&(start, end), &bit) in sh.bounds.iter().zip(&sh.bits) {
        if start != cursor {
            let what = if start > cursor { "gap" } else { "overlap" };
            return Err(Error::BadBoundaries(format!("{what} at token {cursor}")));
        }
        if end <= start || end > n {
            return Err(Error::BadBoundaries(format!("sentence [{start}, {end}) in {n} tokens")));
        }
        out.extend(core::iter::repeat_n(u8::from(bit != 0), end - start));
        cursor = end;
    }
    if cursor != n {
        return Err(Error::BadBoundaries(format!("sentences end at {cursor}, sequence has {n} tokens")));
    }
    Ok(out)
}

pub fn with_sst_highlight(example: &LabeledExample) -> Result<LabeledExample> {
    let bits = preprocess_sst_phrases(example, SST_LOW, SST_HIGH, SST_MAX_LEN_FRAC)?;
    Ok(example.clone().with_highlight(bits))
}

pub fn with_annotator_highlight(example: &LabeledExample, min_count: u32) -> Result<LabeledExample> {
    let bits = filter_by_annotators(example, min_count)?;
    Ok(example.clone().with_highlight(bits))
}

pub fn with_sentence_highlight(example: &LabeledExample) -> Result<LabeledExample> {
    let bits = expand_sentence_highlights(example)?;
    Ok(example.clone().with_highlight(bits))
}
