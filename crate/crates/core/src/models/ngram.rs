//! A bigram masked LM: the masked token is predicted from its left and right
//! neighbours with additive smoothing.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::types::{check_fill_mask_args, select_candidates, MaskCandidate, MaskedLm, TokenSequence};
use crate::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_LAMBDA: f64 = 0.5;

/// `p(t) = λ·p(t | left) + (1 − λ)·p(t | right)`, each side a bigram estimate
/// smoothed with `α`. Edge positions use the side they have; a one-token
/// sequence falls back to smoothed unigram frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramMlm {
    vocab: Vec<String>,
    index: BTreeMap<String, usize>,
    unigram: Vec<u64>,
    /// `forward[prev][next]`: times `next` directly followed `prev`.
    forward: Vec<BTreeMap<usize, u64>>,
    /// `backward[next][prev]`: the same counts indexed by the right token.
    backward: Vec<BTreeMap<usize, u64>>,
    forward_totals: Vec<u64>,
    backward_totals: Vec<u64>,
    alpha: f64,
    lambda: f64,
}

impl NgramMlm {
    pub fn train(texts: &[TokenSequence], alpha: f64, lambda: f64) -> Result<Self> {
        if texts.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let vocab: Vec<String> =
            texts.iter().flat_map(|s| s.tokens().iter().cloned()).collect::<BTreeSet<_>>().into_iter().collect();
        let index: BTreeMap<String, usize> = vocab.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        let mut unigram = BTreeMap::new();
        let mut bigrams = BTreeMap::new();
        for s in texts {
            let ids: Vec<usize> = s.tokens().iter().map(|t| index[t]).collect();
            for &i in &ids {
                *unigram.entry(i).or_insert(0u64) += 1;
            }
            for w in ids.windows(2) {
                *bigrams.entry((w[0], w[1])).or_insert(0u64) += 1;
            }
        }
        let unigram = (0..vocab.len()).map(|i| unigram.get(&i).copied().unwrap_or(0)).collect();
        Self::from_counts(vocab, unigram, bigrams, alpha, lambda)
    }

    /// Rebuilds a model from its count tables (indices into `vocab`).
    pub fn from_counts(
        vocab: Vec<String>,
        unigram: Vec<u64>,
        bigrams: BTreeMap<(usize, usize), u64>,
        alpha: f64,
        lambda: f64,
    ) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidConfig("alpha must be positive".into()));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::InvalidConfig("lambda must lie in [0, 1]".into()));
        }
        if vocab.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if unigram.len() != vocab.len() {
            return Err(Error::LengthMismatch { expected: vocab.len(), found: unigram.len() });
        }
        let index: BTreeMap<String, usize> = vocab.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        if index.len() != vocab.len() || vocab.iter().any(String::is_empty) {
            return Err(Error::InvalidConfig("vocabulary must be distinct non-empty tokens".into()));
        }
        let v = vocab.len();
        let mut forward = vec![BTreeMap::new(); v];
        let mut backward = vec![BTreeMap::new(); v];
        let mut forward_totals = vec![0u64; v];
        let mut backward_totals = vec![0u64; v];
        for (&(a, b), &c) in &bigrams {
            if a >= v || b >= v {
                return Err(Error::InvalidConfig("bigram index outside vocabulary".into()));
            }
            forward[a].insert(b, c);
            backward[b].insert(a, c);
            forward_totals[a] += c;
            backward_totals[b] += c;
        }
        Ok(NgramMlm { vocab, index, unigram, forward, backward, forward_totals, backward_totals, alpha, lambda })
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn unigram_counts(&self) -> &[u64] {
        &self.unigram
    }

    /// All bigram counts keyed by `(prev, next)` vocabulary indices.
    pub fn bigram_counts(&self) -> BTreeMap<(usize, usize), u64> {
        self.forward.iter().enumerate().flat_map(|(a, row)| row.iter().map(move |(&b, &c)| ((a, b), c))).collect()
    }

    fn smoothed(&self, count: u64, total: u64) -> f64 {
        (count as f64 + self.alpha) / (total as f64 + self.alpha * self.vocab.len() as f64)
    }

    fn given_left(&self, left: &str) -> Vec<f64> {
        match self.index.get(left) {
            Some(&l) => (0..self.vocab.len())
                .map(|t| self.smoothed(self.forward[l].get(&t).copied().unwrap_or(0), self.forward_totals[l]))
                .collect(),
            None => vec![self.smoothed(0, 0); self.vocab.len()],
        }
    }

    fn given_right(&self, right: &str) -> Vec<f64> {
        match self.index.get(right) {
            Some(&r) => (0..self.vocab.len())
                .map(|t| self.smoothed(self.backward[r].get(&t).copied().unwrap_or(0), self.backward_totals[r]))
                .collect(),
            None => vec![self.smoothed(0, 0); self.vocab.len()],
        }
    }

    /// The full distribution over the vocabulary at `position`, in vocabulary order.
    pub fn distribution(&self, sequence: &TokenSequence, position: usize) -> Result<Vec<f64>> {
        sequence.check_position(position)?;
        let tokens = sequence.tokens();
        let left = position.checked_sub(1).map(|i| tokens[i].as_str());
        let right = tokens.get(position + 1).map(String::as_str);
        Ok(match (left, right) {
            (Some(l), Some(r)) => self
                .given_left(l)
                .into_iter()
                .zip(self.given_right(r))
                .map(|(pl, pr)| self.lambda * pl + (1.0 - self.lambda) * pr)
                .collect(),
            (Some(l), None) => self.given_left(l),
            (None, Some(r)) => self.given_right(r),
            (None, None) => {
                let total: u64 = self.unigram.iter().sum();
                self.unigram.iter().map(|&c| self.smoothed(c, total)).collect()
            }
        })
    }
}

impl MaskedLm for NgramMlm {
    fn fill_mask(
        &self,
        sequence: &TokenSequence,
        position: usize,
        top_k: usize,
        min_likelihood: f64,
    ) -> Result<Vec<MaskCandidate>> {
        check_fill_mask_args(sequence, position, top_k)?;
        let dist = self.distribution(sequence, position)?;
        let all = self.vocab.iter().zip(dist).map(|(t, p)| MaskCandidate::new(t.clone(), p)).collect();
        Ok(select_candidates(all, top_k, min_likelihood))
    }
}
