//! Deterministic model doubles with closed-form behaviour, plus a synthetic
//! keyword corpus generator.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::numstats::SplitMix64;
use crate::types::{
    check_fill_mask_args, select_candidates, ClassifierOutput, LabeledExample, MaskCandidate, MaskedLm, TextClassifier,
    TokenSequence,
};
use crate::{Error, Result};

/// Returns the same output for every input.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantClassifier {
    output: ClassifierOutput,
}

impl ConstantClassifier {
    pub fn new(output: ClassifierOutput) -> Self {
        ConstantClassifier { output }
    }

    /// Two labels, `label` at `p` and `other` at `1 - p`.
    pub fn binary(label: &str, other: &str, p: f64) -> Result<Self> {
        Ok(Self::new(ClassifierOutput::from_pairs([(label, p), (other, 1.0 - p)])?))
    }
}

impl TextClassifier for ConstantClassifier {
    fn classify(&self, sequence: &TokenSequence) -> Result<ClassifierOutput> {
        if sequence.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(self.output.clone())
    }
}

pub const KEYWORD_WEIGHT: f64 = 4.0;

/// `p(label) = σ(4 · count(keyword))`. With no keyword present the label gets
/// `0.5 − 1e-9` so the argmax is the other label rather than an exact tie.
#[derive(Debug, Clone, PartialEq)]
pub struct KeywordClassifier {
    pub keyword: String,
    pub label: String,
    pub other: String,
}

impl KeywordClassifier {
    pub fn new(keyword: &str, label: &str, other: &str) -> Self {
        KeywordClassifier { keyword: keyword.into(), label: label.into(), other: other.into() }
    }

    pub fn label_probability(&self, tokens: &[String]) -> f64 {
        let count = tokens.iter().filter(|t| **t == self.keyword).count();
        if count == 0 {
            0.5 - 1e-9
        } else {
            sigmoid(KEYWORD_WEIGHT * count as f64)
        }
    }
}

pub fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-z))
}

impl TextClassifier for KeywordClassifier {
    fn classify(&self, sequence: &TokenSequence) -> Result<ClassifierOutput> {
        if sequence.is_empty() {
            return Err(Error::EmptyInput);
        }
        let p = self.label_probability(sequence.tokens());
        ClassifierOutput::from_pairs([(self.label.as_str(), p), (self.other.as_str(), 1.0 - p)])
    }
}

/// Two-label classifier whose `label` probability is `base + Σ weight[t]` over
/// the distinct known tokens present, clamped to `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PresenceClassifier {
    pub label: String,
    pub other: String,
    pub base: f64,
    pub weights: BTreeMap<String, f64>,
}

impl TextClassifier for PresenceClassifier {
    fn classify(&self, sequence: &TokenSequence) -> Result<ClassifierOutput> {
        if sequence.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut present: Vec<&String> = sequence.tokens().iter().collect();
        present.sort();
        present.dedup();
        let p = (self.base + present.iter().filter_map(|t| self.weights.get(*t)).sum::<f64>()).clamp(0.0, 1.0);
        ClassifierOutput::from_pairs([(self.label.as_str(), p), (self.other.as_str(), 1.0 - p)])
    }
}

/// Looks up the `label` probability of an exact token sequence; unseen
/// sequences get `default`.
#[derive(Debug, Clone, PartialEq)]
pub struct LookupClassifier {
    pub label: String,
    pub other: String,
    pub table: BTreeMap<Vec<String>, f64>,
    pub default: f64,
}

impl LookupClassifier {
    pub fn new(label: &str, other: &str, default: f64) -> Self {
        LookupClassifier { label: label.into(), other: other.into(), table: BTreeMap::new(), default }
    }

    pub fn with(mut self, tokens: &[&str], p: f64) -> Self {
        self.table.insert(tokens.iter().map(|t| t.to_string()).collect(), p);
        self
    }
}

impl TextClassifier for LookupClassifier {
    fn classify(&self, sequence: &TokenSequence) -> Result<ClassifierOutput> {
        if sequence.is_empty() {
            return Err(Error::EmptyInput);
        }
        let p = self.table.get(sequence.tokens()).copied().unwrap_or(self.default);
        ClassifierOutput::from_pairs([(self.label.as_str(), p), (self.other.as_str(), 1.0 - p)])
    }
}

/// Always proposes the original token with likelihood 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DeltaMlm;

impl MaskedLm for DeltaMlm {
    fn fill_mask(
        &self,
        sequence: &TokenSequence,
        position: usize,
        top_k: usize,
        min_likelihood: f64,
    ) -> Result<Vec<MaskCandidate>> {
        check_fill_mask_args(sequence, position, top_k)?;
        let c = MaskCandidate::new(sequence.token(position)?, 1.0);
        Ok(select_candidates(alloc::vec![c], top_k, min_likelihood))
    }
}

/// Uniform over a fixed vocabulary, regardless of context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UniformMlm {
    vocab: Vec<String>,
}

impl UniformMlm {
    pub fn new<I, S>(vocab: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab: Vec<String> = vocab.into_iter().map(Into::into).collect();
        vocab.sort();
        vocab.dedup();
        if vocab.is_empty() || vocab.iter().any(String::is_empty) {
            return Err(Error::InvalidConfig("uniform MLM needs non-empty tokens".into()));
        }
        Ok(UniformMlm { vocab })
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }
}

impl MaskedLm for UniformMlm {
    fn fill_mask(
        &self,
        sequence: &TokenSequence,
        position: usize,
        top_k: usize,
        min_likelihood: f64,
    ) -> Result<Vec<MaskCandidate>> {
        check_fill_mask_args(sequence, position, top_k)?;
        let p = 1.0 / self.vocab.len() as f64;
        let all = self.vocab.iter().map(|t| MaskCandidate::new(t.clone(), p)).collect();
        Ok(select_candidates(all, top_k, min_likelihood))
    }
}

/// Always proposes one fixed token with likelihood 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedMlm {
    pub token: String,
}

impl FixedMlm {
    pub fn new(token: &str) -> Self {
        FixedMlm { token: token.into() }
    }
}

impl MaskedLm for FixedMlm {
    fn fill_mask(
        &self,
        sequence: &TokenSequence,
        position: usize,
        top_k: usize,
        min_likelihood: f64,
    ) -> Result<Vec<MaskCandidate>> {
        check_fill_mask_args(sequence, position, top_k)?;
        Ok(select_candidates(alloc::vec![MaskCandidate::new(self.token.clone(), 1.0)], top_k, min_likelihood))
    }
}

/// An explicit per-position candidate table keyed by the full sequence;
/// positions without an entry get no candidates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TableMlm {
    table: BTreeMap<(Vec<String>, usize), Vec<MaskCandidate>>,
}

impl TableMlm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, tokens: &[&str], position: usize, candidates: &[(&str, f64)]) -> Self {
        let key = (tokens.iter().map(|t| t.to_string()).collect(), position);
        let list = candidates.iter().map(|(t, p)| MaskCandidate::new(*t, *p)).collect();
        self.table.insert(key, list);
        self
    }
}

impl MaskedLm for TableMlm {
    fn fill_mask(
        &self,
        sequence: &TokenSequence,
        position: usize,
        top_k: usize,
        min_likelihood: f64,
    ) -> Result<Vec<MaskCandidate>> {
        check_fill_mask_args(sequence, position, top_k)?;
        let key = (sequence.tokens().to_vec(), position);
        let list = self.table.get(&key).cloned().unwrap_or_default();
        Ok(select_candidates(list, top_k, min_likelihood))
    }
}

/// Which double to build.
#[derive(Debug, Clone, PartialEq)]
pub enum DoubleKind {
    Delta,
    Uniform(Vec<String>),
    Constant(ClassifierOutput),
    Keyword { token: String, label: String, other: String },
}

/// A constructed double, either a classifier or a masked LM.
pub enum ModelDouble {
    Classifier(Box<dyn TextClassifier>),
    Mlm(Box<dyn MaskedLm>),
}

impl ModelDouble {
    pub fn into_classifier(self) -> Option<Box<dyn TextClassifier>> {
        match self {
            ModelDouble::Classifier(c) => Some(c),
            ModelDouble::Mlm(_) => None,
        }
    }

    pub fn into_mlm(self) -> Option<Box<dyn MaskedLm>> {
        match self {
            ModelDouble::Mlm(m) => Some(m),
            ModelDouble::Classifier(_) => None,
        }
    }
}

pub fn make_double(kind: DoubleKind) -> Result<ModelDouble> {
    Ok(match kind {
        DoubleKind::Delta => ModelDouble::Mlm(Box::new(DeltaMlm)),
        DoubleKind::Uniform(vocab) => ModelDouble::Mlm(Box::new(UniformMlm::new(vocab)?)),
        DoubleKind::Constant(out) => ModelDouble::Classifier(Box::new(ConstantClassifier::new(out))),
        DoubleKind::Keyword { token, label, other } => {
            ModelDouble::Classifier(Box::new(KeywordClassifier::new(&token, &label, &other)))
        }
    })
}

/// Filler words for synthetic corpora; none of them carries label signal.
pub const FILLER: [&str; 20] = [
    "the", "a", "movie", "film", "plot", "actor", "scene", "story", "was", "is", "very", "quite", "and", "with",
    "this", "that", "of", "in", "some", "really",
];

/// `n` examples of `length` tokens. Positive examples carry one "good",
/// negative ones one "bad", at a random position; every other token is filler.
/// `positive_fraction` of the examples (rounded) are labelled "pos".
pub fn keyword_corpus(n: usize, length: usize, positive_fraction: f64, seed: u64) -> Vec<LabeledExample> {
    assert!(length >= 1);
    let mut rng = SplitMix64::new(seed);
    let n_pos = libm::round(n as f64 * positive_fraction) as usize;
    let mut labels: Vec<bool> = (0..n).map(|i| i < n_pos).collect();
    rng.shuffle(&mut labels);
    labels
        .into_iter()
        .enumerate()
        .map(|(i, positive)| {
            let mut tokens: Vec<String> =
                (0..length).map(|_| FILLER[rng.below(FILLER.len() as u64) as usize].to_string()).collect();
            let slot = rng.below(length as u64) as usize;
            tokens[slot] = if positive { "good" } else { "bad" }.to_string();
            let seq = TokenSequence::new(tokens).expect("filler tokens are non-empty");
            LabeledExample::new(format!("ex-{i}"), seq, if positive { "pos" } else { "neg" })
        })
        .collect()
}
