//! Multinomial logistic regression over token counts.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::numstats::SplitMix64;
use crate::types::{ClassifierOutput, LabeledExample, TextClassifier, TokenSequence};
use crate::{Error, Result};

/// Bag-of-words classifier: `softmax(W · [counts; 1] / temperature)`.
///
/// Tokens outside the vocabulary contribute an all-zero feature vector, so a
/// placeholder such as `[PAD]` behaves like a zeroed embedding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BowClassifier {
    vocab: BTreeMap<String, usize>,
    labels: Vec<String>,
    /// `labels.len()` rows of `vocab.len() + 1` columns; the last is the bias.
    weights: Vec<Vec<f64>>,
    temperature: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig { epochs: 200, learning_rate: 0.5, l2: 1e-4, seed: 0 }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::InvalidConfig("l2 must be non-negative".into()));
        }
        Ok(())
    }
}

impl BowClassifier {
    pub fn new(
        vocab: BTreeMap<String, usize>,
        labels: Vec<String>,
        weights: Vec<Vec<f64>>,
        temperature: f64,
    ) -> Result<Self> {
        let model = BowClassifier { vocab, labels, weights, temperature };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.labels.len() < 2 {
            return Err(Error::InvalidConfig("classifier needs at least two labels".into()));
        }
        let distinct: BTreeSet<&String> = self.labels.iter().collect();
        if distinct.len() != self.labels.len() {
            return Err(Error::InvalidConfig("duplicate labels".into()));
        }
        if self.weights.len() != self.labels.len() {
            return Err(Error::InvalidConfig("weight rows must match label count".into()));
        }
        let cols = self.vocab.len() + 1;
        if self.weights.iter().any(|r| r.len() != cols || r.iter().any(|w| !w.is_finite())) {
            return Err(Error::InvalidConfig("weight rows must be finite with vocab+1 columns".into()));
        }
        let mut seen = vec![false; self.vocab.len()];
        for &idx in self.vocab.values() {
            if idx >= seen.len() || seen[idx] {
                return Err(Error::InvalidConfig("vocab indices must be a permutation".into()));
            }
            seen[idx] = true;
        }
        if !(self.temperature > 0.0) || !self.temperature.is_finite() {
            return Err(Error::InvalidConfig("temperature must be positive".into()));
        }
        Ok(())
    }

    pub fn vocab(&self) -> &BTreeMap<String, usize> {
        &self.vocab
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn with_temperature(mut self, temperature: f64) -> Result<Self> {
        self.temperature = temperature;
        self.validate()?;
        Ok(self)
    }

    /// Sparse `(feature, count)` pairs; the bias is implicit.
    fn sparse_features(&self, tokens: &[String]) -> BTreeMap<usize, f64> {
        let mut counts = BTreeMap::new();
        for t in tokens {
            if let Some(&i) = self.vocab.get(t) {
                *counts.entry(i).or_insert(0.0) += 1.0;
            }
        }
        counts
    }

    /// Dense feature vector `[counts; 1]`.
    pub fn features(&self, sequence: &TokenSequence) -> Vec<f64> {
        let mut x = vec![0.0; self.vocab.len() + 1];
        for (i, c) in self.sparse_features(sequence.tokens()) {
            x[i] = c;
        }
        x[self.vocab.len()] = 1.0;
        x
    }

    pub fn logits(&self, sequence: &TokenSequence) -> Vec<f64> {
        let feats = self.sparse_features(sequence.tokens());
        let bias = self.vocab.len();
        self.weights
            .iter()
            .map(|row| {
                let z = row[bias] + feats.iter().map(|(&i, &c)| row[i] * c).sum::<f64>();
                z / self.temperature
            })
            .collect()
    }

    /// Replaces every weight (bias included) with an i.i.d. draw from
    /// `U[-1, 1]`. Vocabulary, labels and temperature are kept.
    pub fn randomize_head(&self, seed: u64) -> BowClassifier {
        let mut rng = SplitMix64::new(seed);
        let weights = self.weights.iter().map(|row| row.iter().map(|_| rng.uniform(-1.0, 1.0)).collect()).collect();
        BowClassifier { weights, ..self.clone() }
    }

    /// Top-1 accuracy of `argmax` predictions against gold labels.
    pub fn accuracy(&self, examples: &[LabeledExample]) -> Result<f64> {
        if examples.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut correct = 0usize;
        for ex in examples {
            if self.classify(&ex.sequence)?.argmax() == ex.gold_label {
                correct += 1;
            }
        }
        Ok(correct as f64 / examples.len() as f64)
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| libm::exp(z - max)).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

impl TextClassifier for BowClassifier {
    fn classify(&self, sequence: &TokenSequence) -> Result<ClassifierOutput> {
        if sequence.is_empty() {
            return Err(Error::EmptyInput);
        }
        let probs = softmax(&self.logits(sequence));
        ClassifierOutput::new(self.labels.iter().cloned().zip(probs).collect())
    }
}

/// A corpus compiled to sparse count features for full-batch training.
#[derive(Debug, Clone)]
pub struct TrainingData {
    vocab: BTreeMap<String, usize>,
    labels: Vec<String>,
    rows: Vec<Vec<(usize, f64)>>,
    targets: Vec<usize>,
}

impl TrainingData {
    pub fn from_corpus(corpus: &[LabeledExample]) -> Result<Self> {
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let labels: Vec<String> =
            corpus.iter().map(|e| e.gold_label.clone()).collect::<BTreeSet<_>>().into_iter().collect();
        if labels.len() < 2 {
            return Err(Error::SingleLabelCorpus);
        }
        let vocab: BTreeMap<String, usize> = corpus
            .iter()
            .flat_map(|e| e.sequence.tokens().iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, t)| (t, i))
            .collect();
        let mut rows = Vec::with_capacity(corpus.len());
        let mut targets = Vec::with_capacity(corpus.len());
        for ex in corpus {
            let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
            for t in ex.sequence.tokens() {
                *counts.entry(vocab[t]).or_insert(0.0) += 1.0;
            }
            rows.push(counts.into_iter().collect());
            targets.push(labels.binary_search(&ex.gold_label).map_err(|_| Error::EmptyCorpus)?);
        }
        Ok(TrainingData { vocab, labels, rows, targets })
    }

    pub fn num_labels(&self) -> usize {
        self.labels.len()
    }

    pub fn num_features(&self) -> usize {
        self.vocab.len() + 1
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Mean cross-entropy plus `l2 / 2 · ‖W‖²` over non-bias weights, and its
    /// gradient with respect to every weight.
    pub fn loss_and_gradient(&self, weights: &[Vec<f64>], l2: f64) -> (f64, Vec<Vec<f64>>) {
        let k = self.num_labels();
        let d = self.num_features();
        let bias = d - 1;
        let m = self.rows.len() as f64;
        let mut grad = vec![vec![0.0; d]; k];
        let mut loss = 0.0;
        let mut logits = vec![0.0; k];
        for (row, &y) in self.rows.iter().zip(&self.targets) {
            for (c, w) in weights.iter().enumerate() {
                logits[c] = w[bias] + row.iter().map(|&(i, v)| w[i] * v).sum::<f64>();
            }
            let probs = softmax(&logits);
            loss -= libm::log(probs[y].max(1e-300));
            for c in 0..k {
                let r = probs[c] - if c == y { 1.0 } else { 0.0 };
                for &(i, v) in row {
                    grad[c][i] += r * v;
                }
                grad[c][bias] += r;
            }
        }
        loss /= m;
        for (c, g) in grad.iter_mut().enumerate() {
            for (j, gj) in g.iter_mut().enumerate() {
                *gj /= m;
                if j != bias {
                    *gj += l2 * weights[c][j];
                    loss += 0.5 * l2 * weights[c][j] * weights[c][j];
                }
            }
        }
        (loss, grad)
    }

    pub fn loss(&self, weights: &[Vec<f64>], l2: f64) -> f64 {
        self.loss_and_gradient(weights, l2).0
    }
}

/// Trains the classifier with full-batch gradient descent.
pub fn train_bow(corpus: &[LabeledExample], config: &TrainConfig) -> Result<BowClassifier> {
    Ok(train_bow_with_history(corpus, config)?.0)
}

/// Like [`train_bow`], also returning the training loss after every epoch.
///
/// A step that would raise the loss is retried at half the learning rate
/// (and the smaller rate is kept), so the loss sequence is non-increasing.
pub fn train_bow_with_history(corpus: &[LabeledExample], config: &TrainConfig) -> Result<(BowClassifier, Vec<f64>)> {
    config.validate()?;
    let data = TrainingData::from_corpus(corpus)?;
    let mut rng = SplitMix64::new(config.seed);
    let mut weights: Vec<Vec<f64>> =
        (0..data.num_labels()).map(|_| (0..data.num_features()).map(|_| rng.uniform(-0.01, 0.01)).collect()).collect();

    let mut lr = config.learning_rate;
    let (mut loss, mut grad) = data.loss_and_gradient(&weights, config.l2);
    let mut history = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let mut accepted = false;
        for _ in 0..40 {
            let candidate: Vec<Vec<f64>> = weights
                .iter()
                .zip(&grad)
                .map(|(w, g)| w.iter().zip(g).map(|(wi, gi)| wi - lr * gi).collect())
                .collect();
            let (new_loss, new_grad) = data.loss_and_gradient(&candidate, config.l2);
            if new_loss <= loss {
                weights = candidate;
                loss = new_loss;
                grad = new_grad;
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        history.push(loss);
        if !accepted {
            // At a stationary point to machine precision.
            break;
        }
    }
    let model = BowClassifier { vocab: data.vocab, labels: data.labels, weights, temperature: 1.0 };
    Ok((model, history))
}

impl BowClassifier {
    /// Builds the classifier that `train_bow` would start from, without
    /// training; used for random-model property tests.
    pub fn random(tokens: &[&str], labels: &[&str], seed: u64) -> Result<Self> {
        let vocab: BTreeMap<String, usize> = tokens
            .iter()
            .map(|t| t.to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, t)| (t, i))
            .collect();
        let labels: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
        let weights = vec![vec![0.0; vocab.len() + 1]; labels.len()];
        Ok(BowClassifier::new(vocab, labels, weights, 1.0)?.randomize_head(seed))
    }
}
