use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::attribution::sample_masks;
use crate::numstats::{derive_seed, SplitMix64};
use crate::types::{LabeledExample, MaskedLm, TextClassifier, TokenSequence};
use crate::{Error, Result};

/// How the evaluation inputs are perturbed.
#[derive(Clone, Copy)]
pub enum AccuracyPerturbation<'a> {
    /// Every single-token deletion of every example.
    OneTokenDelete,
    /// Every single-token replacement by the MLM's top-1.
    OneTokenMlmReplace(&'a dyn MaskedLm),
    /// `samples` LIME-style masks per example (masked tokens deleted).
    LimeMask { samples: usize, seed: u64 },
}

/// Accuracies in percent; `delta = base_acc − perturbed_acc` in points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyDrop {
    pub base_acc: f64,
    pub perturbed_acc: f64,
    pub delta: f64,
    pub variants: usize,
}

fn is_correct<C: TextClassifier + ?Sized>(classifier: &C, seq: &TokenSequence, gold: &str) -> Result<bool> {
    Ok(classifier.classify(seq)?.argmax() == gold)
}

/// Accuracy before and after perturbing the inputs. Deletion-based variants
/// skip one-token examples, which have nothing left to classify.
pub fn accuracy_drop<C: TextClassifier + ?Sized>(
    classifier: &C,
    examples: &[LabeledExample],
    perturbation: AccuracyPerturbation<'_>,
) -> Result<AccuracyDrop> {
    if examples.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut base_correct = 0usize;
    let (mut correct, mut variants) = (0usize, 0usize);
    for ex in examples {
        let seq = &ex.sequence;
        base_correct += usize::from(is_correct(classifier, seq, &ex.gold_label)?);
        let perturbed: Vec<TokenSequence> = match perturbation {
            AccuracyPerturbation::OneTokenDelete => {
                if seq.len() < 2 {
                    Vec::new()
                } else {
                    (0..seq.len()).map(|i| seq.without(i)).collect::<Result<_>>()?
                }
            }
            AccuracyPerturbation::OneTokenMlmReplace(mlm) => (0..seq.len())
                .map(|i| match mlm.top1(seq, i)? {
                    Some(c) => seq.replaced(i, &c.token),
                    None => Ok(seq.clone()),
                })
                .collect::<Result<_>>()?,
            AccuracyPerturbation::LimeMask { samples, seed } => {
                if seq.len() < 2 {
                    Vec::new()
                } else {
                    let mut rng = SplitMix64::new(derive_seed(seed, &ex.id));
                    sample_masks(seq.len(), seq.len() - 1, samples, &mut rng)
                        .iter()
                        .map(|keep| seq.retain_positions(keep))
                        .collect::<Result<_>>()?
                }
            }
        };
        for p in &perturbed {
            correct += usize::from(is_correct(classifier, p, &ex.gold_label)?);
        }
        variants += perturbed.len();
    }
    if variants == 0 {
        return Err(Error::InputTooShort { len: 1, min: 2 });
    }
    let base_acc = 100.0 * base_correct as f64 / examples.len() as f64;
    let perturbed_acc = 100.0 * correct as f64 / variants as f64;
    Ok(AccuracyDrop { base_acc, perturbed_acc, delta: base_acc - perturbed_acc, variants })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{keyword_corpus, ConstantClassifier, DeltaMlm, KeywordClassifier};

    #[test]
    fn constant_classifier_never_drops() {
        let corpus = keyword_corpus(30, 5, 0.5, 1);
        let c = ConstantClassifier::binary("pos", "neg", 0.7).unwrap();
        for p in [AccuracyPerturbation::OneTokenDelete, AccuracyPerturbation::LimeMask { samples: 20, seed: 3 }] {
            assert_eq!(accuracy_drop(&c, &corpus, p).unwrap().delta, 0.0);
        }
    }

    #[test]
    fn single_deletions_hurt_less_than_lime_masks() {
        let corpus = keyword_corpus(60, 8, 0.5, 2);
        let k = KeywordClassifier::new("good", "pos", "neg");
        let one = accuracy_drop(&k, &corpus, AccuracyPerturbation::OneTokenDelete).unwrap();
        let lime = accuracy_drop(&k, &corpus, AccuracyPerturbation::LimeMask { samples: 50, seed: 9 }).unwrap();
        assert_eq!(one.base_acc, 100.0);
        // Closed form: only the pos examples' keyword deletion flips, 1 of 8 variants.
        assert!((one.delta - 100.0 * 0.5 / 8.0).abs() < 1e-9);
        assert!(one.delta < lime.delta, "{} vs {}", one.delta, lime.delta);
        assert_eq!(one.variants, 60 * 8);
    }

    #[test]
    fn delta_mlm_replacement_is_identity() {
        let corpus = keyword_corpus(20, 6, 0.5, 4);
        let k = KeywordClassifier::new("good", "pos", "neg");
        let r = accuracy_drop(&k, &corpus, AccuracyPerturbation::OneTokenMlmReplace(&DeltaMlm)).unwrap();
        assert_eq!(r.delta, 0.0);
        assert!(accuracy_drop(&k, &[], AccuracyPerturbation::OneTokenDelete).is_err());
    }
}
