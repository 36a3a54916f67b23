//! Remove-and-retrain: perturb train and dev corpora using attribution maps,
//! retrain the bag-of-words classifier per seed and measure dev accuracy.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::metrics::ceil_fraction;
use crate::models::{train_bow, TrainConfig};
use crate::numstats::{mean, sample_std, welch_t_test};
use crate::types::{AttributionMap, LabeledExample, MaskedLm};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoarMode {
    Remove,
    MlmReplace,
}

impl RoarMode {
    pub fn as_str(self) -> &'static str {
        match self {
            RoarMode::Remove => "remove",
            RoarMode::MlmReplace => "mlm-replace",
        }
    }
}

pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoarConfig {
    pub n_percent: f64,
    pub mode: RoarMode,
    pub seeds: Vec<u64>,
    pub train_config: TrainConfig,
}

impl RoarConfig {
    pub fn new(n_percent: f64, mode: RoarMode) -> Self {
        RoarConfig { n_percent, mode, seeds: DEFAULT_SEEDS.to_vec(), train_config: TrainConfig::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n_percent > 0.0 && self.n_percent < 1.0) {
            return Err(Error::InvalidConfig(format!("n_percent {} not in (0, 1)", self.n_percent)));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("roar needs at least one seed".into()));
        }
        self.train_config.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoarResult {
    pub per_seed_acc: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (`n - 1` denominator).
    pub std: f64,
    pub n_percent: f64,
    pub mode: RoarMode,
}

impl RoarResult {
    pub fn from_accuracies(per_seed_acc: Vec<f64>, n_percent: f64, mode: RoarMode) -> Self {
        RoarResult { mean: mean(&per_seed_acc), std: sample_std(&per_seed_acc), per_seed_acc, n_percent, mode }
    }
}

/// Positions a ROAR perturbation touches: the `ceil(n_percent * n)` highest
/// scores, ties broken by position. Removal never empties a sequence, so in
/// `Remove` mode at most `n - 1` positions are taken.
pub fn roar_positions(map: &AttributionMap, n_percent: f64, mode: RoarMode) -> Vec<usize> {
    let n = map.len();
    let mut k = ceil_fraction(n_percent, n).min(n);
    if mode == RoarMode::Remove {
        k = k.min(n.saturating_sub(1));
    }
    let mut top = map.ranking();
    top.truncate(k);
    top.sort_unstable();
    top
}

fn kept<T: Copy>(xs: &[T], keep: &[bool]) -> Vec<T> {
    xs.iter().zip(keep).filter(|(_, &k)| k).map(|(&x, _)| x).collect()
}

fn perturb(
    example: &LabeledExample,
    map: &AttributionMap,
    config: &RoarConfig,
    mlm: Option<&dyn MaskedLm>,
) -> Result<LabeledExample> {
    let n = example.len();
    if map.len() != n {
        return Err(Error::Misaligned(format!(
            "map for {:?} has {} scores, example has {n} tokens",
            example.id,
            map.len()
        )));
    }
    let positions = roar_positions(map, config.n_percent, config.mode);
    let mut out = example.clone();
    match config.mode {
        RoarMode::Remove => {
            let mut keep = vec![true; n];
            for &p in &positions {
                keep[p] = false;
            }
            out.sequence = example.sequence.retain_positions(&keep)?;
            out.highlight = example.highlight.as_deref().map(|h| kept(h, &keep));
            out.annotator_counts = example.annotator_counts.as_deref().map(|c| kept(c, &keep));
            // Spans and sentence bounds refer to the old positions.
            out.phrase_annotations = None;
            out.sentence_highlights = None;
        }
        RoarMode::MlmReplace => {
            let mlm = mlm.ok_or_else(|| Error::InvalidConfig("mlm-replace mode needs a masked LM".into()))?;
            let mut seq = example.sequence.clone();
            for &p in &positions {
                // Infill always sees the original context, not earlier replacements.
                if let Some(c) = mlm.top1(&example.sequence, p)? {
                    seq = seq.replaced(p, &c.token)?;
                }
            }
            out.sequence = seq;
        }
    }
    Ok(out)
}

/// The perturbed copy of `examples`; labels and ids are preserved.
pub fn build_roar_corpus(
    examples: &[LabeledExample],
    maps: &[AttributionMap],
    config: &RoarConfig,
    mlm: Option<&dyn MaskedLm>,
) -> Result<Vec<LabeledExample>> {
    config.validate()?;
    if examples.len() != maps.len() {
        return Err(Error::Misaligned(format!("{} maps for {} examples", maps.len(), examples.len())));
    }
    examples.iter().zip(maps).map(|(ex, map)| perturb(ex, map, config, mlm)).collect()
}

/// Dev accuracy of one classifier trained on `train` with the given seed.
pub fn roar_seed_accuracy(
    train: &[LabeledExample],
    dev: &[LabeledExample],
    config: &TrainConfig,
    seed: u64,
) -> Result<f64> {
    let model = train_bow(train, &TrainConfig { seed, ..*config })?;
    model.accuracy(dev)
}

/// Perturbs both splits with their own maps, then retrains once per seed.
pub fn roar_run(
    train: &[LabeledExample],
    dev: &[LabeledExample],
    maps_train: &[AttributionMap],
    maps_dev: &[AttributionMap],
    config: &RoarConfig,
    mlm: Option<&dyn MaskedLm>,
) -> Result<RoarResult> {
    let train_p = build_roar_corpus(train, maps_train, config, mlm)?;
    let dev_p = build_roar_corpus(dev, maps_dev, config, mlm)?;
    let accs = config
        .seeds
        .iter()
        .map(|&seed| roar_seed_accuracy(&train_p, &dev_p, &config.train_config, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(RoarResult::from_accuracies(accs, config.n_percent, config.mode))
}

/// Two-tailed Welch p-value between the per-seed accuracies.
pub fn roar_compare(a: &RoarResult, b: &RoarResult) -> Result<f64> {
    for r in [a, b] {
        if r.per_seed_acc.len() < 2 {
            return Err(Error::TooFewValues { min: 2, found: r.per_seed_acc.len() });
        }
    }
    Ok(welch_t_test(&a.per_seed_acc, &b.per_seed_acc)?.p)
}
