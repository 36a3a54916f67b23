//! Model files: one JSON document per model, tagged with `kind` and `version`.
//! Floats are written in shortest round-trip form, so load(save(m)) == m.

use std::collections::BTreeMap;
use std::path::Path;

use attrlab_core::models::{BowClassifier, NgramMlm};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{AppError, Result};
use crate::fsutil::{read_to_string, to_json_pretty, write_atomic};

pub const MODEL_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BowFile {
    kind: String,
    version: u32,
    vocab: BTreeMap<String, usize>,
    labels: Vec<String>,
    weights: Vec<Vec<f64>>,
    temperature: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NgramFile {
    kind: String,
    version: u32,
    vocab: Vec<String>,
    unigram: Vec<u64>,
    /// `[left, right, count]` triples.
    bigrams: Vec<(usize, usize, u64)>,
    alpha: f64,
    lambda: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelFile {
    Bow(BowClassifier),
    Ngram(NgramMlm),
}

pub fn bow_to_json(model: &BowClassifier) -> Result<Vec<u8>> {
    to_json_pretty(&BowFile {
        kind: "bow".into(),
        version: MODEL_VERSION,
        vocab: model.vocab().clone(),
        labels: model.labels().to_vec(),
        weights: model.weights().to_vec(),
        temperature: model.temperature(),
    })
}

pub fn ngram_to_json(model: &NgramMlm) -> Result<Vec<u8>> {
    to_json_pretty(&NgramFile {
        kind: "ngram".into(),
        version: MODEL_VERSION,
        vocab: model.vocab().to_vec(),
        unigram: model.unigram_counts().to_vec(),
        bigrams: model.bigram_counts().into_iter().map(|((a, b), c)| (a, b, c)).collect(),
        alpha: model.alpha(),
        lambda: model.lambda(),
    })
}

pub fn parse_model(text: &str, path: &Path) -> Result<ModelFile> {
    let bad = |message: String| AppError::Parse { path: path.to_path_buf(), line: 1, message };
    let value: Value = serde_json::from_str(text).map_err(|e| bad(e.to_string()))?;
    let version = value.get("version").and_then(Value::as_u64);
    if version != Some(MODEL_VERSION as u64) {
        return Err(bad(format!("unsupported model version {version:?}")));
    }
    match value.get("kind").and_then(Value::as_str) {
        Some("bow") => {
            let f: BowFile = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
            let m = BowClassifier::new(f.vocab, f.labels, f.weights, f.temperature)?;
            Ok(ModelFile::Bow(m))
        }
        Some("ngram") => {
            let f: NgramFile = serde_json::from_value(value).map_err(|e| bad(e.to_string()))?;
            let bigrams = f.bigrams.into_iter().map(|(a, b, c)| ((a, b), c)).collect();
            Ok(ModelFile::Ngram(NgramMlm::from_counts(f.vocab, f.unigram, bigrams, f.alpha, f.lambda)?))
        }
        other => Err(bad(format!("unknown model kind {other:?}"))),
    }
}

pub fn load_model(path: &Path) -> Result<ModelFile> {
    parse_model(&read_to_string(path)?, path)
}

pub fn save_bow(model: &BowClassifier, path: &Path) -> Result<()> {
    write_atomic(path, &bow_to_json(model)?)
}

pub fn save_ngram(model: &NgramMlm, path: &Path) -> Result<()> {
    write_atomic(path, &ngram_to_json(model)?)
}

pub fn load_bow(path: &Path) -> Result<BowClassifier> {
    match load_model(path)? {
        ModelFile::Bow(m) => Ok(m),
        ModelFile::Ngram(_) => Err(AppError::config(format!("{} is an ngram MLM, not a classifier", path.display()))),
    }
}

pub fn load_ngram(path: &Path) -> Result<NgramMlm> {
    match load_model(path)? {
        ModelFile::Ngram(m) => Ok(m),
        ModelFile::Bow(_) => Err(AppError::config(format!("{} is a bow classifier, not an MLM", path.display()))),
    }
}
