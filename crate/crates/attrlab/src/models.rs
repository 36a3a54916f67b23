//! Resolving `--classifier` / `--mlm` specs into loaded models.
//!
//! `builtin:<path>` loads a model file, `remote:<url>` talks to a model
//! server, and `delta` (MLM only) is the point-mass double.

use std::path::PathBuf;

use attrlab_core::models::{BowClassifier, DeltaMlm, NgramMlm};
use attrlab_core::{MaskedLm, TextClassifier};

use crate::error::{AppError, Result};
use crate::fsutil::file_sha256;
use crate::modelio::{load_bow, load_ngram};
use crate::remote::{RemoteClient, RemoteEndpoint};

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Builtin(PathBuf),
    Remote(String),
    Delta,
}

impl ModelSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        if let Some(p) = spec.strip_prefix("builtin:") {
            if p.is_empty() {
                return Err(AppError::config("builtin: needs a model path"));
            }
            return Ok(ModelSpec::Builtin(PathBuf::from(p)));
        }
        if let Some(u) = spec.strip_prefix("remote:") {
            if u.is_empty() {
                return Err(AppError::config("remote: needs a base url"));
            }
            return Ok(ModelSpec::Remote(u.to_string()));
        }
        if spec == "delta" {
            return Ok(ModelSpec::Delta);
        }
        Err(AppError::config(format!("model spec {spec:?} must be builtin:<path>, remote:<url> or delta")))
    }

    /// Identifier recorded in run manifests; builtin models carry their hash.
    pub fn identity(&self) -> Result<String> {
        Ok(match self {
            ModelSpec::Builtin(p) => format!("builtin:{}#sha256={}", p.display(), file_sha256(p)?),
            ModelSpec::Remote(u) => format!("remote:{u}"),
            ModelSpec::Delta => "delta".into(),
        })
    }
}

pub enum LoadedClassifier {
    Bow(BowClassifier),
    Remote(RemoteClient),
}

impl LoadedClassifier {
    pub fn load(spec: &str) -> Result<Self> {
        match ModelSpec::parse(spec)? {
            ModelSpec::Builtin(p) => Ok(LoadedClassifier::Bow(load_bow(&p)?)),
            ModelSpec::Remote(u) => Ok(LoadedClassifier::Remote(RemoteClient::new(RemoteEndpoint::new(u))?)),
            ModelSpec::Delta => Err(AppError::config("delta is an MLM double, not a classifier")),
        }
    }

    pub fn as_dyn(&self) -> &dyn TextClassifier {
        match self {
            LoadedClassifier::Bow(m) => m,
            LoadedClassifier::Remote(c) => c,
        }
    }

    pub fn as_bow(&self) -> Option<&BowClassifier> {
        match self {
            LoadedClassifier::Bow(m) => Some(m),
            LoadedClassifier::Remote(_) => None,
        }
    }
}

pub enum LoadedMlm {
    Ngram(NgramMlm),
    Remote(RemoteClient),
    Delta(DeltaMlm),
}

impl LoadedMlm {
    pub fn load(spec: &str) -> Result<Self> {
        match ModelSpec::parse(spec)? {
            ModelSpec::Builtin(p) => Ok(LoadedMlm::Ngram(load_ngram(&p)?)),
            ModelSpec::Remote(u) => Ok(LoadedMlm::Remote(RemoteClient::new(RemoteEndpoint::new(u))?)),
            ModelSpec::Delta => Ok(LoadedMlm::Delta(DeltaMlm)),
        }
    }

    pub fn load_opt(spec: Option<&str>) -> Result<Option<Self>> {
        spec.map(Self::load).transpose()
    }

    pub fn as_dyn(&self) -> &dyn MaskedLm {
        match self {
            LoadedMlm::Ngram(m) => m,
            LoadedMlm::Remote(c) => c,
            LoadedMlm::Delta(d) => d,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_parsing() {
        assert_eq!(ModelSpec::parse("builtin:m.json").unwrap(), ModelSpec::Builtin("m.json".into()));
        assert_eq!(ModelSpec::parse("remote:http://h:1").unwrap(), ModelSpec::Remote("http://h:1".into()));
        assert_eq!(ModelSpec::parse("delta").unwrap(), ModelSpec::Delta);
        for bad in ["", "builtin:", "remote:", "m.json", "http://x"] {
            assert!(ModelSpec::parse(bad).is_err(), "{bad}");
        }
    }
}
