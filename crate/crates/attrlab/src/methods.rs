//! Attribution method selection shared by the `attribute` and `sanity`
//! commands.

use attrlab_core::attribution::{im_attribution, lime_attribution, loo_attribution, ImConfig, LimeConfig, LooConfig};
use attrlab_core::numstats::derive_seed;
use attrlab_core::{AttributionMap, Error, LabeledExample, MaskedLm, Result, TextClassifier};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    LooEmpty,
    LooUnk,
    LooZero,
    Im,
    Lime,
    LimeMlm,
}

impl Method {
    pub fn needs_mlm(self) -> bool {
        matches!(self, Method::Im | Method::LimeMlm)
    }
}

/// `predicted` (the classifier's argmax), `gold`, or a literal label.
pub fn resolve_target(target: &str, classifier: &dyn TextClassifier, example: &LabeledExample) -> Result<String> {
    match target {
        "predicted" => Ok(classifier.classify(&example.sequence)?.argmax().to_string()),
        "gold" => Ok(example.gold_label.clone()),
        label => Ok(label.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodParams {
    pub top_k: usize,
    pub min_likelihood: f64,
    pub renormalize: bool,
    pub samples: usize,
    pub kernel_width: f64,
    pub ridge_lambda: f64,
    pub seed: u64,
}

impl Default for MethodParams {
    fn default() -> Self {
        let im = ImConfig::default();
        let lime = LimeConfig::default();
        MethodParams {
            top_k: im.top_k,
            min_likelihood: im.min_likelihood,
            renormalize: im.renormalize,
            samples: lime.num_samples,
            kernel_width: lime.kernel_width,
            ridge_lambda: lime.ridge_lambda,
            seed: lime.seed,
        }
    }
}

impl MethodParams {
    /// Checks the settings `method` actually uses.
    pub fn validate(&self, method: Method) -> Result<()> {
        match method {
            Method::Im => ImConfig {
                top_k: self.top_k,
                min_likelihood: self.min_likelihood,
                renormalize: self.renormalize,
                ..ImConfig::default()
            }
            .validate(),
            Method::Lime | Method::LimeMlm => LimeConfig {
                num_samples: self.samples,
                kernel_width: self.kernel_width,
                ridge_lambda: self.ridge_lambda,
                ..LimeConfig::default()
            }
            .validate(),
            _ => Ok(()),
        }
    }
}

/// Runs one method on one example. LIME draws from a per-example stream
/// seeded by the example id, so results do not depend on worker scheduling.
pub fn attribute_example(
    method: Method,
    params: &MethodParams,
    classifier: &dyn TextClassifier,
    mlm: Option<&dyn MaskedLm>,
    example: &LabeledExample,
    target: &str,
) -> Result<AttributionMap> {
    let seq = &example.sequence;
    let need_mlm = || mlm.ok_or_else(|| Error::InvalidConfig("this method needs --mlm".into()));
    match method {
        Method::LooEmpty => loo_attribution(classifier, seq, target, &LooConfig::empty()),
        Method::LooUnk => loo_attribution(classifier, seq, target, &LooConfig::unk()),
        Method::LooZero => loo_attribution(classifier, seq, target, &LooConfig::zero()),
        Method::Im => {
            let config = ImConfig {
                top_k: params.top_k,
                min_likelihood: params.min_likelihood,
                renormalize: params.renormalize,
                ..ImConfig::default()
            };
            im_attribution(classifier, need_mlm()?, seq, target, &config)
        }
        Method::Lime | Method::LimeMlm => {
            let config = LimeConfig {
                num_samples: params.samples,
                kernel_width: params.kernel_width,
                ridge_lambda: params.ridge_lambda,
                seed: derive_seed(params.seed, &example.id),
                infill: method == Method::LimeMlm,
                ..LimeConfig::default()
            };
            let mlm = if config.infill { Some(need_mlm()?) } else { mlm };
            lime_attribution(classifier, mlm, seq, target, &config)
        }
    }
}
