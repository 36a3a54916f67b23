//! Fully resolved command configurations. A run is a pure function of one of
//! these, which is what the manifest stores and `rerun` replays.

use std::path::{Path, PathBuf};

use attrlab_core::models::{TrainConfig, DEFAULT_ALPHA, DEFAULT_LAMBDA};
use clap::ValueEnum;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{AppError, Result};
use crate::fsutil::read_to_string;
use crate::methods::{Method, MethodParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n: usize,
    pub length: usize,
    pub positive_fraction: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig { n: 1000, length: 10, positive_fraction: 0.5, seed: 0, out: "corpus.jsonl".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainBowConfig {
    pub corpus: PathBuf,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for TrainBowConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainBowConfig {
            corpus: PathBuf::new(),
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            l2: t.l2,
            seed: t.seed,
            out: "classifier.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainMlmConfig {
    pub corpus: PathBuf,
    pub alpha: f64,
    pub lambda: f64,
    pub out: PathBuf,
}

impl Default for TrainMlmConfig {
    fn default() -> Self {
        TrainMlmConfig { corpus: PathBuf::new(), alpha: DEFAULT_ALPHA, lambda: DEFAULT_LAMBDA, out: "mlm.json".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttributeConfig {
    pub corpus: PathBuf,
    pub classifier: String,
    pub mlm: Option<String>,
    pub method: Method,
    pub target: String,
    #[serde(flatten)]
    pub params: MethodParams,
    pub out: PathBuf,
}

impl Default for AttributeConfig {
    fn default() -> Self {
        AttributeConfig {
            corpus: PathBuf::new(),
            classifier: String::new(),
            mlm: None,
            method: Method::LooEmpty,
            target: "predicted".into(),
            params: MethodParams::default(),
            out: "attributions.jsonl".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMetric {
    Deletion,
    DeletionMlm,
    Agreement,
    AccuracyDrop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    Delete,
    Mlm,
    Lime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub metric: EvalMetric,
    pub corpus: PathBuf,
    pub dump: Option<PathBuf>,
    pub classifier: Option<String>,
    pub mlm: Option<String>,
    pub max_fraction: f64,
    /// Agreement thresholds; the 19-point grid 0.05..0.95 when absent.
    pub taus: Option<Vec<f64>>,
    pub perturbation: PerturbationKind,
    pub samples: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub csv: Option<PathBuf>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            metric: EvalMetric::Deletion,
            corpus: PathBuf::new(),
            dump: None,
            classifier: None,
            mlm: None,
            max_fraction: 0.2,
            taus: None,
            perturbation: PerturbationKind::Delete,
            samples: 20,
            seed: 0,
            out: "eval.json".into(),
            csv: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum RoarModeArg {
    Remove,
    #[value(alias = "mlm-replace")]
    #[serde(alias = "mlm-replace")]
    Mlm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoarCmdConfig {
    pub train: PathBuf,
    pub dev: PathBuf,
    pub train_dump: PathBuf,
    pub dev_dump: PathBuf,
    /// Percentages of tokens perturbed, e.g. `[10, 20, 30]`.
    pub n: Vec<f64>,
    pub mode: Vec<RoarModeArg>,
    /// Number of seeds; seeds are `0..seeds`.
    pub seeds: u64,
    pub mlm: Option<String>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    /// Also run seeded random maps and report p-values against them.
    pub random_baseline: bool,
    pub random_seed: u64,
    pub out: PathBuf,
    pub csv: Option<PathBuf>,
}

impl Default for RoarCmdConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        RoarCmdConfig {
            train: PathBuf::new(),
            dev: PathBuf::new(),
            train_dump: PathBuf::new(),
            dev_dump: PathBuf::new(),
            n: vec![10.0, 20.0, 30.0],
            mode: vec![RoarModeArg::Remove],
            seeds: 5,
            mlm: None,
            epochs: t.epochs,
            learning_rate: t.learning_rate,
            l2: t.l2,
            random_baseline: false,
            random_seed: 0,
            out: "roar.json".into(),
            csv: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SanityConfig {
    pub corpus: PathBuf,
    pub classifier: String,
    pub mlm: Option<String>,
    pub method: Method,
    #[serde(flatten)]
    pub params: MethodParams,
    pub trials: usize,
    pub sanity_seed: u64,
    pub out: PathBuf,
}

impl Default for SanityConfig {
    fn default() -> Self {
        SanityConfig {
            corpus: PathBuf::new(),
            classifier: String::new(),
            mlm: None,
            method: Method::LooEmpty,
            params: MethodParams::default(),
            trials: 3,
            sanity_seed: 0,
            out: "sanity.json".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StatsConfig {
    pub corpus: PathBuf,
    pub dump: Option<PathBuf>,
    pub tau: f64,
    /// Enables exact-match statistics for this MLM.
    pub mlm: Option<String>,
    pub out: PathBuf,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig { corpus: PathBuf::new(), dump: None, tau: 0.5, mlm: None, out: "stats.json".into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportConfig {
    pub corpus: PathBuf,
    pub dump: Option<PathBuf>,
    pub reports: Vec<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig { corpus: PathBuf::new(), dump: None, reports: Vec::new(), out_dir: "report".into() }
    }
}

/// Every replayable command with its resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", content = "config", rename_all = "kebab-case")]
pub enum CommandConfig {
    Synth(SynthConfig),
    TrainBow(TrainBowConfig),
    TrainMlm(TrainMlmConfig),
    Attribute(AttributeConfig),
    Eval(EvalConfig),
    Roar(RoarCmdConfig),
    Sanity(SanityConfig),
    Stats(StatsConfig),
    Report(ReportConfig),
}

/// Recursively overlays `top` onto `base`; `null` in `top` never overrides.
pub fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                if v.is_null() {
                    continue;
                }
                match b.get_mut(&k) {
                    Some(slot) if slot.is_object() && v.is_object() => merge(slot, v),
                    _ => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (b, t) if !t.is_null() => *b = t,
        _ => {}
    }
}

fn read_config_file(path: &Path) -> Result<Map<String, Value>> {
    let text = read_to_string(path)?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(AppError::config(format!("{}: config must be a JSON object", path.display()))),
        Err(e) => Err(AppError::Parse { path: path.to_path_buf(), line: e.line(), message: e.to_string() }),
    }
}

/// Builds a config with precedence flag > `--config` file > default.
/// `flags` holds only the flags given on the command line.
pub fn resolve<C>(flags: Value, config_file: Option<&Path>) -> Result<C>
where
    C: Default + Serialize + DeserializeOwned,
{
    let mut value = serde_json::to_value(C::default())?;
    let known: Vec<String> = value.as_object().map(|m| m.keys().cloned().collect()).unwrap_or_default();
    let check = |m: &Map<String, Value>, origin: &str| -> Result<()> {
        match m.keys().find(|k| !known.contains(k)) {
            Some(k) => Err(AppError::config(format!("unknown {origin} key {k:?}"))),
            None => Ok(()),
        }
    };
    if let Some(p) = config_file {
        let file = read_config_file(p)?;
        check(&file, "config")?;
        merge(&mut value, Value::Object(file));
    }
    if let Value::Object(m) = &flags {
        check(m, "flag")?;
    }
    merge(&mut value, flags);
    serde_json::from_value(value).map_err(|e| AppError::config(format!("invalid configuration: {e}")))
}
