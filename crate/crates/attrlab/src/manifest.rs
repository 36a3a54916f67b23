//! Run manifests: enough to replay a run and get byte-identical outputs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::cli::config::CommandConfig;
use crate::error::{AppError, Result};
use crate::fsutil::{file_sha256, read_to_string, to_json_pretty, write_atomic};
use crate::models::ModelSpec;

pub const TOOL: &str = "attrlab";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub argv: Vec<String>,
    #[serde(flatten)]
    pub run: CommandConfig,
    pub seed: u64,
    pub models: Vec<String>,
    /// Input path to sha256 of its content.
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// The seed that drives a run's randomness, or 0 when it has none.
pub fn global_seed(c: &CommandConfig) -> u64 {
    match c {
        CommandConfig::Synth(c) => c.seed,
        CommandConfig::TrainBow(c) => c.seed,
        CommandConfig::Attribute(c) => c.params.seed,
        CommandConfig::Eval(c) => c.seed,
        CommandConfig::Roar(c) => c.random_seed,
        CommandConfig::Sanity(c) => c.sanity_seed,
        CommandConfig::TrainMlm(_) | CommandConfig::Stats(_) | CommandConfig::Report(_) => 0,
    }
}

fn model_specs(c: &CommandConfig) -> Vec<&str> {
    let (clf, mlm): (Option<&str>, Option<&str>) = match c {
        CommandConfig::Attribute(c) => (Some(&c.classifier), c.mlm.as_deref()),
        CommandConfig::Eval(c) => (c.classifier.as_deref(), c.mlm.as_deref()),
        CommandConfig::Sanity(c) => (Some(&c.classifier), c.mlm.as_deref()),
        CommandConfig::Roar(c) => (None, c.mlm.as_deref()),
        CommandConfig::Stats(c) => (None, c.mlm.as_deref()),
        _ => (None, None),
    };
    clf.into_iter().chain(mlm).collect()
}

pub fn model_identities(c: &CommandConfig) -> Result<Vec<String>> {
    model_specs(c).into_iter().map(|s| ModelSpec::parse(s)?.identity()).collect()
}

/// Data files a run reads (model files are covered by their identities).
pub fn input_files(c: &CommandConfig) -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = Vec::new();
    match c {
        CommandConfig::Synth(_) => {}
        CommandConfig::TrainBow(c) => v.push(c.corpus.clone()),
        CommandConfig::TrainMlm(c) => v.push(c.corpus.clone()),
        CommandConfig::Attribute(c) => v.push(c.corpus.clone()),
        CommandConfig::Eval(c) => v.extend([Some(c.corpus.clone()), c.dump.clone()].into_iter().flatten()),
        CommandConfig::Roar(c) => v.extend([&c.train, &c.dev, &c.train_dump, &c.dev_dump].map(PathBuf::clone)),
        CommandConfig::Sanity(c) => v.push(c.corpus.clone()),
        CommandConfig::Stats(c) => v.extend([Some(c.corpus.clone()), c.dump.clone()].into_iter().flatten()),
        CommandConfig::Report(c) => {
            if c.dump.is_some() {
                v.push(c.corpus.clone());
                v.extend(c.dump.clone());
            }
            v.extend(c.reports.iter().cloned());
        }
    }
    v
}

pub fn hash_files(paths: &[PathBuf]) -> Result<BTreeMap<String, String>> {
    paths.iter().map(|p| Ok((p.display().to_string(), file_sha256(p)?))).collect()
}

/// Points every output of `c` into `dir`, keeping file names.
pub fn redirect_outputs(c: &mut CommandConfig, dir: &Path) {
    let move_file = |p: &mut PathBuf| {
        let name = p.file_name().map(PathBuf::from).unwrap_or_else(|| PathBuf::from("out"));
        *p = dir.join(name);
    };
    match c {
        CommandConfig::Synth(c) => move_file(&mut c.out),
        CommandConfig::TrainBow(c) => move_file(&mut c.out),
        CommandConfig::TrainMlm(c) => move_file(&mut c.out),
        CommandConfig::Attribute(c) => move_file(&mut c.out),
        CommandConfig::Eval(c) => {
            move_file(&mut c.out);
            c.csv.as_mut().map(move_file);
        }
        CommandConfig::Roar(c) => {
            move_file(&mut c.out);
            c.csv.as_mut().map(move_file);
        }
        CommandConfig::Sanity(c) => move_file(&mut c.out),
        CommandConfig::Stats(c) => move_file(&mut c.out),
        CommandConfig::Report(c) => c.out_dir = dir.to_path_buf(),
    }
}

pub fn manifest_path(primary: &Path) -> PathBuf {
    let mut s = primary.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

impl RunManifest {
    pub fn write(&self, primary: &Path) -> Result<PathBuf> {
        let path = manifest_path(primary);
        write_atomic(&path, &to_json_pretty(self)?)?;
        Ok(path)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| AppError::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// Fails when an input or builtin model has changed since the run.
    pub fn check_inputs(&self) -> Result<()> {
        let paths: Vec<PathBuf> = self.inputs.keys().map(PathBuf::from).collect();
        if hash_files(&paths)? != self.inputs {
            return Err(AppError::config("an input file changed since the recorded run"));
        }
        if model_identities(&self.run)? != self.models {
            return Err(AppError::config("a model changed since the recorded run"));
        }
        Ok(())
    }
}
