//! Argument parsing. Every subcommand's flags are optional so that a value
//! left unset falls through to the `--config` file and then the default.

pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;

use crate::error::Result;
use crate::methods::Method;
use config::*;

const PRECEDENCE: &str = "Settings resolve as flag > --config file > built-in default. \
The config file is a JSON object whose keys are the long flag names with '-' replaced by '_'.";

#[derive(Debug, Parser)]
#[command(name = "attrlab", version, about = "Token attribution methods and faithfulness metrics", after_help = PRECEDENCE)]
pub struct Cli {
    /// Example-level worker threads (default: available parallelism). Never changes results.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a seeded keyword corpus with keyword highlights.
    #[command(after_help = PRECEDENCE)]
    Synth(SynthArgs),
    /// Train the bag-of-words classifier.
    #[command(after_help = PRECEDENCE)]
    TrainBow(TrainBowArgs),
    /// Train the interpolated bigram masked LM.
    #[command(after_help = PRECEDENCE)]
    TrainMlm(TrainMlmArgs),
    /// Attribute every example of a corpus and write a dump.
    #[command(after_help = PRECEDENCE)]
    Attribute(AttributeArgs),
    /// Score a dump: deletion curves, agreement with highlights, or accuracy drop.
    #[command(after_help = PRECEDENCE)]
    Eval(EvalArgs),
    /// Remove-and-retrain benchmark over a grid of N and modes.
    #[command(after_help = PRECEDENCE)]
    Roar(RoarArgs),
    /// Compare attributions before and after re-randomizing the classifier head.
    #[command(after_help = PRECEDENCE)]
    Sanity(SanityArgs),
    /// Attribution magnitude/coverage and MLM exact-match statistics.
    #[command(after_help = PRECEDENCE)]
    Stats(StatsArgs),
    /// Render heatmaps and a summary table.
    #[command(after_help = PRECEDENCE)]
    Report(ReportArgs),
    /// Replay a run from its manifest.
    Rerun(RerunArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ConfigArg {
    /// JSON file of settings; flags given on the command line win.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: ConfigArg,
    /// Number of examples.
    #[arg(long)]
    pub n: Option<usize>,
    /// Tokens per example.
    #[arg(long)]
    pub length: Option<usize>,
    #[arg(long)]
    pub positive_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainBowArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: ConfigArg,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainMlmArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: ConfigArg,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Additive smoothing.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Weight of the bigram terms against the unigram.
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MethodArgs {
    /// IM: candidates kept per position.
    #[arg(long)]
    pub top_k: Option<usize>,
    /// IM: candidates below this likelihood are dropped.
    #[arg(long)]
    pub min_likelihood: Option<f64>,
    /// IM: do not renormalize the kept candidates.
    #[arg(long)]
    #[serde(skip)]
    pub no_renormalize: bool,
    /// LIME: perturbed samples.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub kernel_width: Option<f64>,
    #[arg(long)]
    pub ridge_lambda: Option<f64>,
    /// LIME: base seed, combined with each example id.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args, Serialize)]
pub struct AttributeArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: ConfigArg,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// builtin:<path> or remote:<url>
    #[arg(long)]
    pub classifier: Option<String>,
    /// builtin:<path>, remote:<url> or delta
    #[arg(long)]
    pub mlm: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    /// predicted, gold, or a label name.
    #[arg(long)]
    pub target: Option<String>,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: MethodArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: ConfigArg,
    #[arg(long, value_enum)]
    pub metric: Option<EvalMetric>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub dump: Option<PathBuf>,
    #[arg(long)]
    pub classifier: Option<String>,
    #[arg(long)]
    pub mlm: Option<String>,
    /// Deletion: largest fraction of tokens removed.
    #[arg(long)]
    pub max_fraction: Option<f64>,
    /// Agreement: comma-separated thresholds.
    #[arg(long, value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,
    /// Accuracy drop: how inputs are perturbed.
    #[arg(long, value_enum)]
    pub perturbation: Option<PerturbationKind>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RoarArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: ConfigArg,
    #[arg(long)]
    pub train: Option<PathBuf>,
    #[arg(long)]
    pub dev: Option<PathBuf>,
    #[arg(long)]
    pub train_dump: Option<PathBuf>,
    #[arg(long)]
    pub dev_dump: Option<PathBuf>,
    /// Comma-separated percentages of tokens perturbed.
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<f64>>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub mode: Option<Vec<RoarModeArg>>,
    /// Number of retraining seeds (0..seeds).
    #[arg(long)]
    pub seeds: Option<u64>,
    #[arg(long)]
    pub mlm: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub l2: Option<f64>,
    /// Also retrain on random maps and report p-values against them.
    #[arg(long)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub random_baseline: bool,
    #[arg(long)]
    pub random_seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SanityArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: ConfigArg,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Must be builtin:<path>.
    #[arg(long)]
    pub classifier: Option<String>,
    #[arg(long)]
    pub mlm: Option<String>,
    #[arg(long, value_enum)]
    pub method: Option<Method>,
    #[command(flatten)]
    #[serde(flatten)]
    pub params: MethodArgs,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub sanity_seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct StatsArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: ConfigArg,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Coverage threshold on the rescaled scores.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub mlm: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[command(flatten)]
    #[serde(skip)]
    pub common: ConfigArg,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub dump: Option<PathBuf>,
    /// Comma-separated metric report JSON files to tabulate.
    #[arg(long, value_delimiter = ',')]
    pub reports: Option<Vec<PathBuf>>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RerunArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Write outputs here instead of their recorded locations.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn flags<T: Serialize>(args: &T) -> Result<Value> {
    Ok(serde_json::to_value(args)?)
}

fn with_renormalize(mut v: Value, p: &MethodArgs) -> Value {
    if p.no_renormalize {
        v["renormalize"] = Value::Bool(false);
    }
    v
}

fn cfg(c: &ConfigArg) -> Option<&Path> {
    c.config.as_deref()
}

impl Command {
    /// The resolved config, or `None` for `rerun`.
    pub fn resolve(&self) -> Result<Option<CommandConfig>> {
        Ok(Some(match self {
            Command::Synth(a) => CommandConfig::Synth(resolve(flags(a)?, cfg(&a.common))?),
            Command::TrainBow(a) => CommandConfig::TrainBow(resolve(flags(a)?, cfg(&a.common))?),
            Command::TrainMlm(a) => CommandConfig::TrainMlm(resolve(flags(a)?, cfg(&a.common))?),
            Command::Attribute(a) => {
                CommandConfig::Attribute(resolve(with_renormalize(flags(a)?, &a.params), cfg(&a.common))?)
            }
            Command::Eval(a) => CommandConfig::Eval(resolve(flags(a)?, cfg(&a.common))?),
            Command::Roar(a) => CommandConfig::Roar(resolve(flags(a)?, cfg(&a.common))?),
            Command::Sanity(a) => {
                CommandConfig::Sanity(resolve(with_renormalize(flags(a)?, &a.params), cfg(&a.common))?)
            }
            Command::Stats(a) => CommandConfig::Stats(resolve(flags(a)?, cfg(&a.common))?),
            Command::Report(a) => CommandConfig::Report(resolve(flags(a)?, cfg(&a.common))?),
            Command::Rerun(_) => return Ok(None),
        }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    fn parse(args: &[&str]) -> CommandConfig {
        let cli = Cli::try_parse_from(args).unwrap();
        cli.command.resolve().unwrap().unwrap()
    }

    #[test]
    fn cli_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn attribute_flags_resolve() {
        let c = parse(&[
            "attrlab",
            "attribute",
            "--method",
            "im",
            "--top-k",
            "3",
            "--no-renormalize",
            "--classifier",
            "delta",
        ]);
        let CommandConfig::Attribute(c) = c else { panic!() };
        assert_eq!((c.method, c.params.top_k, c.params.renormalize), (Method::Im, 3, false));
        assert_eq!(c.target, "predicted");
    }

    #[test]
    fn list_flags_split_on_commas() {
        let c = parse(&["attrlab", "roar", "--n", "10,20", "--mode", "remove,mlm", "--random-baseline"]);
        let CommandConfig::Roar(c) = c else { panic!() };
        assert_eq!(c.n, vec![10.0, 20.0]);
        assert_eq!(c.mode, vec![RoarModeArg::Remove, RoarModeArg::Mlm]);
        assert!(c.random_baseline);
    }

    #[test]
    fn unset_bool_keeps_config_value() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        std::fs::write(&p, r#"{"random_baseline": true, "seeds": 2}"#).unwrap();
        let c = parse(&["attrlab", "roar", "--config", p.to_str().unwrap(), "--seeds", "3"]);
        let CommandConfig::Roar(c) = c else { panic!() };
        assert!(c.random_baseline);
        assert_eq!(c.seeds, 3);
    }
}
