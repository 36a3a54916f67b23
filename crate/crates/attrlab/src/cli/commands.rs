//! One function per command. Each is a pure function of its resolved config
//! (plus the worker count, which never changes the output).

use std::path::{Path, PathBuf};

use attrlab_core::metrics::{
    accuracy_drop, agreement_scores, agreement_sweep, attribution_stats, default_tau_grid, deletion_curve,
    exact_match_stats, sanity_check, AccuracyPerturbation, DeletionMode,
};
use attrlab_core::models::{keyword_corpus, train_bow, NgramMlm, TrainConfig};
use attrlab_core::numstats::{derive_seed, SplitMix64};
use attrlab_core::roar::{roar_compare, roar_run, RoarConfig, RoarMode, RoarResult};
use attrlab_core::{AttributionMap, LabeledExample, ScoreSpace};
use rayon::prelude::*;
use serde_json::{json, Value};

use super::config::*;
use crate::corpus::{load_corpus, save_corpus};
use crate::dump::{align, read_dump, write_dump, DumpRecord};
use crate::error::{AppError, Result};
use crate::fsutil::write_atomic;
use crate::heatmap::{render_page, render_row};
use crate::methods::{attribute_example, resolve_target};
use crate::modelio::{save_bow, save_ngram};
use crate::models::{LoadedClassifier, LoadedMlm};
use crate::report::{aggregate_table, cell, MetricReport, Table};

/// Files written and examples that failed without stopping the run.
#[derive(Debug, Default)]
pub struct Outcome {
    pub outputs: Vec<PathBuf>,
    pub failures: Vec<(String, String)>,
}

impl Outcome {
    fn wrote(outputs: Vec<PathBuf>) -> Self {
        Outcome { outputs, failures: Vec::new() }
    }
}

pub fn run(config: &CommandConfig, workers: Option<usize>) -> Result<Outcome> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = workers {
        if k == 0 {
            return Err(AppError::config("--workers must be at least 1"));
        }
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| AppError::config(format!("thread pool: {e}")))?;
    pool.install(|| match config {
        CommandConfig::Synth(c) => synth(c),
        CommandConfig::TrainBow(c) => train_bow_cmd(c),
        CommandConfig::TrainMlm(c) => train_mlm_cmd(c),
        CommandConfig::Attribute(c) => attribute(c),
        CommandConfig::Eval(c) => eval(c),
        CommandConfig::Roar(c) => roar(c),
        CommandConfig::Sanity(c) => sanity(c),
        CommandConfig::Stats(c) => stats(c),
        CommandConfig::Report(c) => report(c),
    })
}

type Failures = Vec<(String, String)>;

/// Splits per-example results: model failures abort the run, anything else
/// is recorded against the example and skipped.
fn partition<T>(
    ids: impl IntoIterator<Item = String>,
    results: Vec<attrlab_core::Result<T>>,
) -> Result<(Vec<(String, T)>, Failures)> {
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (id, r) in ids.into_iter().zip(results) {
        match r {
            Ok(v) => ok.push((id, v)),
            Err(e) if e.is_model_error() => return Err(e.into()),
            Err(e) => failed.push((id, e.to_string())),
        }
    }
    Ok((ok, failed))
}

fn errors_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".errors.jsonl");
    PathBuf::from(s)
}

fn write_error_log(out: &Path, failures: &[(String, String)], outputs: &mut Vec<PathBuf>) -> Result<()> {
    if failures.is_empty() {
        return Ok(());
    }
    let mut text = String::new();
    for (id, error) in failures {
        text.push_str(&serde_json::to_string(&json!({"id": id, "error": error}))?);
        text.push('\n');
    }
    let p = errors_path(out);
    write_atomic(&p, text.as_bytes())?;
    outputs.push(p);
    Ok(())
}

fn require<'a>(value: &'a Option<String>, what: &str) -> Result<&'a str> {
    value.as_deref().ok_or_else(|| AppError::config(format!("this command needs --{what}")))
}

fn synth(c: &SynthConfig) -> Result<Outcome> {
    if c.n == 0 || c.length == 0 || !(0.0..=1.0).contains(&c.positive_fraction) {
        return Err(AppError::config("synth needs n >= 1, length >= 1 and positive_fraction in [0, 1]"));
    }
    let corpus: Vec<LabeledExample> = keyword_corpus(c.n, c.length, c.positive_fraction, c.seed)
        .into_iter()
        .map(|ex| {
            let bits = ex.sequence.tokens().iter().map(|t| u8::from(t == "good" || t == "bad")).collect();
            ex.with_highlight(bits)
        })
        .collect();
    save_corpus(&corpus, &c.out)?;
    Ok(Outcome::wrote(vec![c.out.clone()]))
}

fn train_bow_cmd(c: &TrainBowConfig) -> Result<Outcome> {
    let corpus = load_corpus(&c.corpus)?;
    let config = TrainConfig { epochs: c.epochs, learning_rate: c.learning_rate, l2: c.l2, seed: c.seed };
    let model = train_bow(&corpus, &config)?;
    save_bow(&model, &c.out)?;
    Ok(Outcome::wrote(vec![c.out.clone()]))
}

fn train_mlm_cmd(c: &TrainMlmConfig) -> Result<Outcome> {
    let corpus = load_corpus(&c.corpus)?;
    let texts: Vec<_> = corpus.into_iter().map(|e| e.sequence).collect();
    let model = NgramMlm::train(&texts, c.alpha, c.lambda)?;
    save_ngram(&model, &c.out)?;
    Ok(Outcome::wrote(vec![c.out.clone()]))
}

fn attribute(c: &AttributeConfig) -> Result<Outcome> {
    c.params.validate(c.method)?;
    let corpus = load_corpus(&c.corpus)?;
    let classifier = LoadedClassifier::load(&c.classifier)?;
    let mlm = LoadedMlm::load_opt(c.mlm.as_deref())?;
    if c.method.needs_mlm() && mlm.is_none() {
        return Err(AppError::config(format!("method {:?} needs --mlm", c.method)));
    }
    let clf = classifier.as_dyn();
    let mlm = mlm.as_ref().map(LoadedMlm::as_dyn);
    let results: Vec<_> = corpus
        .par_iter()
        .map(|ex| {
            let target = resolve_target(&c.target, clf, ex)?;
            attribute_example(c.method, &c.params, clf, mlm, ex, &target)
        })
        .collect();
    let (maps, failures) = partition(corpus.iter().map(|e| e.id.clone()), results)?;
    let records: Vec<DumpRecord> = maps.iter().map(|(id, m)| DumpRecord::new(id, m)).collect();
    write_dump(&c.out, &records)?;
    let mut outputs = vec![c.out.clone()];
    write_error_log(&c.out, &failures, &mut outputs)?;
    Ok(Outcome { outputs, failures })
}

fn load_aligned(corpus: &Path, dump: &Option<PathBuf>) -> Result<(Vec<LabeledExample>, Vec<AttributionMap>)> {
    let dump = dump.as_ref().ok_or_else(|| AppError::config("this metric needs --dump"))?;
    let corpus = load_corpus(corpus)?;
    let records = read_dump(dump)?;
    let (examples, maps) = align(&corpus, &records)?;
    Ok((examples.into_iter().cloned().collect(), maps))
}

fn write_report(report: &MetricReport, out: &Path, csv: Option<(&Path, Table)>) -> Result<Vec<PathBuf>> {
    report.write_json(out)?;
    let mut outputs = vec![out.to_path_buf()];
    if let Some((path, table)) = csv {
        table.write_csv(path)?;
        outputs.push(path.to_path_buf());
    }
    Ok(outputs)
}

fn eval(c: &EvalConfig) -> Result<Outcome> {
    let config = serde_json::to_value(c)?;
    let (report, table, failures) = match c.metric {
        EvalMetric::Deletion | EvalMetric::DeletionMlm => eval_deletion(c, config)?,
        EvalMetric::Agreement => eval_agreement(c, config)?,
        EvalMetric::AccuracyDrop => eval_accuracy_drop(c, config)?,
    };
    let mut outputs = write_report(&report, &c.out, c.csv.as_deref().map(|p| (p, table)))?;
    write_error_log(&c.out, &failures, &mut outputs)?;
    Ok(Outcome { outputs, failures })
}

type EvalParts = (MetricReport, Table, Vec<(String, String)>);

fn eval_deletion(c: &EvalConfig, config: Value) -> Result<EvalParts> {
    let (mode, name) = match c.metric {
        EvalMetric::DeletionMlm => (DeletionMode::MlmReplace, "deletion-mlm"),
        _ => (DeletionMode::Delete, "deletion"),
    };
    let (examples, maps) = load_aligned(&c.corpus, &c.dump)?;
    let classifier = LoadedClassifier::load(require(&c.classifier, "classifier")?)?;
    let mlm = LoadedMlm::load_opt(c.mlm.as_deref())?;
    if mode == DeletionMode::MlmReplace && mlm.is_none() {
        return Err(AppError::config("deletion-mlm needs --mlm"));
    }
    let (clf, mlm) = (classifier.as_dyn(), mlm.as_ref().map(LoadedMlm::as_dyn));
    let results: Vec<_> = examples
        .par_iter()
        .zip(&maps)
        .map(|(ex, map)| deletion_curve(clf, &ex.sequence, &map.target_label, map, c.max_fraction, mode, mlm))
        .collect();
    let (curves, failures) = partition(examples.iter().map(|e| e.id.clone()), results)?;
    let mut table = Table::new(["id", "auc"]);
    let mut per_example = Vec::with_capacity(curves.len());
    for (id, curve) in &curves {
        table.push(vec![id.clone(), cell(curve.auc)]);
        per_example
            .push(json!({"id": id, "auc": curve.auc, "fractions": curve.fractions, "confidences": curve.confidences}));
    }
    let mean_auc =
        if curves.is_empty() { 0.0 } else { curves.iter().map(|(_, k)| k.auc).sum::<f64>() / curves.len() as f64 };
    let aggregate = json!({"mean_auc": mean_auc, "examples": curves.len(), "failed": failures.len()});
    Ok((MetricReport { metric: name.into(), config, per_example, aggregate }, table, failures))
}

fn eval_agreement(c: &EvalConfig, config: Value) -> Result<EvalParts> {
    let (examples, maps) = load_aligned(&c.corpus, &c.dump)?;
    let (mut kept_ex, mut kept_maps, mut skipped) = (Vec::new(), Vec::new(), 0usize);
    for (ex, map) in examples.into_iter().zip(maps) {
        if ex.highlight.is_some() {
            kept_ex.push(ex);
            kept_maps.push(map);
        } else {
            skipped += 1;
        }
    }
    let taus = c.taus.clone().unwrap_or_else(default_tau_grid);
    let sweep = agreement_sweep(&kept_maps, &kept_ex, &taus)?;
    let mut per_example = Vec::with_capacity(kept_ex.len());
    for (ex, map) in kept_ex.iter().zip(&kept_maps) {
        let s = agreement_scores(map, ex.highlight.as_deref().unwrap_or_default(), sweep.best_tau)?;
        per_example.push(json!({"id": ex.id, "iou": s.iou, "precision": s.precision, "recall": s.recall, "f1": s.f1}));
    }
    let mut table = Table::new(["tau", "iou", "precision", "recall", "f1"]);
    for s in &sweep.per_tau {
        table.push(vec![cell(s.tau), cell(s.iou), cell(s.precision), cell(s.recall), cell(s.f1)]);
    }
    let b = sweep.best;
    let aggregate = json!({
        "best_tau": sweep.best_tau, "iou": b.iou, "precision": b.precision, "recall": b.recall, "f1": b.f1,
        "examples": kept_ex.len(), "skipped_no_highlight": skipped, "per_tau": sweep.per_tau,
    });
    Ok((MetricReport { metric: "agreement".into(), config, per_example, aggregate }, table, Vec::new()))
}

fn eval_accuracy_drop(c: &EvalConfig, config: Value) -> Result<EvalParts> {
    let examples = load_corpus(&c.corpus)?;
    let classifier = LoadedClassifier::load(require(&c.classifier, "classifier")?)?;
    let mlm = LoadedMlm::load_opt(c.mlm.as_deref())?;
    let perturbation = match c.perturbation {
        PerturbationKind::Delete => AccuracyPerturbation::OneTokenDelete,
        PerturbationKind::Mlm => AccuracyPerturbation::OneTokenMlmReplace(
            mlm.as_ref().map(LoadedMlm::as_dyn).ok_or_else(|| AppError::config("mlm perturbation needs --mlm"))?,
        ),
        PerturbationKind::Lime => AccuracyPerturbation::LimeMask { samples: c.samples, seed: c.seed },
    };
    let d = accuracy_drop(classifier.as_dyn(), &examples, perturbation)?;
    let mut table = Table::new(["base_acc", "perturbed_acc", "delta", "variants"]);
    table.push(vec![cell(d.base_acc), cell(d.perturbed_acc), cell(d.delta), d.variants.to_string()]);
    let aggregate = serde_json::to_value(d)?;
    Ok((MetricReport { metric: "accuracy-drop".into(), config, per_example: Vec::new(), aggregate }, table, Vec::new()))
}

fn random_maps(examples: &[LabeledExample], seed: u64) -> Vec<AttributionMap> {
    examples
        .iter()
        .map(|ex| {
            let mut rng = SplitMix64::new(derive_seed(seed, &ex.id));
            let scores = (0..ex.len()).map(|_| rng.next_f64()).collect();
            AttributionMap::new(scores, "random", ex.gold_label.clone(), ScoreSpace::Probability)
        })
        .collect()
}

fn roar(c: &RoarCmdConfig) -> Result<Outcome> {
    if c.seeds == 0 || c.n.is_empty() || c.mode.is_empty() {
        return Err(AppError::config("roar needs seeds >= 1 and at least one --n and --mode"));
    }
    let (train, train_maps) = load_aligned(&c.train, &Some(c.train_dump.clone()))?;
    let (dev, dev_maps) = load_aligned(&c.dev, &Some(c.dev_dump.clone()))?;
    let mlm = LoadedMlm::load_opt(c.mlm.as_deref())?;
    let mlm = mlm.as_ref().map(LoadedMlm::as_dyn);
    let method = train_maps.first().map(|m| m.method.clone()).unwrap_or_else(|| "unknown".into());
    let seeds: Vec<u64> = (0..c.seeds).collect();
    let train_config = TrainConfig { epochs: c.epochs, learning_rate: c.learning_rate, l2: c.l2, seed: 0 };
    let baseline = c
        .random_baseline
        .then(|| (random_maps(&train, c.random_seed), random_maps(&dev, c.random_seed.wrapping_add(1))));

    let mut header = vec![
        "method".to_string(),
        "n_percent".into(),
        "mode".into(),
        "mean_acc".into(),
        "std_acc".into(),
        "p_value_vs_random".into(),
    ];
    header.extend(seeds.iter().map(|s| format!("acc_seed_{s}")));
    let mut table = Table::new(header);
    let mut runs = Vec::new();
    let mut push_row = |label: &str, r: &RoarResult, p: Option<f64>| {
        let mut row = vec![
            label.to_string(),
            format!("{}", r.n_percent * 100.0),
            r.mode.as_str().to_string(),
            cell(100.0 * r.mean),
            cell(100.0 * r.std),
            p.map(cell).unwrap_or_default(),
        ];
        row.extend(r.per_seed_acc.iter().map(|a| cell(100.0 * a)));
        table.push(row);
        runs.push(json!({"method": label, "result": r, "p_value_vs_random": p}));
    };
    for &n in &c.n {
        for &mode in &c.mode {
            let mode = match mode {
                RoarModeArg::Remove => RoarMode::Remove,
                RoarModeArg::Mlm => RoarMode::MlmReplace,
            };
            let config = RoarConfig { n_percent: n / 100.0, mode, seeds: seeds.clone(), train_config };
            let result = roar_run(&train, &dev, &train_maps, &dev_maps, &config, mlm)?;
            match &baseline {
                Some((bt, bd)) => {
                    let random = roar_run(&train, &dev, bt, bd, &config, mlm)?;
                    let p = if seeds.len() >= 2 { Some(roar_compare(&result, &random)?) } else { None };
                    push_row(&method, &result, p);
                    push_row("random", &random, None);
                }
                None => push_row(&method, &result, None),
            }
        }
    }
    let report = MetricReport {
        metric: "roar".into(),
        config: serde_json::to_value(c)?,
        per_example: Vec::new(),
        aggregate: json!({"runs": runs}),
    };
    let outputs = write_report(&report, &c.out, c.csv.as_deref().map(|p| (p, table)))?;
    Ok(Outcome::wrote(outputs))
}

fn sanity(c: &SanityConfig) -> Result<Outcome> {
    c.params.validate(c.method)?;
    let corpus = load_corpus(&c.corpus)?;
    let classifier = LoadedClassifier::load(&c.classifier)?;
    let bow = classifier
        .as_bow()
        .ok_or_else(|| AppError::config("sanity needs a builtin classifier (its head is re-randomized)"))?;
    let mlm = LoadedMlm::load_opt(c.mlm.as_deref())?;
    if c.method.needs_mlm() && mlm.is_none() {
        return Err(AppError::config(format!("method {:?} needs --mlm", c.method)));
    }
    let mlm = mlm.as_ref().map(LoadedMlm::as_dyn);
    // Targets are fixed by the original model so every trial explains the same label.
    let probe: Vec<_> = corpus
        .iter()
        .map(|ex| {
            let target = resolve_target("predicted", bow, ex)?;
            attribute_example(c.method, &c.params, bow, mlm, ex, &target).map(|_| target)
        })
        .collect();
    let (ok, failures) = partition(corpus.iter().map(|e| e.id.clone()), probe)?;
    let targets: std::collections::HashMap<String, String> = ok.into_iter().collect();
    let usable: Vec<LabeledExample> = corpus.into_iter().filter(|e| targets.contains_key(&e.id)).collect();
    if usable.is_empty() {
        return Err(AppError::config("no example could be attributed"));
    }
    let result = sanity_check(
        |model, ex| attribute_example(c.method, &c.params, model, mlm, ex, &targets[&ex.id]),
        bow,
        &usable,
        c.trials,
        c.sanity_seed,
    )?;
    let mut aggregate = serde_json::to_value(result)?;
    aggregate["examples"] = json!(usable.len());
    let report =
        MetricReport { metric: "sanity".into(), config: serde_json::to_value(c)?, per_example: Vec::new(), aggregate };
    let mut outputs = write_report(&report, &c.out, None)?;
    write_error_log(&c.out, &failures, &mut outputs)?;
    Ok(Outcome { outputs, failures })
}

fn stats(c: &StatsConfig) -> Result<Outcome> {
    if c.dump.is_none() && c.mlm.is_none() {
        return Err(AppError::config("stats needs --dump, --mlm or both"));
    }
    let mut aggregate = serde_json::Map::new();
    let mut per_example = Vec::new();
    if c.dump.is_some() {
        let (examples, maps) = load_aligned(&c.corpus, &c.dump)?;
        let s = attribution_stats(&maps, &examples, c.tau)?;
        aggregate.insert("mean_abs".into(), json!(s.mean_abs));
        aggregate.insert("coverage_pct".into(), json!(s.coverage_pct));
        for (ex, map) in examples.iter().zip(&maps) {
            let one = attribution_stats(std::slice::from_ref(map), std::slice::from_ref(ex), c.tau)?;
            per_example.push(json!({"id": ex.id, "mean_abs": one.mean_abs, "coverage_pct": one.coverage_pct}));
        }
    }
    if let Some(spec) = &c.mlm {
        let corpus = load_corpus(&c.corpus)?;
        let mlm = LoadedMlm::load(spec)?;
        let s = exact_match_stats(mlm.as_dyn(), &corpus)?;
        aggregate.insert("exact_match".into(), serde_json::to_value(s)?);
        aggregate.insert("exact_match_empty".into(), json!(s.no_matches()));
    }
    let report = MetricReport {
        metric: "stats".into(),
        config: serde_json::to_value(c)?,
        per_example,
        aggregate: Value::Object(aggregate),
    };
    Ok(Outcome::wrote(write_report(&report, &c.out, None)?))
}

fn report(c: &ReportConfig) -> Result<Outcome> {
    let mut outputs = Vec::new();
    if c.dump.is_some() {
        let (examples, maps) = load_aligned(&c.corpus, &c.dump)?;
        let rows = examples
            .iter()
            .zip(&maps)
            .map(|(ex, map)| {
                let caption = format!("{} | gold {} | {} for {}", ex.id, ex.gold_label, map.method, map.target_label);
                render_row(&caption, &ex.sequence, map)
            })
            .collect::<Result<Vec<_>>>()?;
        let path = c.out_dir.join("heatmaps.html");
        write_atomic(&path, render_page("attribution heatmaps", &rows).as_bytes())?;
        outputs.push(path);
    }
    if !c.reports.is_empty() {
        let reports = c.reports.iter().map(|p| MetricReport::read_json(p)).collect::<Result<Vec<_>>>()?;
        let path = c.out_dir.join("summary.csv");
        aggregate_table(&reports).write_csv(&path)?;
        outputs.push(path);
    }
    if outputs.is_empty() {
        return Err(AppError::config("report needs --dump, --reports or both"));
    }
    Ok(Outcome::wrote(outputs))
}
