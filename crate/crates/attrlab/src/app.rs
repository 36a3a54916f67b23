//! Running a parsed command line, manifests included.

use std::path::PathBuf;

use crate::cli::commands::{run, Outcome};
use crate::cli::config::CommandConfig;
use crate::cli::{Cli, Command};
use crate::error::{AppError, Result};
use crate::manifest::{
    global_seed, hash_files, input_files, model_identities, redirect_outputs, unix_now, RunManifest, TOOL,
};

/// Runs `config` and writes a manifest beside its first output.
pub fn execute(config: CommandConfig, argv: Vec<String>, workers: Option<usize>) -> Result<(Outcome, PathBuf)> {
    let started_unix = unix_now();
    let models = model_identities(&config)?;
    let inputs = hash_files(&input_files(&config))?;
    let outcome = run(&config, workers)?;
    let primary = outcome.outputs.first().cloned().ok_or_else(|| AppError::config("run produced no output"))?;
    let manifest = RunManifest {
        tool: TOOL.into(),
        version: env!("CARGO_PKG_VERSION").into(),
        argv,
        seed: global_seed(&config),
        run: config,
        models,
        inputs,
        outputs: hash_files(&outcome.outputs)?,
        started_unix,
        finished_unix: unix_now(),
    };
    let path = manifest.write(&primary)?;
    Ok((outcome, path))
}

pub fn dispatch(cli: Cli, argv: Vec<String>) -> Result<(Outcome, PathBuf)> {
    match &cli.command {
        Command::Rerun(a) => {
            let recorded = RunManifest::read(&a.manifest)?;
            recorded.check_inputs()?;
            let mut config = recorded.run;
            if let Some(dir) = &a.out_dir {
                std::fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))?;
                redirect_outputs(&mut config, dir);
            }
            execute(config, argv, cli.workers)
        }
        other => {
            let config = other.resolve()?.expect("non-rerun commands resolve");
            execute(config, argv, cli.workers)
        }
    }
}
