use std::process::ExitCode;

use attrlab::app::dispatch;
use attrlab::cli::Cli;
use attrlab::error::{EXIT_CONFIG, EXIT_PARTIAL};
use clap::{CommandFactory, Parser};

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            if !e.use_stderr() {
                return ExitCode::SUCCESS;
            }
            if !e.render().to_string().contains("Usage:") {
                eprintln!("\n{}", usage(&argv));
            }
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    match dispatch(cli, argv) {
        Ok((outcome, manifest)) => {
            for p in &outcome.outputs {
                println!("wrote {}", p.display());
            }
            println!("manifest {}", manifest.display());
            if outcome.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                for (id, e) in &outcome.failures {
                    eprintln!("{id}: {e}");
                }
                eprintln!("{} example(s) failed", outcome.failures.len());
                ExitCode::from(EXIT_PARTIAL as u8)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

/// Usage of the subcommand named in `argv`, or of the whole tool.
fn usage(argv: &[String]) -> String {
    let mut root = Cli::command();
    let name = argv.iter().skip(1).find(|a| !a.starts_with('-'));
    match name.and_then(|n| root.find_subcommand_mut(n)) {
        Some(sub) => sub.clone().bin_name(format!("attrlab {}", sub.get_name())).render_usage().to_string(),
        None => root.render_usage().to_string(),
    }
}
