//! `pedattr` — identity-disjoint dataset splitting and multi-label
//! attribute evaluation.
//!
//! Exit codes: 0 success; 1 domain failure (split search exhausted, or
//! criteria failure under `verify --strict`) with the report still
//! written; 2 usage, IO or validation errors.

mod args;
mod commands;
mod envelope;
mod settings;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, CommonArgs};
use settings::{resolve_opt, resolve_report, FileConfig};

pub struct Ctx {
    pub file: FileConfig,
    pub report_path: std::path::PathBuf,
    pub threads: Option<usize>,
    pub config_path: Option<std::path::PathBuf>,
}

fn common(command: &Command) -> &CommonArgs {
    match command {
        Command::Split(a) => &a.common,
        Command::Verify(a) => &a.common,
        Command::Eval(a) => &a.common,
        Command::Audit(a) => &a.common,
        Command::Weights(a) => &a.common,
        Command::Synth(a) => &a.common,
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<u8> {
    let shared = common(&cli.command).clone();
    let file = FileConfig::load(shared.config.as_deref())?;
    let threads = resolve_opt(shared.threads, "THREADS", file.threads)?;
    if let Some(n) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .ok();
    }
    let report_path = resolve_report(shared.report.clone(), file.report.clone())?;
    let ctx = Ctx {
        file,
        report_path,
        threads,
        config_path: shared.config.clone(),
    };
    match cli.command {
        Command::Split(args) => commands::split::run(args, &ctx),
        Command::Verify(args) => commands::verify::run(args, &ctx),
        Command::Eval(args) => commands::eval::run(args, &ctx),
        Command::Audit(args) => commands::audit::run(args, &ctx),
        Command::Weights(args) => commands::weights::run(args, &ctx),
        Command::Synth(args) => commands::synth::run(args, &ctx),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            log::error!("{err:#}");
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
