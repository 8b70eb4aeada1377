mod config;
mod report;
mod stages;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use galleryflow::ingest::IngestError;
use serde::Serialize;

use config::Loaded;
use report::{Format, SCHEMA_VERSION};
use stages::{Needs, Run};

/// Visitor-behaviour analytics over museum audio-guide logs and reviews.
#[derive(Debug, Parser)]
#[command(name = "galleryflow", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Pipeline config (TOML). Relative paths inside it resolve against its directory.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `paths.outdir`.
    #[arg(long, global = true)]
    outdir: Option<PathBuf>,
    /// Seed for the synthetic generator; overrides `synth.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Report format: JSON documents or flattened key/value CSV.
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Clean the event log into trips.
    Ingest,
    /// Cluster trips into visitor archetypes.
    Cluster,
    /// Room transitions, PageRank, stair penalties, drop-off and popularity.
    Flow,
    /// Tour completion and survival.
    Tours,
    /// Review sentiment, group ratings, rating lag and distinctive terms.
    Sentiment,
    /// Generate a labelled synthetic corpus.
    Synth,
    /// Run every enabled analysis stage.
    All,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{role} file not found: {}", path.display())]
    Missing { role: &'static str, path: PathBuf },
    #[error("paths.{0} is not set")]
    Unset(&'static str),
    #[error("reviews rejected: {malformed} of {records} lines are malformed")]
    ReviewsRejected { malformed: usize, records: usize },
    #[error("GALLERYFLOW_THREADS must be a positive integer, got `{0}`")]
    Threads(String),
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    schema: &'static str,
    schema_version: u32,
    tool_version: &'static str,
    exit_code: u8,
    kind: &'static str,
    message: String,
    causes: Vec<String>,
    path: Option<&'a Path>,
}

fn is_rejection(err: &anyhow::Error) -> bool {
    err.chain().any(|e| {
        matches!(
            e.downcast_ref::<IngestError>(),
            Some(IngestError::CorpusRejected { .. })
        ) || matches!(e.downcast_ref::<CliError>(), Some(CliError::ReviewsRejected { .. }))
    })
}

fn error_path(err: &anyhow::Error) -> Option<&Path> {
    err.chain().find_map(|e| match e.downcast_ref::<CliError>() {
        Some(CliError::Missing { path, .. }) => Some(path.as_path()),
        _ => None,
    })
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("GALLERYFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Threads(raw.clone()))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("cannot configure thread pool")
}

fn outdir(cli: &Cli, loaded: &Loaded) -> PathBuf {
    if let Some(d) = &cli.outdir {
        return d.clone();
    }
    match &loaded.config.paths.outdir {
        Some(d) => loaded.resolve(d),
        None => loaded.resolve("out"),
    }
}

fn execute(cli: &Cli, outdir_hint: &mut Option<PathBuf>) -> Result<()> {
    configure_threads()?;
    let mut loaded = match &cli.config {
        Some(p) => Loaded::from_file(p)?,
        None => Loaded::defaults(),
    };
    if let Some(seed) = cli.seed {
        loaded.config.synth.seed = seed;
    }
    let out = outdir(cli, &loaded);
    *outdir_hint = Some(out.clone());

    let stages = loaded.config.stages.clone();
    let needs = match cli.command {
        Command::Ingest | Command::Cluster | Command::Flow | Command::Tours => Needs {
            events: true,
            reviews: false,
        },
        Command::Sentiment => Needs {
            events: false,
            reviews: true,
        },
        Command::Synth => Needs::default(),
        Command::All => Needs {
            events: stages.ingest || stages.cluster || stages.flow || stages.tours,
            reviews: stages.sentiment,
        },
    };
    let mut run = Run::open(loaded, needs, out, cli.format)?;

    match cli.command {
        Command::Ingest => {
            run.ingest()?;
        }
        Command::Cluster => run.cluster(&run.clean()?.0)?,
        Command::Flow => run.flow(&run.clean()?.0)?,
        Command::Tours => run.tours(&run.clean()?.0)?,
        Command::Sentiment => run.sentiment()?,
        Command::Synth => run.synth()?,
        Command::All => {
            if needs.events {
                let trips = if stages.ingest { run.ingest()? } else { run.clean()?.0 };
                if stages.cluster {
                    run.cluster(&trips)?;
                }
                if stages.flow {
                    run.flow(&trips)?;
                }
                if stages.tours {
                    run.tours(&trips)?;
                }
            }
            if stages.sentiment {
                run.sentiment()?;
            }
        }
    }
    let stale = run.out.outdir.join("error.json");
    if stale.is_file() {
        std::fs::remove_file(&stale).with_context(|| format!("cannot remove {}", stale.display()))?;
    }
    for p in run.out.written() {
        println!("{}", p.display());
    }
    Ok(())
}

fn write_error_report(dir: &Path, err: &anyhow::Error, code: u8) {
    let report = ErrorReport {
        schema: "galleryflow.error",
        schema_version: SCHEMA_VERSION,
        tool_version: env!("CARGO_PKG_VERSION"),
        exit_code: code,
        kind: if code == 2 { "data_quality" } else { "input" },
        message: err.to_string(),
        causes: err.chain().skip(1).map(|e| e.to_string()).collect(),
        path: error_path(err),
    };
    let write = || -> Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        std::fs::write(dir.join("error.json"), text)?;
        Ok(())
    };
    if let Err(e) = write() {
        eprintln!("warning: could not write error report: {e:#}");
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let mut outdir_hint = cli.outdir.clone();
    match execute(&cli, &mut outdir_hint) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let code = if is_rejection(&err) { 2 } else { 1 };
            eprintln!("error: {err:#}");
            if let Some(dir) = &outdir_hint {
                write_error_report(dir, &err, code);
            }
            ExitCode::from(code)
        }
    }
}
