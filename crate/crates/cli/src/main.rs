//! Batch front-end: one JSON experiment config per invocation.

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

mod config;
mod tasks;

#[derive(Parser)]
#[command(
    name = "com-lab",
    version,
    about = "Center-of-mass experiments for asymptotically flat 3-metrics"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Validate the config, run the task and write its artifacts.
    Run {
        #[command(flatten)]
        common: Common,
        /// Worker threads (default: available parallelism).
        #[arg(long)]
        threads: Option<usize>,
        /// Directory the output prefix is resolved against.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Reserved; every method is deterministic.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check the config against the schema without computing anything.
    Validate {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct RunReport {
    task: String,
    config: String,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    diagnostics: Vec<String>,
    wall_seconds: f64,
    error_estimates: BTreeMap<String, f64>,
    verdicts: BTreeMap<String, Value>,
    summary: BTreeMap<String, Value>,
    files: Vec<String>,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("COM_LAB_LOG", "error")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Validate { common } => {
            let text = read(&common.config)?;
            match config::load(&text) {
                Ok(_) => {
                    println!("{}: ok", common.config.display());
                    Ok(0)
                }
                Err(diags) => {
                    for d in &diags {
                        println!("{d}");
                    }
                    Ok(2)
                }
            }
        }
        Command::Run {
            common,
            threads,
            out,
            seed,
        } => {
            if let Some(n) = threads {
                rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global()
                    .context("configuring the worker pool")?;
            }
            if seed.is_some() {
                log::info!("--seed is ignored: all methods are deterministic");
            }
            run(&common.config, &out)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn run(config_path: &Path, out: &Path) -> Result<u8> {
    let start = Instant::now();
    let text = read(config_path)?;
    let parsed = config::ExperimentConfig::parse(&text);
    let (task, prefix) = match &parsed {
        Ok(c) => (c.task.to_string(), c.prefix()),
        Err(_) => ("unknown".to_string(), "invalid-config".to_string()),
    };
    let mut report = RunReport {
        task,
        config: config_path.display().to_string(),
        status: "ok",
        failure: None,
        diagnostics: Vec::new(),
        wall_seconds: 0.0,
        error_estimates: BTreeMap::new(),
        verdicts: BTreeMap::new(),
        summary: BTreeMap::new(),
        files: Vec::new(),
    };
    let base = out.join(&prefix);
    let artifact = |suffix: &str| PathBuf::from(format!("{}.{suffix}", base.display()));
    if let Some(dir) = artifact("x").parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }

    let validated = parsed.and_then(|c| c.validate());
    let code = match validated {
        Err(diags) => {
            report.status = "validation-error";
            report.failure = Some(format!("{} validation error(s)", diags.len()));
            for d in &diags {
                eprintln!("{d}");
            }
            report.diagnostics = diags;
            2
        }
        Ok(cfg) => match tasks::run(&cfg) {
            Err(e) => {
                let code = tasks::exit_code(&e);
                report.status = if code == 3 {
                    "numerical-failure"
                } else {
                    "validation-error"
                };
                report.failure = Some(e.to_string());
                eprintln!("{}: {e}", report.status);
                code
            }
            Ok(outcome) => {
                for (suffix, body) in &outcome.files {
                    let path = artifact(suffix);
                    std::fs::write(&path, body)
                        .with_context(|| format!("writing {}", path.display()))?;
                    report.files.push(path.display().to_string());
                }
                report.summary = outcome.summary;
                report.error_estimates = outcome.error_estimates;
                report.verdicts = outcome.verdicts;
                0
            }
        },
    };
    report.wall_seconds = start.elapsed().as_secs_f64();
    let report_path = artifact("report.json");
    let mut body = serde_json::to_string_pretty(&report)?;
    body.push('\n');
    std::fs::write(&report_path, body)
        .with_context(|| format!("writing {}", report_path.display()))?;

    print_summary(&report, &report_path);
    Ok(code)
}

fn print_summary(report: &RunReport, path: &Path) {
    println!("task      {}", report.task);
    println!("status    {}", report.status);
    if let Some(f) = &report.failure {
        println!("failure   {f}");
    }
    for (k, v) in &report.summary {
        println!("  {k:<28} {v}");
    }
    for (k, v) in &report.verdicts {
        println!(
            "  verdict {k:<20} {}",
            v.get("tag").and_then(Value::as_str).unwrap_or("?")
        );
    }
    for (k, v) in &report.error_estimates {
        println!("  error   {k:<20} {v:.3e}");
    }
    println!("wall time {:.2} s", report.wall_seconds);
    for f in &report.files {
        println!("wrote     {f}");
    }
    println!("report    {}", path.display());
}
