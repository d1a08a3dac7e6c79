//! `regge <config.toml> [--set key=value ...] [--out dir] [--verbose]`
//!
//! Exit status: 0 success, 1 configuration error, 2 numerical failure,
//! 3 I/O error.

mod config;
mod error;
mod output;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use toml::{Table, Value};

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(name = "regge", version, about = "Regge-pole analysis of coupled-channel scattering")]
struct Cli {
    /// TOML run configuration.
    config: PathBuf,
    /// Override a configuration value, e.g. `--set numerics.r_match=600`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Output directory (replaces `output.directory`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(short, long)]
    verbose: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = if cli.verbose { log::LevelFilter::Info } else { log::LevelFilter::Warn };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("regge: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&cli.config).map_err(|e| CliError::io(&cli.config, e))?;
    let mut config = config::parse(&text, &cli.set)?;
    if let Some(dir) = &cli.out {
        config.output.directory = dir.clone();
    }
    let dir = config.output.directory.clone();
    std::fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;

    let result = tasks::run(&config);
    let (files, report, failure) = match result {
        Ok(out) => (out.files, out.report, out.failure),
        // Configuration problems found while building the model carry no
        // artifacts worth keeping.
        Err(e @ CliError::Config { .. }) => return Err(e),
        Err(e) => (Vec::new(), Table::new(), Some(e)),
    };

    let mut written = Vec::new();
    for (name, bytes) in &files {
        output::write_atomic(&dir, name, bytes)?;
        written.push(Value::String(name.clone()));
    }
    if let Some(err) = &failure {
        let name = format!("{}diagnostics.toml", config.output.prefix);
        output::write_atomic(&dir, &name, diagnostics(err).as_bytes())?;
        written.push(Value::String(name));
    }
    let manifest = manifest(cli, &config, report, written, failure.as_ref());
    output::write_atomic(&dir, &format!("{}manifest.toml", config.output.prefix), manifest.as_bytes())?;
    match failure {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn diagnostics(err: &CliError) -> String {
    let mut t = Table::new();
    t.insert("exit_code".into(), Value::Integer(err.exit_code().into()));
    t.insert("message".into(), Value::String(err.to_string()));
    if let CliError::Numerical { stage, source } = err {
        t.insert("stage".into(), Value::String(stage.clone()));
        // The debug form keeps every payload field, e.g. the root-finder history.
        t.insert("detail".into(), Value::String(format!("{source:?}")));
    }
    let mut doc = Table::new();
    doc.insert("failure".into(), Value::Table(t));
    compact_floats(&toml::to_string(&doc).expect("diagnostics serialize"))
}

fn manifest(cli: &Cli, config: &RunConfig, report: Table, files: Vec<Value>, failure: Option<&CliError>) -> String {
    let mut run = Table::new();
    run.insert("program".into(), Value::String("regge".into()));
    run.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
    run.insert("core_version".into(), Value::String(regge_core::VERSION.into()));
    run.insert("config_file".into(), Value::String(display(&cli.config)));
    run.insert("overrides".into(), Value::Array(cli.set.iter().cloned().map(Value::String).collect()));
    run.insert("task".into(), Value::String(config.task.name().into()));
    run.insert("status".into(), Value::String(if failure.is_some() { "failed" } else { "ok" }.into()));
    run.insert("exit_code".into(), Value::Integer(failure.map_or(0, |e| e.exit_code().into())));
    run.insert("files".into(), Value::Array(files));

    let mut doc = Table::new();
    doc.insert("run".into(), Value::Table(run));
    doc.insert("config".into(), Value::try_from(config).expect("config serializes"));
    doc.insert("report".into(), Value::Table(report));
    compact_floats(&toml::to_string(&doc).expect("manifest serializes"))
}

/// The TOML writer spells floats out in full (`1e-300` becomes 300 digits);
/// rewrite long scalar floats in exponent form.
fn compact_floats(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for line in text.lines() {
        match line.split_once(" = ") {
            Some((key, value)) if value.len() > 12 && value.contains('.') && value.parse::<f64>().is_ok() => {
                let x: f64 = value.parse().expect("checked");
                out.push_str(&format!("{key} = {x:e}"));
            }
            _ => out.push_str(line),
        }
        out.push('\n');
    }
    out
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
