use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use testgen_core::config::{BackendKind, ConfigError, Overrides, RunConfig, API_KEY_ENV};
use testgen_core::metrics::emit_report;
use testgen_core::metrics::report::{build_report, render_markdown};
use testgen_core::orchestrator::GranularityMode;
use testgen_core::runner::{execute, verify_replay, RunError, RunFile};
use testgen_core::source_model::discover_units;

#[derive(Parser)]
#[command(name = "testgen", version, about = "Generate unit tests with an LLM and compare granularities")]
struct Cli {
    /// Log filter, e.g. `info` or `testgen_core=debug`.
    #[arg(long, global = true, default_value = "info")]
    log_level: String,
    #[arg(long, global = true, value_enum, default_value_t = LogFormat::Json)]
    log_format: LogFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum LogFormat {
    Json,
    Text,
}

#[derive(clap::Args)]
struct GenerateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// class_level, method_level, combined or hybrid.
    #[arg(long)]
    mode: Option<GranularityMode>,
    #[arg(long)]
    project: Option<PathBuf>,
    /// live or replay.
    #[arg(long)]
    backend: Option<BackendKind>,
    #[arg(long)]
    model: Option<String>,
    /// Transcript answered by the replay backend.
    #[arg(long)]
    transcript: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one strategy end to end and write its output directory.
    Generate(GenerateArgs),
    /// Compare finished runs: tables per mode plus significance tests.
    Report {
        #[arg(required = true)]
        run_dirs: Vec<PathBuf>,
        #[arg(long, default_value = "report")]
        out: PathBuf,
    },
    /// Re-execute a run against its transcript and compare the outputs.
    ReplayVerify { run_dir: PathBuf },
    /// Print the discovered classes and methods as JSON.
    Units {
        #[arg(long)]
        project: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn init_logging(cli: &Cli) {
    let filter = tracing_subscriber::EnvFilter::try_new(&cli.log_level)
        .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new("info"));
    let builder = tracing_subscriber::fmt()
        .with_env_filter(filter)
        .with_writer(std::io::stderr);
    match cli.log_format {
        LogFormat::Json => builder.json().init(),
        LogFormat::Text => builder.init(),
    }
}

/// Writes to stdout; a closed pipe (e.g. `| head`) is not an error.
fn emit(text: &str) -> anyhow::Result<()> {
    let mut stdout = std::io::stdout().lock();
    match stdout.write_all(text.as_bytes()).and_then(|()| stdout.flush()) {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other.context("writing to stdout"),
    }
}

fn generate(args: GenerateArgs) -> anyhow::Result<ExitCode> {
    let config = RunConfig::load(
        args.config.as_deref(),
        Overrides {
            mode: args.mode,
            project: args.project,
            backend: args.backend,
            model: args.model,
            transcript: args.transcript,
            workers: args.workers,
            output_dir: args.out,
        },
    )?;
    let key = std::env::var(API_KEY_ENV).ok();
    let out = execute(&config, key.as_deref())?;
    let m = &out.file.metrics;
    let mut text = format!(
        "{} on {}: {} requests, {} tests generated, {} passing; output in {}\n",
        out.file.mode,
        out.file.project,
        out.file.ledger.total_requests,
        m.n_generated,
        out.file.ledger.passing_tests,
        out.dir.display()
    );
    for (unit, reason) in &out.file.aborted_units {
        text.push_str(&format!("aborted {unit}: {reason}\n"));
    }
    emit(&text)?;
    Ok(ExitCode::SUCCESS)
}

fn report(run_dirs: Vec<PathBuf>, out: PathBuf) -> anyhow::Result<ExitCode> {
    let records = run_dirs
        .iter()
        .map(|d| RunFile::load(d).map(|f| f.record()))
        .collect::<Result<Vec<_>, _>>()?;
    let files = emit_report(&records, &out).with_context(|| format!("writing report to {}", out.display()))?;
    emit(&format!(
        "{}\nwrote {}, {}, {}\n",
        render_markdown(&build_report(&records)),
        files.json.display(),
        files.markdown.display(),
        files.csv.display()
    ))?;
    Ok(ExitCode::SUCCESS)
}

fn replay_verify(run_dir: PathBuf) -> anyhow::Result<ExitCode> {
    let divergences = verify_replay(&run_dir)?;
    match divergences.first() {
        None => {
            emit(&format!(
                "replay of {} reproduced every artifact and the ledger\n",
                run_dir.display()
            ))?;
            Ok(ExitCode::SUCCESS)
        }
        Some(d) => {
            let mut text = format!("first divergence in {}:\n{}\n", d.path, d.detail);
            if divergences.len() > 1 {
                text.push_str(&format!("({} more)\n", divergences.len() - 1));
            }
            emit(&text)?;
            Ok(ExitCode::FAILURE)
        }
    }
}

fn units(project: Option<PathBuf>, config: Option<PathBuf>) -> anyhow::Result<ExitCode> {
    let config = RunConfig::load(
        config.as_deref(),
        Overrides {
            project,
            ..Overrides::default()
        },
    )?;
    let model = discover_units(config.project_root(), &config.adapter.language)?;
    emit(&(model.to_units_json() + "\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn is_usage(e: &anyhow::Error) -> bool {
    e.downcast_ref::<ConfigError>().is_some()
        || e.downcast_ref::<RunError>().is_some_and(RunError::is_usage)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_logging(&cli);
    let result = match cli.command {
        Command::Generate(args) => generate(args),
        Command::Report { run_dirs, out } => report(run_dirs, out),
        Command::ReplayVerify { run_dir } => replay_verify(run_dir),
        Command::Units { project, config } => units(project, config),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_usage(&e) { 2 } else { 1 })
        }
    }
}
