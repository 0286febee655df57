//! End-to-end execution of a configured run, its output directory, and
//! replay verification.
//!
//! Output layout:
//! ```text
//! <out>/run.json                      ledger, metrics, effective config
//! <out>/transcript.jsonl              every LLM exchange, (session, seq) order
//! <out>/suite/<test path>             final passing suite
//! <out>/units/<unit>/sanitizer_report.json
//! <out>/units/<unit>/files/<test path> surviving generated files
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::config::{BackendKind, ConfigError, RunConfig, ToolchainKind};
use crate::lang::{adapter_for, LangError};
use crate::llm::transcript::{hex_digest, read_transcript, TranscriptError};
use crate::llm::{
    ChatBackend, GatewayConfig, LiveBackend, LlmError, LlmGateway, ReplayBackend,
    TranscriptRecorder,
};
use crate::metrics::report::RunRecord;
use crate::metrics::{SuiteMetrics, Totals};
use crate::orchestrator::{
    workspace_label, GenerationRun, GranularityMode, OrchestratorError, Orchestrator, RunLedger,
    UnitStats,
};
use crate::prompts::PromptFactory;
use crate::source_model::{discover_with, DiscoveryError};
use crate::toolchain::maven::MavenToolchain;
use crate::toolchain::simulated::{SimulatedToolchain, SimulatorScript};
use crate::toolchain::{CoverageSnapshot, MutationSnapshot, Toolchain, ToolchainError};

pub const RUN_FILE: &str = "run.json";
pub const TRANSCRIPT_FILE: &str = "transcript.jsonl";

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Discovery(#[from] DiscoveryError),
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error(transparent)]
    Toolchain(#[from] ToolchainError),
    #[error(transparent)]
    Orchestrator(#[from] OrchestratorError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Transcript(#[from] TranscriptError),
    #[error("missing API key: set {0}")]
    MissingApiKey(&'static str),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("corrupt {path}: {message}")]
    Corrupt { path: PathBuf, message: String },
}

impl RunError {
    /// Bad configuration or invocation, as opposed to an environment or
    /// execution failure.
    pub fn is_usage(&self) -> bool {
        matches!(self, RunError::Config(_) | RunError::MissingApiKey(_))
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Contents of `run.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunFile {
    pub project: String,
    pub mode: GranularityMode,
    pub model: String,
    pub config: RunConfig,
    pub ledger: RunLedger,
    pub metrics: SuiteMetrics,
    pub totals: Totals,
    pub coverage: Option<CoverageSnapshot>,
    pub mutation: Option<MutationSnapshot>,
    pub hybrid_fallback: bool,
    pub aborted_units: BTreeMap<String, String>,
    pub units: BTreeMap<String, UnitStats>,
    pub measurement_notes: Vec<String>,
    pub suite_conflicts: Vec<PathBuf>,
    pub transport_failures: u64,
    pub transcript_sha256: String,
}

impl RunFile {
    pub fn record(&self) -> RunRecord {
        RunRecord {
            project: self.project.clone(),
            mode: self.mode.to_string(),
            metrics: self.metrics.clone(),
            totals: self.totals,
            hybrid_fallback: self.hybrid_fallback,
        }
    }

    pub fn load(run_dir: &Path) -> Result<Self, RunError> {
        let path = run_dir.join(RUN_FILE);
        let text = std::fs::read_to_string(&path).map_err(io_err(&path))?;
        serde_json::from_str(&text).map_err(|e| RunError::Corrupt {
            path,
            message: e.to_string(),
        })
    }
}

pub struct RunOutput {
    pub dir: PathBuf,
    pub run: GenerationRun,
    pub file: RunFile,
}

fn build_toolchain(config: &RunConfig) -> Result<Box<dyn Toolchain>, RunError> {
    let adapter = adapter_for(&config.adapter.language)?;
    Ok(match config.adapter.toolchain {
        ToolchainKind::Simulated => {
            let script_path = config
                .adapter
                .simulator_script
                .as_deref()
                .expect("validated");
            Box::new(SimulatedToolchain::new(SimulatorScript::load(script_path)?, adapter))
        }
        ToolchainKind::Maven => Box::new(MavenToolchain::new(
            config.adapter.maven.clone(),
            adapter,
            config.project_root(),
        )),
    })
}

fn build_backend(config: &RunConfig, api_key: Option<&str>) -> Result<Box<dyn ChatBackend>, RunError> {
    Ok(match config.backend.kind {
        BackendKind::Replay => {
            let path = config.backend.transcript.as_deref().expect("validated");
            Box::new(ReplayBackend::new(read_transcript(path)?))
        }
        BackendKind::Live => {
            let key = api_key.ok_or(RunError::MissingApiKey(crate::config::API_KEY_ENV))?;
            Box::new(
                LiveBackend::new(
                    &config.backend.endpoint,
                    key.to_string(),
                    Duration::from_secs(config.backend.timeout_secs),
                )
                .map_err(|e| RunError::Toolchain(ToolchainError::Environment(e.to_string())))?,
            )
        }
    })
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), RunError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    std::fs::write(path, contents).map_err(io_err(path))
}

fn json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s.into_bytes()
}

/// Discovers the project, runs the configured mode and writes the output
/// directory. The transcript is always recorded.
pub fn execute(config: &RunConfig, api_key: Option<&str>) -> Result<RunOutput, RunError> {
    config.validate()?;
    let out = config.output_dir();
    let adapter = adapter_for(&config.adapter.language)?;
    let project = discover_with(config.project_root(), adapter.as_ref())?;
    tracing::info!(project = %project.name(), containers = project.containers.len(), methods = project.method_count(), "discovered");
    let toolchain = build_toolchain(config)?;
    // the replay source may be the transcript about to be rewritten, so it
    // is read before the recorder truncates anything
    let backend = build_backend(config, api_key)?;

    std::fs::create_dir_all(&out).map_err(io_err(&out))?;
    for sub in ["suite", "units"] {
        let p = out.join(sub);
        if p.exists() {
            std::fs::remove_dir_all(&p).map_err(io_err(&p))?;
        }
    }
    let transcript_path = out.join(TRANSCRIPT_FILE);
    let recorder = TranscriptRecorder::to_file(&transcript_path)?;
    let gateway = LlmGateway::new(
        backend,
        GatewayConfig {
            model: config.backend.model.clone(),
            temperature: config.backend.temperature,
            max_retries: config.backend.max_retries,
            backoff_base: match config.backend.kind {
                BackendKind::Replay => Duration::ZERO,
                BackendKind::Live => Duration::from_millis(config.backend.backoff_ms),
            },
            system_message: config.backend.system_message.clone(),
        },
    )?
    .with_recorder(recorder);
    let prompts = PromptFactory::new(
        config.prompts.templates.clone(),
        adapter.language_label(),
        adapter.framework_label(),
        config.prompts.diagnostic_cap,
    )
    .map_err(OrchestratorError::from)?;
    let orchestrator = Orchestrator::new(
        &gateway,
        toolchain.as_ref(),
        adapter.as_ref(),
        &prompts,
        config.prompts.naming.clone(),
        config.limits,
    )?;

    let result = orchestrator.run(&project, config.project.mode);
    let records = gateway
        .recorder()
        .expect("recorder attached")
        .finish()?;
    let run = result?;

    let bytes = std::fs::read(&transcript_path).map_err(io_err(&transcript_path))?;
    let file = RunFile {
        project: run.project.clone(),
        mode: run.mode,
        model: config.backend.model.clone(),
        config: config.clone(),
        ledger: run.ledger.clone(),
        metrics: run.metrics(),
        totals: run.totals(),
        coverage: run.coverage.clone(),
        mutation: run.mutation,
        hybrid_fallback: run.hybrid_fallback,
        aborted_units: run
            .units
            .iter()
            .filter_map(|(id, u)| u.artifact.aborted.clone().map(|r| (id.clone(), r)))
            .collect(),
        units: run.units.iter().map(|(id, u)| (id.clone(), u.stats)).collect(),
        measurement_notes: run.measurement_notes.clone(),
        suite_conflicts: run.suite_conflicts.clone(),
        transport_failures: records.iter().filter(|r| r.is_transport_failure()).count() as u64,
        transcript_sha256: hex_digest(&bytes),
    };

    for f in &run.suite {
        write_file(&out.join("suite").join(&f.path), f.source.as_bytes())?;
    }
    for (id, u) in &run.units {
        let dir = out.join("units").join(workspace_label(id));
        write_file(&dir.join("sanitizer_report.json"), &json(&u.artifact.report()))?;
        for f in &u.artifact.files {
            write_file(&dir.join("files").join(&f.path), f.source.as_bytes())?;
        }
    }
    write_file(&out.join(RUN_FILE), &json(&file))?;
    tracing::info!(
        mode = %run.mode,
        requests = run.ledger.total_requests,
        aborted = file.aborted_units.len(),
        out = %out.display(),
        "run complete"
    );
    Ok(RunOutput { dir: out, run, file })
}

/// First difference found by [`verify_replay`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Divergence {
    pub path: String,
    pub detail: String,
}

fn first_line_diff(a: &str, b: &str) -> String {
    for (i, (x, y)) in a.lines().zip(b.lines()).enumerate() {
        if x != y {
            return format!("line {}:\n- {x}\n+ {y}", i + 1);
        }
    }
    format!(
        "length differs: {} vs {} lines",
        a.lines().count(),
        b.lines().count()
    )
}

fn tree(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, RunError> {
    let mut files = BTreeMap::new();
    if !dir.exists() {
        return Ok(files);
    }
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| RunError::Io {
            path: dir.to_path_buf(),
            source: e.into(),
        })?;
        if entry.file_type().is_file() {
            let rel = entry
                .path()
                .strip_prefix(dir)
                .expect("under dir")
                .to_string_lossy()
                .replace('\\', "/");
            let bytes = std::fs::read(entry.path()).map_err(io_err(entry.path()))?;
            files.insert(rel, bytes);
        }
    }
    Ok(files)
}

/// `run.json` without the effective config, which legitimately differs
/// between the original run and its re-execution.
fn comparable_run_json(bytes: &[u8]) -> String {
    match serde_json::from_slice::<serde_json::Value>(bytes) {
        Ok(mut v) => {
            if let Some(o) = v.as_object_mut() {
                o.remove("config");
            }
            serde_json::to_string_pretty(&v).expect("value serializes")
        }
        Err(_) => String::from_utf8_lossy(bytes).into_owned(),
    }
}

/// Re-executes the run in `run_dir` against its own transcript and compares
/// the result. An empty list means the run reproduced exactly.
pub fn verify_replay(run_dir: &Path) -> Result<Vec<Divergence>, RunError> {
    let original = RunFile::load(run_dir)?;
    let transcript = run_dir.join(TRANSCRIPT_FILE);
    let bytes = std::fs::read(&transcript).map_err(io_err(&transcript))?;
    let digest = hex_digest(&bytes);
    if digest != original.transcript_sha256 {
        return Ok(vec![Divergence {
            path: TRANSCRIPT_FILE.into(),
            detail: format!(
                "sha256 {digest} does not match {} recorded in run.json",
                original.transcript_sha256
            ),
        }]);
    }

    let scratch = tempfile::tempdir().map_err(io_err(run_dir))?;
    let source = scratch.path().join("source.jsonl");
    std::fs::write(&source, &bytes).map_err(io_err(&source))?;
    let mut config = original.config.clone();
    config.backend.kind = BackendKind::Replay;
    config.backend.transcript = Some(source);
    config.project.output_dir = Some(scratch.path().join("out"));
    let replayed = match execute(&config, None) {
        Ok(r) => r,
        Err(RunError::Transcript(e)) => {
            return Ok(vec![Divergence {
                path: TRANSCRIPT_FILE.into(),
                detail: e.to_string(),
            }])
        }
        Err(RunError::Orchestrator(OrchestratorError::Llm(e @ LlmError::Desync { .. }))) => {
            return Ok(vec![Divergence {
                path: TRANSCRIPT_FILE.into(),
                detail: e.to_string(),
            }])
        }
        Err(e) => return Err(e),
    };

    let a = tree(run_dir)?;
    let b = tree(&replayed.dir)?;
    let mut divergences = Vec::new();
    for key in a.keys().chain(b.keys()).collect::<std::collections::BTreeSet<_>>() {
        let detail = match (a.get(key), b.get(key)) {
            (Some(x), Some(y)) if key == RUN_FILE => {
                let (x, y) = (comparable_run_json(x), comparable_run_json(y));
                (x != y).then(|| first_line_diff(&x, &y))
            }
            (Some(x), Some(y)) => (x != y).then(|| {
                first_line_diff(&String::from_utf8_lossy(x), &String::from_utf8_lossy(y))
            }),
            (Some(_), None) => Some("missing from the replayed run".into()),
            (None, Some(_)) => Some("only present in the replayed run".into()),
            (None, None) => None,
        };
        if let Some(detail) = detail {
            divergences.push(Divergence {
                path: key.clone(),
                detail,
            });
        }
    }
    if original.ledger != replayed.file.ledger {
        divergences.push(Divergence {
            path: RUN_FILE.into(),
            detail: format!(
                "ledger differs: {} vs {} requests",
                original.ledger.total_requests, replayed.file.ledger.total_requests
            ),
        });
    }
    Ok(divergences)
}
