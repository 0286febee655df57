//! Run configuration: a TOML file with `[project]`, `[backend]`, `[prompts]`,
//! `[limits]` and `[adapter]` sections, overridden by command-line flags.
//!
//! Relative paths in a file are resolved against the file's directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::DEFAULT_TEMPERATURE;
use crate::orchestrator::{GranularityMode, Limits};
use crate::prompts::{NamingScheme, PromptTemplates, DEFAULT_DIAGNOSTIC_CAP};
use crate::toolchain::maven::MavenConfig;

pub const API_KEY_ENV: &str = "TESTGEN_API_KEY";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config {path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Live,
    Replay,
}

impl std::str::FromStr for BackendKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "live" => Ok(BackendKind::Live),
            "replay" => Ok(BackendKind::Replay),
            other => Err(format!("unknown backend `{other}` (live, replay)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ToolchainKind {
    Maven,
    Simulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjectSection {
    pub root: Option<PathBuf>,
    pub mode: GranularityMode,
    /// Not stored in `run.json`.
    #[serde(skip_serializing)]
    pub output_dir: Option<PathBuf>,
}

impl Default for ProjectSection {
    fn default() -> Self {
        Self {
            root: None,
            mode: GranularityMode::Hybrid,
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackendSection {
    pub kind: BackendKind,
    pub model: String,
    pub endpoint: String,
    /// Recorded transcript answered by the replay backend.
    pub transcript: Option<PathBuf>,
    pub temperature: f64,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub timeout_secs: u64,
    pub system_message: Option<String>,
}

impl Default for BackendSection {
    fn default() -> Self {
        Self {
            kind: BackendKind::Live,
            model: "gpt-4o-mini".into(),
            endpoint: "https://api.openai.com/v1".into(),
            transcript: None,
            temperature: DEFAULT_TEMPERATURE,
            max_retries: crate::llm::DEFAULT_MAX_RETRIES,
            backoff_ms: 500,
            timeout_secs: 120,
            system_message: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptSection {
    pub templates: PromptTemplates,
    pub naming: NamingScheme,
    pub diagnostic_cap: usize,
}

impl Default for PromptSection {
    fn default() -> Self {
        Self {
            templates: PromptTemplates::default(),
            naming: NamingScheme::default(),
            diagnostic_cap: DEFAULT_DIAGNOSTIC_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdapterSection {
    pub language: String,
    pub toolchain: ToolchainKind,
    pub simulator_script: Option<PathBuf>,
    pub maven: MavenConfig,
}

impl Default for AdapterSection {
    fn default() -> Self {
        Self {
            language: "java".into(),
            toolchain: ToolchainKind::Maven,
            simulator_script: None,
            maven: MavenConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub project: ProjectSection,
    pub backend: BackendSection,
    pub prompts: PromptSection,
    pub limits: Limits,
    pub adapter: AdapterSection,
}

/// Command-line values; each one beats the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub mode: Option<GranularityMode>,
    pub project: Option<PathBuf>,
    pub backend: Option<BackendKind>,
    pub model: Option<String>,
    pub transcript: Option<PathBuf>,
    pub workers: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str, origin: &Path) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: origin.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Defaults, then the file (if any), then `overrides`; then validation.
    pub fn load(file: Option<&Path>, overrides: Overrides) -> Result<Self, ConfigError> {
        let mut config = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                    path: path.to_path_buf(),
                    source,
                })?;
                let mut c = Self::from_toml(&text, path)?;
                let base = path.parent().unwrap_or(Path::new("."));
                resolve(base, &mut c.project.root);
                resolve(base, &mut c.project.output_dir);
                resolve(base, &mut c.backend.transcript);
                resolve(base, &mut c.adapter.simulator_script);
                c
            }
            None => Self::default(),
        };
        config.apply(overrides);
        config.validate()?;
        Ok(config)
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(m) = o.mode {
            self.project.mode = m;
        }
        if let Some(p) = o.project {
            self.project.root = Some(p);
        }
        if let Some(b) = o.backend {
            self.backend.kind = b;
        }
        if let Some(m) = o.model {
            self.backend.model = m;
        }
        if let Some(t) = o.transcript {
            self.backend.transcript = Some(t);
        }
        if let Some(w) = o.workers {
            self.limits.worker_bound = w;
        }
        if let Some(d) = o.output_dir {
            self.project.output_dir = Some(d);
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.project.root.is_none() {
            return bad("no project root (set [project] root or --project)".into());
        }
        if self.limits.worker_bound == 0 {
            return bad("worker bound must be at least 1".into());
        }
        if !(0.0..=2.0).contains(&self.backend.temperature) {
            return bad(format!("temperature {} outside [0, 2]", self.backend.temperature));
        }
        if self.backend.kind == BackendKind::Replay && self.backend.transcript.is_none() {
            return bad("the replay backend needs a transcript (--transcript)".into());
        }
        if self.adapter.toolchain == ToolchainKind::Simulated && self.adapter.simulator_script.is_none() {
            return bad("the simulated toolchain needs [adapter] simulator_script".into());
        }
        if self.prompts.diagnostic_cap < 16 {
            return bad("diagnostic cap must be at least 16 characters".into());
        }
        self.prompts
            .templates
            .validate()
            .and_then(|()| self.prompts.naming.validate())
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        crate::lang::adapter_for(&self.adapter.language).map_err(|e| ConfigError::Invalid(e.to_string()))?;
        Ok(())
    }

    pub fn project_root(&self) -> &Path {
        self.project.root.as_deref().expect("validated")
    }

    pub fn output_dir(&self) -> PathBuf {
        self.project
            .output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("testgen-out"))
    }
}
