//! Build-tool abstraction: compile generated tests, run them, and measure
//! coverage and mutation score.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::source_model::ProjectModel;

pub mod maven;
pub mod reports;
pub mod simulated;

pub use maven::{MavenConfig, MavenToolchain};
pub use simulated::{SimulatedToolchain, SimulatorScript};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DiagnosticKind {
    #[default]
    CompileError,
    NameMismatch,
    ImportError,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub file: PathBuf,
    /// 1-based (line, column).
    pub span: Option<(usize, usize)>,
    pub kind: DiagnosticKind,
    pub message: String,
    pub attributed_test: Option<String>,
}

impl Diagnostic {
    pub fn render(&self) -> String {
        match self.span {
            Some((line, col)) => format!("{}:{line}:{col}: {}", self.file.display(), self.message),
            None => format!("{}: {}", self.file.display(), self.message),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestStatus {
    Passed,
    Failed,
    NotCompiled,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TestId {
    pub file: PathBuf,
    /// Dotted path of the test method, e.g. `FooTest.Inner.testBar`.
    pub name: String,
}

impl fmt::Display for TestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestVerdict {
    pub test_id: TestId,
    pub status: TestStatus,
    pub failure_message: Option<String>,
}

impl TestVerdict {
    pub fn render(&self) -> String {
        format!(
            "{} FAILED: {}",
            self.test_id,
            self.failure_message.as_deref().unwrap_or("(no message)")
        )
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageSnapshot {
    pub lines_total: u64,
    pub lines_covered: u64,
    pub branches_total: u64,
    pub branches_covered: u64,
    /// `qualified#signature` → (covered, total) branches. Constructors use
    /// `<init>(..)` signatures.
    pub per_method_branches: BTreeMap<String, (u32, u32)>,
    /// `qualified#signature` → (covered, total) lines.
    pub per_method_lines: BTreeMap<String, (u32, u32)>,
}

impl CoverageSnapshot {
    pub fn line_ratio(&self) -> Option<f64> {
        ratio(self.lines_covered, self.lines_total)
    }

    pub fn branch_ratio(&self) -> Option<f64> {
        ratio(self.branches_covered, self.branches_total)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MutationSnapshot {
    pub mutants_total: u64,
    pub mutants_killed: u64,
}

impl MutationSnapshot {
    pub fn score(&self) -> Option<f64> {
        ratio(self.mutants_killed, self.mutants_total)
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// A generated test file, path relative to the project root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestFile {
    pub path: PathBuf,
    pub source: String,
}

impl TestFile {
    /// File name without extension; the expected public class name.
    pub fn stem(&self) -> String {
        self.path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }
}

#[derive(Debug, Error)]
pub enum ToolchainError {
    #[error("toolchain environment problem: {0}")]
    Environment(String),
    #[error("{what} timed out after {secs} s")]
    Timeout { what: String, secs: u64 },
    #[error("test runner crashed: {0}")]
    Infrastructure(String),
    #[error("coverage unavailable: {0}")]
    CoverageUnavailable(String),
    #[error("simulator desync: {0}")]
    Desync(String),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Isolated scratch copy of a project. Operations on one workspace are
/// serialized through [`Workspace::lock`].
#[derive(Debug)]
pub struct Workspace {
    pub label: String,
    pub root: Option<PathBuf>,
    lock: Mutex<()>,
    _dir: Option<tempfile::TempDir>,
}

impl Workspace {
    pub fn virtual_workspace(label: &str) -> Self {
        Self {
            label: label.to_string(),
            root: None,
            lock: Mutex::new(()),
            _dir: None,
        }
    }

    pub fn on_disk(label: &str, dir: tempfile::TempDir) -> Self {
        Self {
            label: label.to_string(),
            root: Some(dir.path().to_path_buf()),
            lock: Mutex::new(()),
            _dir: Some(dir),
        }
    }

    pub fn lock(&self) -> MutexGuard<'_, ()> {
        self.lock.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn path(&self) -> Option<&Path> {
        self.root.as_deref()
    }
}

pub trait Toolchain: Send + Sync {
    fn prepare(&self, project: &ProjectModel, label: &str) -> Result<Workspace, ToolchainError>;
    fn compile(&self, ws: &Workspace, files: &[TestFile]) -> Result<Vec<Diagnostic>, ToolchainError>;
    fn run_tests(&self, ws: &Workspace, files: &[TestFile]) -> Result<Vec<TestVerdict>, ToolchainError>;
    fn coverage(&self, ws: &Workspace, files: &[TestFile]) -> Result<CoverageSnapshot, ToolchainError>;
    fn mutation_score(
        &self,
        ws: &Workspace,
        files: &[TestFile],
    ) -> Result<MutationSnapshot, ToolchainError>;
}
