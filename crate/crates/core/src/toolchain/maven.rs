//! Maven + JUnit 5 + JaCoCo + PIT adapter. Each workspace is a private copy
//! of the project without its existing tests and build output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use walkdir::WalkDir;

use super::reports::{parse_jacoco, parse_javac_output, parse_pit, parse_surefire};
use super::{
    CoverageSnapshot, Diagnostic, DiagnosticKind, MutationSnapshot, TestFile, TestId,
    TestVerdict, Toolchain, ToolchainError, Workspace,
};
use crate::lang::LanguageAdapter;
use crate::source_model::ProjectModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MavenConfig {
    pub mvn: String,
    pub timeout_secs: u64,
    pub test_timeout_secs: u64,
    pub extra_args: Vec<String>,
    pub jacoco_plugin: String,
    pub pit_plugin: String,
}

impl Default for MavenConfig {
    fn default() -> Self {
        Self {
            mvn: "mvn".into(),
            timeout_secs: 300,
            test_timeout_secs: 60,
            extra_args: vec!["-B".into(), "-q".into()],
            jacoco_plugin: "org.jacoco:jacoco-maven-plugin:0.8.12".into(),
            pit_plugin: "org.pitest:pitest-maven:1.16.1".into(),
        }
    }
}

pub struct MavenToolchain {
    config: MavenConfig,
    adapter: Box<dyn LanguageAdapter>,
    project_root: PathBuf,
}

struct Output {
    success: bool,
    text: String,
}

impl MavenToolchain {
    pub fn new(config: MavenConfig, adapter: Box<dyn LanguageAdapter>, project_root: &Path) -> Self {
        Self {
            config,
            adapter,
            project_root: project_root.to_path_buf(),
        }
    }

    fn root<'a>(&self, ws: &'a Workspace) -> Result<&'a Path, ToolchainError> {
        ws.path()
            .ok_or_else(|| ToolchainError::Environment("workspace has no directory".into()))
    }

    fn install(&self, root: &Path, files: &[TestFile]) -> Result<(), ToolchainError> {
        let tests = root.join("src/test");
        if tests.exists() {
            std::fs::remove_dir_all(&tests).map_err(|source| ToolchainError::Io {
                path: tests.clone(),
                source,
            })?;
        }
        let target = root.join("target");
        if target.exists() {
            let _ = std::fs::remove_dir_all(&target);
        }
        for f in files {
            let path = root.join(&f.path);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(|source| ToolchainError::Io {
                    path: parent.to_path_buf(),
                    source,
                })?;
            }
            std::fs::write(&path, &f.source).map_err(|source| ToolchainError::Io { path, source })?;
        }
        Ok(())
    }

    fn mvn(&self, root: &Path, what: &str, args: &[String]) -> Result<Output, ToolchainError> {
        let log_path = root.join(".testgen-mvn.log");
        let log = std::fs::File::create(&log_path).map_err(|source| ToolchainError::Io {
            path: log_path.clone(),
            source,
        })?;
        let err_log = log.try_clone().map_err(|source| ToolchainError::Io {
            path: log_path.clone(),
            source,
        })?;
        let mut child = Command::new(&self.config.mvn)
            .args(&self.config.extra_args)
            .args(args)
            .current_dir(root)
            .stdin(Stdio::null())
            .stdout(log)
            .stderr(err_log)
            .spawn()
            .map_err(|e| {
                ToolchainError::Environment(format!("cannot run `{}`: {e}", self.config.mvn))
            })?;
        let started = Instant::now();
        let limit = Duration::from_secs(self.config.timeout_secs);
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) if started.elapsed() >= limit => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(ToolchainError::Timeout {
                        what: what.to_string(),
                        secs: self.config.timeout_secs,
                    });
                }
                Ok(None) => std::thread::sleep(Duration::from_millis(100)),
                Err(e) => return Err(ToolchainError::Infrastructure(e.to_string())),
            }
        };
        let text = std::fs::read_to_string(&log_path).unwrap_or_default();
        Ok(Output {
            success: status.success(),
            text,
        })
    }

    fn timeout_property(&self) -> String {
        format!(
            "-Djunit.jupiter.execution.timeout.default={}s",
            self.config.test_timeout_secs
        )
    }

    /// Maps `FooTest.Inner` back to the file declaring top-level `FooTest`.
    fn file_of(&self, files: &[TestFile], class_path: &str) -> Option<PathBuf> {
        let top = class_path.split('.').next().unwrap_or(class_path);
        files
            .iter()
            .find(|f| self.adapter.outline(&f.source).find_type(top).is_some())
            .map(|f| f.path.clone())
    }
}

fn copy_project(from: &Path, to: &Path, adapter: &dyn LanguageAdapter) -> Result<(), ToolchainError> {
    let walker = WalkDir::new(from).sort_by_file_name().into_iter().filter_entry(|e| {
        let rel = e.path().strip_prefix(from).unwrap_or(e.path());
        e.depth() == 0
            || !(e.file_name().to_string_lossy().starts_with('.') || adapter.is_excluded(rel))
    });
    for entry in walker {
        let entry = entry.map_err(|e| ToolchainError::Io {
            path: from.to_path_buf(),
            source: e.into(),
        })?;
        let rel = entry.path().strip_prefix(from).unwrap_or(entry.path());
        let dest = to.join(rel);
        let io = |source| ToolchainError::Io {
            path: entry.path().to_path_buf(),
            source,
        };
        if entry.file_type().is_dir() {
            std::fs::create_dir_all(&dest).map_err(io)?;
        } else if entry.file_type().is_file() {
            std::fs::copy(entry.path(), &dest).map_err(io)?;
        }
    }
    Ok(())
}

impl Toolchain for MavenToolchain {
    fn prepare(&self, project: &ProjectModel, label: &str) -> Result<Workspace, ToolchainError> {
        let root = if project.root_path.as_os_str().is_empty() {
            &self.project_root
        } else {
            &project.root_path
        };
        if !root.join("pom.xml").is_file() {
            return Err(ToolchainError::Environment(format!(
                "{} has no pom.xml",
                root.display()
            )));
        }
        let dir = tempfile::Builder::new()
            .prefix("testgen-ws-")
            .tempdir()
            .map_err(|source| ToolchainError::Io {
                path: std::env::temp_dir(),
                source,
            })?;
        copy_project(root, dir.path(), self.adapter.as_ref())?;
        Ok(Workspace::on_disk(label, dir))
    }

    fn compile(&self, ws: &Workspace, files: &[TestFile]) -> Result<Vec<Diagnostic>, ToolchainError> {
        let _guard = ws.lock();
        let root = self.root(ws)?;
        self.install(root, files)?;
        let out = self.mvn(root, "compile", &["test-compile".into()])?;
        if out.success {
            return Ok(Vec::new());
        }
        let diagnostics = parse_javac_output(&out.text, root);
        if !diagnostics.is_empty() {
            return Ok(diagnostics);
        }
        // build failed without a located error: condemn every file
        Ok(files
            .iter()
            .map(|f| Diagnostic {
                file: f.path.clone(),
                span: None,
                kind: DiagnosticKind::Other,
                message: out.text.lines().rev().take(20).collect::<Vec<_>>().join("\n"),
                attributed_test: None,
            })
            .collect())
    }

    fn run_tests(&self, ws: &Workspace, files: &[TestFile]) -> Result<Vec<TestVerdict>, ToolchainError> {
        let _guard = ws.lock();
        let root = self.root(ws)?;
        if files.is_empty() {
            return Ok(Vec::new());
        }
        self.install(root, files)?;
        let out = self.mvn(
            root,
            "test run",
            &[
                "test".into(),
                "-Dmaven.test.failure.ignore=true".into(),
                self.timeout_property(),
            ],
        )?;
        let reports = root.join("target/surefire-reports");
        let mut cases = Vec::new();
        if let Ok(dir) = std::fs::read_dir(&reports) {
            let mut paths: Vec<PathBuf> = dir.flatten().map(|e| e.path()).collect();
            paths.sort();
            for p in paths {
                let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
                if name.starts_with("TEST-") && name.ends_with(".xml") {
                    let xml = std::fs::read_to_string(&p)
                        .map_err(|source| ToolchainError::Io { path: p.clone(), source })?;
                    cases.extend(
                        parse_surefire(&xml)
                            .map_err(|e| ToolchainError::Infrastructure(e.to_string()))?,
                    );
                }
            }
        }
        if cases.is_empty() && !out.success {
            return Err(ToolchainError::Infrastructure(
                out.text.lines().rev().take(20).collect::<Vec<_>>().join("\n"),
            ));
        }
        let mut merged: BTreeMap<TestId, TestVerdict> = BTreeMap::new();
        for case in cases {
            let Some(file) = self.file_of(files, &case.class_path) else {
                continue;
            };
            let id = TestId {
                file,
                name: format!("{}.{}", case.class_path, case.method),
            };
            let entry = merged.entry(id.clone()).or_insert(TestVerdict {
                test_id: id,
                status: case.status,
                failure_message: case.message.clone(),
            });
            if case.status != super::TestStatus::Passed {
                entry.status = case.status;
                entry.failure_message.get_or_insert(case.message.unwrap_or_default());
            }
        }
        Ok(merged.into_values().collect())
    }

    fn coverage(&self, ws: &Workspace, files: &[TestFile]) -> Result<CoverageSnapshot, ToolchainError> {
        let _guard = ws.lock();
        let root = self.root(ws)?;
        self.install(root, files)?;
        let jacoco = &self.config.jacoco_plugin;
        let out = self.mvn(
            root,
            "coverage",
            &[
                format!("{jacoco}:prepare-agent"),
                "test".into(),
                format!("{jacoco}:report"),
                "-Dmaven.test.failure.ignore=true".into(),
                self.timeout_property(),
            ],
        )?;
        let report = root.join("target/site/jacoco/jacoco.xml");
        let xml = std::fs::read_to_string(&report).map_err(|e| {
            ToolchainError::CoverageUnavailable(format!(
                "{} not produced ({e}); build success={}",
                report.display(),
                out.success
            ))
        })?;
        parse_jacoco(&xml).map_err(|e| ToolchainError::CoverageUnavailable(e.to_string()))
    }

    fn mutation_score(
        &self,
        ws: &Workspace,
        files: &[TestFile],
    ) -> Result<MutationSnapshot, ToolchainError> {
        let _guard = ws.lock();
        let root = self.root(ws)?;
        self.install(root, files)?;
        let out = self.mvn(
            root,
            "mutation analysis",
            &[
                "test-compile".into(),
                format!("{}:mutationCoverage", self.config.pit_plugin),
                "-DoutputFormats=XML".into(),
                "-DtimestampedReports=false".into(),
            ],
        )?;
        let report = root.join("target/pit-reports/mutations.xml");
        let xml = std::fs::read_to_string(&report).map_err(|e| {
            ToolchainError::Infrastructure(format!(
                "{} not produced ({e}); build success={}",
                report.display(),
                out.success
            ))
        })?;
        parse_pit(&xml).map_err(|e| ToolchainError::Infrastructure(e.to_string()))
    }
}
