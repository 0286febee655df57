//! Post-processing of generated test files: pruning what does not compile,
//! classifying failures and counting extra generated content.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::lang::{remove_spans, LanguageAdapter, MemberKind, TypeOutline};
use crate::toolchain::{
    TestFile, TestId, TestStatus, TestVerdict, Toolchain, ToolchainError, Workspace,
};

mod extra_content;
mod prune;

pub use extra_content::{detect_extra_content, ExtraContentStats};
pub use prune::{prune_non_compiling, prune_until_clean, PruneOutcome, DEFAULT_PRUNE_ROUNDS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RemovalKind {
    TestMethod,
    Helper,
    NestedType,
    HelperType,
    File,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Removal {
    pub file: std::path::PathBuf,
    pub kind: RemovalKind,
    pub target: String,
    pub tests_removed: u32,
    pub diagnostic: String,
}

/// Generated tests for one unit and what happened to them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TestSuiteArtifact {
    pub unit_id: String,
    pub files: Vec<TestFile>,
    pub per_test_verdicts: Vec<TestVerdict>,
    /// Test methods in the final LLM output, before any removal.
    pub n_generated: u32,
    /// Test methods pruned individually (or with their nested type).
    pub removed_non_compiling: u32,
    /// Test methods lost because their whole file was removed.
    pub removed_in_files: u32,
    pub removed_files: u32,
    pub removed_helpers: u32,
    pub removals: Vec<Removal>,
    pub extra_content: ExtraContentStats,
    /// Set when the unit could not be completed (backend unavailable,
    /// truncated reply, nothing usable returned).
    pub aborted: Option<String>,
}

impl TestSuiteArtifact {
    pub fn new(unit_id: &str, files: Vec<TestFile>, adapter: &dyn LanguageAdapter) -> Self {
        let n_generated = files
            .iter()
            .map(|f| adapter.outline(&f.source).test_ids().len() as u32)
            .sum();
        Self {
            unit_id: unit_id.to_string(),
            files,
            n_generated,
            ..Self::default()
        }
    }

    pub fn aborted(unit_id: &str, reason: String) -> Self {
        Self {
            unit_id: unit_id.to_string(),
            aborted: Some(reason),
            ..Self::default()
        }
    }

    pub fn counts(&self) -> FailureCounts {
        classify_failures(&self.per_test_verdicts)
    }

    pub fn report(&self) -> SanitizerReport {
        let counts = self.counts();
        SanitizerReport {
            unit_id: self.unit_id.clone(),
            aborted: self.aborted.clone(),
            n_generated: counts.n_generated,
            n_non_compiling: counts.n_non_compiling,
            n_non_passing: counts.n_non_passing,
            removed_non_compiling: self.removed_non_compiling,
            removed_in_files: self.removed_in_files,
            removed_files: self.removed_files,
            removed_helpers: self.removed_helpers,
            extra_content: self.extra_content,
            removals: self.removals.clone(),
            failures: self
                .per_test_verdicts
                .iter()
                .filter(|v| v.status != TestStatus::Passed)
                .cloned()
                .collect(),
        }
    }
}

/// Contents of `sanitizer_report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanitizerReport {
    pub unit_id: String,
    pub aborted: Option<String>,
    pub n_generated: u32,
    pub n_non_compiling: u32,
    pub n_non_passing: u32,
    pub removed_non_compiling: u32,
    pub removed_in_files: u32,
    pub removed_files: u32,
    pub removed_helpers: u32,
    pub extra_content: ExtraContentStats,
    pub removals: Vec<Removal>,
    pub failures: Vec<TestVerdict>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureCounts {
    pub n_generated: u32,
    pub n_non_compiling: u32,
    pub n_non_passing: u32,
}

impl FailureCounts {
    pub fn passing(&self) -> u32 {
        self.n_generated - self.n_non_compiling - self.n_non_passing
    }
}

impl std::ops::Add for FailureCounts {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            n_generated: self.n_generated + o.n_generated,
            n_non_compiling: self.n_non_compiling + o.n_non_compiling,
            n_non_passing: self.n_non_passing + o.n_non_passing,
        }
    }
}

/// Buckets finalized verdicts: each test lands in exactly one of passed,
/// not compiled, or failed.
pub fn classify_failures(verdicts: &[TestVerdict]) -> FailureCounts {
    let mut c = FailureCounts {
        n_generated: verdicts.len() as u32,
        ..FailureCounts::default()
    };
    for v in verdicts {
        match v.status {
            TestStatus::Passed => {}
            TestStatus::NotCompiled => c.n_non_compiling += 1,
            TestStatus::Failed => c.n_non_passing += 1,
        }
    }
    c
}

/// Turns a unit's final output into its artifact: counts the tests, records
/// extra content, prunes until the rest compiles, then runs what survives.
/// Every generated test ends with exactly one verdict; a test the runner
/// does not report counts as failed.
pub fn sanitize(
    unit_id: &str,
    files: Vec<TestFile>,
    production_types: &BTreeSet<String>,
    toolchain: &dyn Toolchain,
    ws: &Workspace,
    adapter: &dyn LanguageAdapter,
    prune_rounds: u32,
) -> Result<TestSuiteArtifact, ToolchainError> {
    let mut artifact = TestSuiteArtifact::new(unit_id, files, adapter);
    artifact.extra_content = detect_extra_content(&artifact.files, production_types, adapter);
    prune_until_clean(&mut artifact, toolchain, ws, adapter, prune_rounds)?;
    if artifact.files.is_empty() {
        return Ok(artifact);
    }
    let verdicts = match toolchain.run_tests(ws, &artifact.files) {
        Ok(v) => v,
        Err(e @ (ToolchainError::Timeout { .. } | ToolchainError::Infrastructure(_))) => {
            tracing::warn!(unit = unit_id, error = %e, "final test run failed");
            Vec::new()
        }
        Err(e) => return Err(e),
    };
    let mut reported: BTreeMap<TestId, TestVerdict> =
        verdicts.into_iter().map(|v| (v.test_id.clone(), v)).collect();
    for f in &artifact.files {
        for name in adapter.outline(&f.source).test_ids() {
            let id = TestId {
                file: f.path.clone(),
                name,
            };
            let verdict = reported.remove(&id).unwrap_or_else(|| TestVerdict {
                test_id: id,
                status: TestStatus::Failed,
                failure_message: Some("no verdict reported by the test runner".into()),
            });
            artifact.per_test_verdicts.push(verdict);
        }
    }
    Ok(artifact)
}

fn collect_test_spans(
    t: &TypeOutline,
    prefix: &str,
    keep: &dyn Fn(&str) -> bool,
    spans: &mut Vec<std::ops::Range<usize>>,
) {
    let path = if prefix.is_empty() {
        t.name.clone()
    } else {
        format!("{prefix}.{}", t.name)
    };
    for m in &t.members {
        if m.kind == MemberKind::TestMethod && !keep(&format!("{path}.{}", m.name)) {
            spans.push(m.removal_span.clone());
        }
    }
    for n in &t.nested {
        collect_test_spans(n, &path, keep, spans);
    }
}

/// Surviving files with every non-passing test removed. Files left without
/// a passing test are dropped.
pub fn passing_suite(artifact: &TestSuiteArtifact, adapter: &dyn LanguageAdapter) -> Vec<TestFile> {
    let passed: BTreeSet<(&Path, &str)> = artifact
        .per_test_verdicts
        .iter()
        .filter(|v| v.status == TestStatus::Passed)
        .map(|v| (v.test_id.file.as_path(), v.test_id.name.as_str()))
        .collect();
    let mut out = Vec::new();
    for f in &artifact.files {
        let outline = adapter.outline(&f.source);
        let keep = |id: &str| passed.contains(&(f.path.as_path(), id));
        if !outline.test_ids().iter().any(|id| keep(id)) {
            continue;
        }
        let mut spans = Vec::new();
        for t in &outline.types {
            collect_test_spans(t, "", &keep, &mut spans);
        }
        out.push(TestFile {
            path: f.path.clone(),
            source: remove_spans(&f.source, &spans),
        });
    }
    out
}
