use std::collections::{BTreeMap, BTreeSet};
use std::ops::Range;
use std::path::PathBuf;

use super::{Removal, RemovalKind, TestSuiteArtifact};
use crate::lang::{remove_spans, FileOutline, LanguageAdapter, MemberKind, TypeOutline};
use crate::toolchain::{
    Diagnostic, DiagnosticKind, TestId, TestStatus, TestVerdict, Toolchain, ToolchainError,
    Workspace,
};

pub const DEFAULT_PRUNE_ROUNDS: u32 = 3;

/// Span, kind, target, removed tests and the diagnostic behind it.
type PlannedRemoval<'d> = (Range<usize>, RemovalKind, String, Vec<String>, &'d Diagnostic);

enum Action {
    File,
    Span {
        span: Range<usize>,
        kind: RemovalKind,
        target: String,
        tests: Vec<String>,
    },
}

fn join(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    }
}

fn whole_type(t: &TypeOutline, prefix: &str, kind: RemovalKind) -> Action {
    Action::Span {
        span: t.removal_span.clone(),
        kind,
        target: join(prefix, &t.name),
        tests: t.test_ids(prefix),
    }
}

fn attribute_in(t: &TypeOutline, prefix: &str, line: usize, marker: &str) -> Option<Action> {
    let path = join(prefix, &t.name);
    for m in &t.members {
        if m.lines.0 <= line && line <= m.lines.1 {
            let target = join(&path, &m.name);
            return Some(match m.kind {
                MemberKind::TestMethod => Action::Span {
                    span: m.removal_span.clone(),
                    kind: RemovalKind::TestMethod,
                    tests: vec![target.clone()],
                    target,
                },
                _ => Action::Span {
                    span: m.removal_span.clone(),
                    kind: RemovalKind::Helper,
                    tests: Vec::new(),
                    target,
                },
            });
        }
    }
    for n in &t.nested {
        if n.contains_line(line) {
            if n.is_test_container(marker) {
                return attribute_in(n, &path, line, marker)
                    .or_else(|| Some(whole_type(n, &path, RemovalKind::NestedType)));
            }
            return Some(whole_type(n, &path, RemovalKind::HelperType));
        }
    }
    None
}

fn attribute(outline: &FileOutline, stem: &str, diag: &Diagnostic, marker: &str) -> Action {
    let Some((line, _)) = diag.span else {
        return Action::File;
    };
    if diag.kind == DiagnosticKind::ImportError {
        return Action::File;
    }
    let Some(t) = outline.types.iter().find(|t| t.contains_line(line)) else {
        return Action::File;
    };
    let primary = t.name == stem;
    if !primary && !t.is_test_container(marker) {
        return whole_type(t, "", RemovalKind::HelperType);
    }
    match attribute_in(t, "", line, marker) {
        Some(a) => a,
        None if primary => Action::File,
        None => whole_type(t, "", RemovalKind::NestedType),
    }
}

fn not_compiled(file: &std::path::Path, name: &str, diag: &Diagnostic) -> TestVerdict {
    TestVerdict {
        test_id: TestId {
            file: file.to_path_buf(),
            name: name.to_string(),
        },
        status: TestStatus::NotCompiled,
        failure_message: Some(diag.render()),
    }
}

fn drop_file(artifact: &mut TestSuiteArtifact, index: usize, diag: &Diagnostic, adapter: &dyn LanguageAdapter) {
    let file = artifact.files.remove(index);
    let outline = adapter.outline(&file.source);
    let tests = outline.test_ids();
    artifact.removed_files += 1;
    artifact.removed_in_files += tests.len() as u32;
    for t in &tests {
        artifact.per_test_verdicts.push(not_compiled(&file.path, t, diag));
    }
    artifact.removals.push(Removal {
        file: file.path.clone(),
        kind: RemovalKind::File,
        target: file.stem(),
        tests_removed: tests.len() as u32,
        diagnostic: diag.render(),
    });
}

/// Removes the code condemned by `diagnostics`: attributed test methods,
/// helper members and helper types, or the whole file when an error cannot
/// be attributed or sits in the imports. Removed tests get a `not_compiled`
/// verdict citing the diagnostic.
pub fn prune_non_compiling(
    artifact: &mut TestSuiteArtifact,
    diagnostics: &[Diagnostic],
    adapter: &dyn LanguageAdapter,
) {
    let marker = adapter.nested_test_marker();
    let mut per_file: BTreeMap<PathBuf, Vec<&Diagnostic>> = BTreeMap::new();
    for d in diagnostics {
        per_file.entry(d.file.clone()).or_default().push(d);
    }
    for (path, diags) in per_file {
        let Some(index) = artifact.files.iter().position(|f| f.path == path) else {
            continue;
        };
        let file = &artifact.files[index];
        let outline = adapter.outline(&file.source);
        let stem = file.stem();
        let mut spans = Vec::new();
        let mut removals = Vec::new();
        let mut condemned = None;
        for d in &diags {
            match attribute(&outline, &stem, d, marker) {
                Action::File => {
                    condemned = Some(*d);
                    break;
                }
                Action::Span {
                    span,
                    kind,
                    target,
                    tests,
                } => {
                    spans.push(span.clone());
                    removals.push((span, kind, target, tests, *d));
                }
            }
        }
        if let Some(d) = condemned {
            drop_file(artifact, index, d, adapter);
            continue;
        }
        // a removal nested inside another is subsumed by the outer one
        let mut kept: Vec<PlannedRemoval<'_>> = Vec::new();
        removals.sort_by(|a, b| a.0.start.cmp(&b.0.start).then(b.0.end.cmp(&a.0.end)));
        for r in removals {
            if kept
                .iter()
                .any(|k| k.0.start <= r.0.start && r.0.end <= k.0.end)
            {
                continue;
            }
            kept.push(r);
        }
        let mut seen_tests: BTreeSet<String> = BTreeSet::new();
        for (_, kind, target, tests, d) in &kept {
            let mut removed = 0;
            for t in tests {
                if seen_tests.insert(t.clone()) {
                    artifact.per_test_verdicts.push(not_compiled(&path, t, d));
                    removed += 1;
                }
            }
            artifact.removed_non_compiling += removed;
            if tests.is_empty() || matches!(kind, RemovalKind::HelperType) {
                artifact.removed_helpers += 1;
            }
            artifact.removals.push(Removal {
                file: path.clone(),
                kind: *kind,
                target: target.clone(),
                tests_removed: removed,
                diagnostic: d.render(),
            });
        }
        let file = &mut artifact.files[index];
        file.source = remove_spans(&file.source, &spans);
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PruneOutcome {
    /// Compilations performed, including the final clean one.
    pub compilations: u32,
    /// Files dropped because targeted pruning did not converge.
    pub fallback_files: u32,
}

/// Compiles and prunes until the artifact compiles cleanly. After
/// `max_rounds` targeted rounds, files still carrying diagnostics are
/// removed whole.
pub fn prune_until_clean(
    artifact: &mut TestSuiteArtifact,
    toolchain: &dyn Toolchain,
    ws: &Workspace,
    adapter: &dyn LanguageAdapter,
    max_rounds: u32,
) -> Result<PruneOutcome, ToolchainError> {
    let mut outcome = PruneOutcome::default();
    let mut round = 0;
    loop {
        if artifact.files.is_empty() {
            return Ok(outcome);
        }
        let diagnostics = toolchain.compile(ws, &artifact.files)?;
        outcome.compilations += 1;
        if diagnostics.is_empty() {
            return Ok(outcome);
        }
        if round < max_rounds {
            prune_non_compiling(artifact, &diagnostics, adapter);
            round += 1;
            continue;
        }
        let mut condemned: Vec<usize> = artifact
            .files
            .iter()
            .enumerate()
            .filter(|(_, f)| diagnostics.iter().any(|d| d.file == f.path))
            .map(|(i, _)| i)
            .collect();
        if condemned.is_empty() {
            condemned = (0..artifact.files.len()).collect();
        }
        for i in condemned.into_iter().rev() {
            let diag = diagnostics
                .iter()
                .find(|d| d.file == artifact.files[i].path)
                .unwrap_or(&diagnostics[0])
                .clone();
            tracing::debug!(unit = %artifact.unit_id, file = %artifact.files[i].path.display(), "pruning did not converge, dropping file");
            drop_file(artifact, i, &diag, adapter);
            outcome.fallback_files += 1;
        }
    }
}
