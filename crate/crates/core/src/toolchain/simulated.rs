//! Deterministic toolchain driven by a JSON script.
//!
//! Entities in generated test files are addressed by dotted keys: `FooTest`
//! for a top-level type, `FooTest.testBar` for a member, `FooTest.Inner` and
//! `FooTest.Inner.testBaz` for nested types. Keys of classes renamed with a
//! `_c` / `_m` suffix during suite merging fall back to the unsuffixed key.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    CoverageSnapshot, Diagnostic, DiagnosticKind, MutationSnapshot, TestFile, TestId, TestStatus,
    TestVerdict, Toolchain, ToolchainError, Workspace,
};
use crate::lang::{FileOutline, LanguageAdapter, TypeOutline};
use crate::source_model::ProjectModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompileOutcome {
    /// Error message; `None` means the entity compiles by itself.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(default)]
    pub kind: DiagnosticKind,
    /// Entities that must be present for this one to compile.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub requires: Vec<String>,
    /// When false the diagnostic carries no location.
    #[serde(default = "yes")]
    pub attributable: bool,
}

fn yes() -> bool {
    true
}

impl Default for CompileOutcome {
    fn default() -> Self {
        Self {
            error: None,
            kind: DiagnosticKind::default(),
            requires: Vec::new(),
            attributable: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptedVerdict {
    pub status: TestStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MethodCoverage {
    /// Container line ids belonging to the method.
    #[serde(default)]
    pub lines: Vec<u32>,
    #[serde(default)]
    pub branches: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ContainerCoverage {
    /// Line ids run from 1 to `lines`.
    pub lines: u32,
    #[serde(default)]
    pub methods: BTreeMap<String, MethodCoverage>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TestCoverage {
    /// Container → covered line ids.
    #[serde(default)]
    pub lines: BTreeMap<String, Vec<u32>>,
    /// `qualified#signature` → covered branch indices.
    #[serde(default)]
    pub branches: BTreeMap<String, Vec<u32>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverageTables {
    #[serde(default)]
    pub unavailable: bool,
    #[serde(default)]
    pub containers: BTreeMap<String, ContainerCoverage>,
    #[serde(default)]
    pub tests: BTreeMap<String, TestCoverage>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MutantKillMap {
    pub total: u64,
    /// Test key → ids of mutants it kills.
    #[serde(default)]
    pub kills: BTreeMap<String, Vec<u64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SimulatorScript {
    #[serde(default)]
    pub compile_outcomes: BTreeMap<String, CompileOutcome>,
    #[serde(default)]
    pub test_verdicts: BTreeMap<String, ScriptedVerdict>,
    #[serde(default)]
    pub coverage_tables: CoverageTables,
    #[serde(default)]
    pub mutant_kill_map: MutantKillMap,
    /// Reject tests the script does not mention instead of defaulting them.
    #[serde(default)]
    pub strict: bool,
}

impl SimulatorScript {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn load(path: &Path) -> Result<Self, ToolchainError> {
        let text = std::fs::read_to_string(path).map_err(|source| ToolchainError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_json(&text)
            .map_err(|e| ToolchainError::Environment(format!("bad simulator script {}: {e}", path.display())))
    }
}

pub struct SimulatedToolchain {
    script: SimulatorScript,
    adapter: Box<dyn LanguageAdapter>,
}

struct Entity {
    key: String,
    line: usize,
    is_test: bool,
}

fn strip_origin_suffix(key: &str) -> Option<String> {
    let (head, rest) = match key.split_once('.') {
        Some((h, r)) => (h, Some(r)),
        None => (key, None),
    };
    let base = head.strip_suffix("_c").or_else(|| head.strip_suffix("_m"))?;
    Some(match rest {
        Some(r) => format!("{base}.{r}"),
        None => base.to_string(),
    })
}

fn lookup<'a, V>(map: &'a BTreeMap<String, V>, key: &str) -> Option<&'a V> {
    map.get(key)
        .or_else(|| strip_origin_suffix(key).and_then(|k| map.get(&k)))
}

fn collect_entities(t: &TypeOutline, prefix: &str, out: &mut Vec<Entity>) {
    let key = if prefix.is_empty() {
        t.name.clone()
    } else {
        format!("{prefix}.{}", t.name)
    };
    out.push(Entity {
        key: key.clone(),
        line: t.lines.0,
        is_test: false,
    });
    for m in &t.members {
        if m.name.is_empty() {
            continue;
        }
        out.push(Entity {
            key: format!("{key}.{}", m.name),
            line: m.lines.0,
            is_test: m.kind == crate::lang::MemberKind::TestMethod,
        });
    }
    for n in &t.nested {
        collect_entities(n, &key, out);
    }
}

impl SimulatedToolchain {
    pub fn new(script: SimulatorScript, adapter: Box<dyn LanguageAdapter>) -> Self {
        Self { script, adapter }
    }

    pub fn script(&self) -> &SimulatorScript {
        &self.script
    }

    fn outline_all(&self, files: &[TestFile]) -> Vec<FileOutline> {
        files.iter().map(|f| self.adapter.outline(&f.source)).collect()
    }

    fn test_keys(&self, files: &[TestFile]) -> Vec<TestId> {
        let mut ids = Vec::new();
        for (file, outline) in files.iter().zip(self.outline_all(files)) {
            for name in outline.test_ids() {
                ids.push(TestId {
                    file: file.path.clone(),
                    name,
                });
            }
        }
        ids.sort();
        ids
    }

    fn check_known(&self, key: &str, present: bool) -> Result<(), ToolchainError> {
        if self.script.strict && !present {
            return Err(ToolchainError::Desync(format!("script has no entry for `{key}`")));
        }
        Ok(())
    }
}

impl Toolchain for SimulatedToolchain {
    fn prepare(&self, project: &ProjectModel, label: &str) -> Result<Workspace, ToolchainError> {
        tracing::debug!(project = %project.name(), label, "simulated workspace");
        Ok(Workspace::virtual_workspace(label))
    }

    fn compile(&self, ws: &Workspace, files: &[TestFile]) -> Result<Vec<Diagnostic>, ToolchainError> {
        let _guard = ws.lock();
        let outlines = self.outline_all(files);
        let mut entities_per_file = Vec::new();
        let mut known: BTreeSet<String> = BTreeSet::new();
        for outline in &outlines {
            let mut entities = Vec::new();
            for t in &outline.types {
                collect_entities(t, "", &mut entities);
            }
            for e in &entities {
                known.insert(e.key.clone());
                if let Some(base) = strip_origin_suffix(&e.key) {
                    known.insert(base);
                }
            }
            entities_per_file.push(entities);
        }

        let mut diagnostics = Vec::new();
        for ((file, outline), entities) in files.iter().zip(&outlines).zip(&entities_per_file) {
            let diag = |span: Option<(usize, usize)>, kind, message: String, test: Option<&str>| {
                Diagnostic {
                    file: file.path.clone(),
                    span,
                    kind,
                    message,
                    attributed_test: test.map(str::to_string),
                }
            };
            for line in &outline.syntax_errors {
                diagnostics.push(diag(
                    Some((*line, 1)),
                    DiagnosticKind::CompileError,
                    "illegal start of expression".into(),
                    None,
                ));
            }
            let stem = file.stem();
            for t in &outline.types {
                if t.is_public && t.name != stem {
                    diagnostics.push(diag(
                        Some((t.lines.0, 1)),
                        DiagnosticKind::NameMismatch,
                        format!(
                            "class {} is public, should be declared in a file named {}.java",
                            t.name, t.name
                        ),
                        None,
                    ));
                }
            }
            for e in entities {
                let outcome = lookup(&self.script.compile_outcomes, &e.key);
                if e.is_test {
                    self.check_known(&e.key, outcome.is_some() || lookup(&self.script.test_verdicts, &e.key).is_some())?;
                }
                let Some(outcome) = outcome else {
                    continue;
                };
                let line = if outcome.kind == DiagnosticKind::ImportError {
                    outline.imports.first().map(|i| i.line).unwrap_or(1)
                } else {
                    e.line
                };
                let span = outcome.attributable.then_some((line, 1));
                let test = e.is_test.then_some(e.key.as_str());
                if let Some(msg) = &outcome.error {
                    diagnostics.push(diag(span, outcome.kind, msg.clone(), test));
                }
                for req in &outcome.requires {
                    if !known.contains(req) {
                        diagnostics.push(diag(
                            span,
                            DiagnosticKind::CompileError,
                            format!("cannot find symbol: {req}"),
                            test,
                        ));
                    }
                }
            }
        }
        Ok(diagnostics)
    }

    fn run_tests(&self, ws: &Workspace, files: &[TestFile]) -> Result<Vec<TestVerdict>, ToolchainError> {
        let _guard = ws.lock();
        let mut verdicts = Vec::new();
        for id in self.test_keys(files) {
            let scripted = lookup(&self.script.test_verdicts, &id.name);
            self.check_known(
                &id.name,
                scripted.is_some() || lookup(&self.script.compile_outcomes, &id.name).is_some(),
            )?;
            let (status, failure_message) = match scripted {
                Some(v) => (v.status, v.message.clone()),
                None => (TestStatus::Passed, None),
            };
            let failure_message = match status {
                TestStatus::Passed => None,
                _ => Some(failure_message.unwrap_or_else(|| "assertion failed".into())),
            };
            verdicts.push(TestVerdict {
                test_id: id,
                status,
                failure_message,
            });
        }
        Ok(verdicts)
    }

    fn coverage(&self, ws: &Workspace, files: &[TestFile]) -> Result<CoverageSnapshot, ToolchainError> {
        let _guard = ws.lock();
        let tables = &self.script.coverage_tables;
        if tables.unavailable {
            return Err(ToolchainError::CoverageUnavailable(
                "simulator script marks coverage unavailable".into(),
            ));
        }
        let mut lines: BTreeMap<&str, BTreeSet<u32>> = BTreeMap::new();
        let mut branches: BTreeMap<String, BTreeSet<u32>> = BTreeMap::new();
        for id in self.test_keys(files) {
            let Some(cov) = lookup(&tables.tests, &id.name) else {
                self.check_known(&id.name, false)?;
                continue;
            };
            for (container, ids) in &cov.lines {
                if let Some((name, _)) = tables.containers.get_key_value(container) {
                    lines.entry(name.as_str()).or_default().extend(ids.iter().copied());
                }
            }
            for (method, idx) in &cov.branches {
                branches.entry(method.clone()).or_default().extend(idx.iter().copied());
            }
        }

        let mut snap = CoverageSnapshot::default();
        for (qn, container) in &tables.containers {
            let covered = lines.get(qn.as_str());
            snap.lines_total += u64::from(container.lines);
            snap.lines_covered += covered
                .map(|s| s.iter().filter(|l| (1..=container.lines).contains(l)).count() as u64)
                .unwrap_or(0);
            for (sig, method) in &container.methods {
                let key = format!("{qn}#{sig}");
                let hit = branches
                    .get(&key)
                    .map(|s| s.iter().filter(|b| **b < method.branches).count() as u32)
                    .unwrap_or(0);
                snap.branches_total += u64::from(method.branches);
                snap.branches_covered += u64::from(hit);
                snap.per_method_branches.insert(key.clone(), (hit, method.branches));
                let own: BTreeSet<u32> = method.lines.iter().copied().collect();
                let line_hit = covered
                    .map(|s| own.intersection(s).count() as u32)
                    .unwrap_or(0);
                snap.per_method_lines.insert(key, (line_hit, own.len() as u32));
            }
        }
        Ok(snap)
    }

    fn mutation_score(
        &self,
        ws: &Workspace,
        files: &[TestFile],
    ) -> Result<MutationSnapshot, ToolchainError> {
        let _guard = ws.lock();
        let map = &self.script.mutant_kill_map;
        let mut killed = BTreeSet::new();
        for id in self.test_keys(files) {
            if let Some(kills) = lookup(&map.kills, &id.name) {
                killed.extend(kills.iter().copied().filter(|m| *m < map.total));
            }
        }
        Ok(MutationSnapshot {
            mutants_total: map.total,
            mutants_killed: killed.len() as u64,
        })
    }
}
