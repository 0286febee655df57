//! Generation strategies: class-level, method-level, their combination and
//! the coverage-guided hybrid.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::LanguageAdapter;
use crate::llm::{extract_code_blocks, LlmError, LlmGateway};
use crate::metrics::report::RunRecord;
use crate::metrics::{SuiteMetrics, Totals};
use crate::prompts::{render_errors, NamingScheme, PromptError, PromptFactory};
use crate::sanitizer::{
    passing_suite, sanitize, ExtraContentStats, FailureCounts, TestSuiteArtifact,
    DEFAULT_PRUNE_ROUNDS,
};
use crate::source_model::{ContainerUnit, ProjectModel, CONSTRUCTOR_SENTINEL};
use crate::toolchain::{
    CoverageSnapshot, Diagnostic, MutationSnapshot, TestFile, TestStatus, TestVerdict, Toolchain,
    ToolchainError, Workspace,
};

pub const DEFAULT_REPAIR_LIMIT: u32 = 5;
pub const DEFAULT_WORKER_BOUND: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GranularityMode {
    ClassLevel,
    MethodLevel,
    Combined,
    Hybrid,
}

impl GranularityMode {
    pub const ALL: [GranularityMode; 4] = [
        GranularityMode::ClassLevel,
        GranularityMode::MethodLevel,
        GranularityMode::Combined,
        GranularityMode::Hybrid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GranularityMode::ClassLevel => "class_level",
            GranularityMode::MethodLevel => "method_level",
            GranularityMode::Combined => "combined",
            GranularityMode::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for GranularityMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GranularityMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == norm || m.as_str().trim_end_matches("_level") == norm)
            .ok_or_else(|| format!("unknown mode `{s}` (class_level, method_level, combined, hybrid)"))
    }
}

#[derive(Debug, Error)]
pub enum OrchestratorError {
    #[error(transparent)]
    Toolchain(#[from] ToolchainError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("cannot combine runs of different projects: `{0}` and `{1}`")]
    ProjectMismatch(String, String),
    #[error("worker pool: {0}")]
    Pool(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    pub repair_limit: u32,
    pub prune_rounds: u32,
    pub worker_bound: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            repair_limit: DEFAULT_REPAIR_LIMIT,
            prune_rounds: DEFAULT_PRUNE_ROUNDS,
            worker_bound: DEFAULT_WORKER_BOUND,
        }
    }
}

/// What a unit of generation targets.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Target {
    Class,
    Method(String),
    Constructor,
}

#[derive(Debug, Clone)]
pub struct UnitSpec<'p> {
    pub unit_id: String,
    pub container: &'p ContainerUnit,
    pub target: Target,
    pub test_class_name: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnitStats {
    pub requests: u32,
    pub repair_rounds: u32,
    pub session_messages: u32,
    pub transport_failures: u32,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct UnitOutcome {
    pub artifact: TestSuiteArtifact,
    pub stats: UnitStats,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunLedger {
    pub requests_per_unit: BTreeMap<String, u64>,
    pub total_requests: u64,
    pub generated_tests: u64,
    pub passing_tests: u64,
}

impl RunLedger {
    fn from_outcomes(units: &BTreeMap<String, UnitOutcome>) -> Self {
        let mut ledger = RunLedger::default();
        for (id, u) in units {
            ledger
                .requests_per_unit
                .insert(id.clone(), u64::from(u.stats.requests));
            ledger.total_requests += u64::from(u.stats.requests);
            if u.artifact.aborted.is_none() {
                let c = u.artifact.counts();
                ledger.generated_tests += u64::from(c.n_generated);
                ledger.passing_tests += u64::from(c.passing());
            }
        }
        ledger
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRun {
    pub mode: GranularityMode,
    pub project: String,
    pub units: BTreeMap<String, UnitOutcome>,
    pub ledger: RunLedger,
    /// Passing tests of every unit, as installed for measurement.
    pub suite: Vec<TestFile>,
    pub coverage: Option<CoverageSnapshot>,
    pub mutation: Option<MutationSnapshot>,
    /// Why coverage or mutation data is missing.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub measurement_notes: Vec<String>,
    /// Suite files dropped because they clashed with other units' files.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub suite_conflicts: Vec<PathBuf>,
    /// Hybrid only: phase 1 had no coverage, so phase 2 targeted every method.
    #[serde(default)]
    pub hybrid_fallback: bool,
}

impl GenerationRun {
    pub fn aborted_units(&self) -> Vec<&str> {
        self.units
            .iter()
            .filter(|(_, u)| u.artifact.aborted.is_some())
            .map(|(id, _)| id.as_str())
            .collect()
    }

    /// Failure counts over units that were not aborted.
    pub fn counts(&self) -> FailureCounts {
        self.units
            .values()
            .filter(|u| u.artifact.aborted.is_none())
            .map(|u| u.artifact.counts())
            .fold(FailureCounts::default(), |a, b| a + b)
    }

    pub fn extra_content(&self) -> ExtraContentStats {
        self.units
            .values()
            .map(|u| u.artifact.extra_content)
            .fold(ExtraContentStats::default(), |a, b| a + b)
    }

    pub fn metrics(&self) -> SuiteMetrics {
        SuiteMetrics::compute(
            self.counts(),
            self.ledger.total_requests,
            self.coverage.as_ref(),
            self.mutation.as_ref(),
            self.extra_content(),
        )
    }

    pub fn totals(&self) -> Totals {
        let c = self.coverage.clone().unwrap_or_default();
        let m = self.mutation.unwrap_or_default();
        Totals::from_snapshots(&c, &m)
    }

    pub fn record(&self) -> RunRecord {
        RunRecord {
            project: self.project.clone(),
            mode: self.mode.to_string(),
            metrics: self.metrics(),
            totals: self.totals(),
            hybrid_fallback: self.hybrid_fallback,
        }
    }
}

/// Methods the hybrid's second phase should target, given phase-1 coverage.
/// A method with branches is covered when every branch is; a method without
/// branches when every line is. Methods absent from the report hold no
/// executable code and are skipped.
pub fn uncovered_methods(c: &ContainerUnit, cov: &CoverageSnapshot) -> Vec<String> {
    c.methods
        .iter()
        .filter(|m| !is_covered(&c.method_key(&m.signature), cov))
        .map(|m| m.signature.clone())
        .collect()
}

/// True iff any declared constructor has uncovered code.
pub fn constructor_uncovered(c: &ContainerUnit, cov: &CoverageSnapshot) -> bool {
    c.constructors
        .iter()
        .any(|sig| !is_covered(&c.method_key(sig), cov))
}

fn is_covered(key: &str, cov: &CoverageSnapshot) -> bool {
    match cov.per_method_branches.get(key) {
        Some(&(hit, total)) if total > 0 => hit >= total,
        _ => match cov.per_method_lines.get(key) {
            Some(&(hit, total)) => hit >= total,
            None => true,
        },
    }
}

pub struct Orchestrator<'a> {
    pub gateway: &'a LlmGateway,
    pub toolchain: &'a dyn Toolchain,
    pub adapter: &'a dyn LanguageAdapter,
    pub prompts: &'a PromptFactory,
    pub naming: NamingScheme,
    pub limits: Limits,
    pool: rayon::ThreadPool,
}

enum Step {
    Clean,
    Errors(String),
}

pub fn workspace_label(unit_id: &str) -> String {
    unit_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

impl<'a> Orchestrator<'a> {
    pub fn new(
        gateway: &'a LlmGateway,
        toolchain: &'a dyn Toolchain,
        adapter: &'a dyn LanguageAdapter,
        prompts: &'a PromptFactory,
        naming: NamingScheme,
        limits: Limits,
    ) -> Result<Self, OrchestratorError> {
        naming.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(limits.worker_bound.max(1))
            .build()
            .map_err(|e| OrchestratorError::Pool(e.to_string()))?;
        Ok(Self {
            gateway,
            toolchain,
            adapter,
            prompts,
            naming,
            limits,
            pool,
        })
    }

    pub fn class_units<'p>(&self, project: &'p ProjectModel) -> Vec<UnitSpec<'p>> {
        project
            .containers
            .iter()
            .map(|c| UnitSpec {
                unit_id: format!("class:{}", c.qualified_name),
                container: c,
                target: Target::Class,
                test_class_name: self.naming.class_test_name(c),
            })
            .collect()
    }

    /// Method units of `c` for the given signatures, plus the constructor
    /// pass when `constructor` is set.
    pub fn method_units<'p>(
        &self,
        c: &'p ContainerUnit,
        signatures: &BTreeSet<String>,
        constructor: bool,
    ) -> Vec<UnitSpec<'p>> {
        let mut out: Vec<UnitSpec<'p>> = self
            .naming
            .method_test_names(c)
            .into_iter()
            .filter(|(sig, _)| signatures.contains(sig))
            .map(|(sig, name)| UnitSpec {
                unit_id: format!("method:{}", c.method_key(&sig)),
                container: c,
                target: Target::Method(sig),
                test_class_name: name,
            })
            .collect();
        if constructor {
            out.push(UnitSpec {
                unit_id: format!("constructor:{}", c.qualified_name),
                container: c,
                target: Target::Constructor,
                test_class_name: self.naming.constructor_test_name(c),
            });
        }
        out
    }

    fn all_method_units<'p>(&self, project: &'p ProjectModel) -> Vec<UnitSpec<'p>> {
        project
            .containers
            .iter()
            .flat_map(|c| {
                let sigs = c.methods.iter().map(|m| m.signature.clone()).collect();
                self.method_units(c, &sigs, c.has_constructor)
            })
            .collect()
    }

    fn initial_prompt(&self, spec: &UnitSpec<'_>) -> Result<String, PromptError> {
        match &spec.target {
            Target::Class => Ok(self
                .prompts
                .build_class_prompt(spec.container, &spec.test_class_name)),
            Target::Method(sig) => {
                let m = spec
                    .container
                    .method_by_signature(sig)
                    .ok_or_else(|| PromptError::UnknownMethod {
                        container: spec.container.qualified_name.clone(),
                        method: sig.clone(),
                    })?;
                // the prompt names the method; overloads need the signature
                let shown = if spec.container.is_overloaded(&m.name) {
                    sig.as_str()
                } else {
                    m.name.as_str()
                };
                self.prompts
                    .build_method_prompt(spec.container, shown, &spec.test_class_name)
            }
            Target::Constructor => self.prompts.build_method_prompt(
                spec.container,
                CONSTRUCTOR_SENTINEL,
                &spec.test_class_name,
            ),
        }
    }

    /// Turns a reply into the candidate test file, or the error text to send
    /// back when it holds nothing usable.
    fn candidate(&self, spec: &UnitSpec<'_>, reply: &str) -> Result<TestFile, String> {
        let blocks = extract_code_blocks(reply);
        if blocks.is_empty() {
            return Err("The response contained no code.".into());
        }
        let merged = self.adapter.merge_snippets(&blocks);
        let namespace = &spec.container.namespace;
        let source = self
            .adapter
            .align_identity(&merged, &spec.test_class_name, namespace)
            .map_err(|e| format!("The response could not be used as a test class: {e}"))?;
        Ok(TestFile {
            path: self.adapter.test_file_path(namespace, &spec.test_class_name),
            source,
        })
    }

    fn evaluate(&self, ws: &Workspace, files: &[TestFile]) -> Result<Step, ToolchainError> {
        let diagnostics = self.toolchain.compile(ws, files)?;
        if !diagnostics.is_empty() {
            return Ok(Step::Errors(render_errors(&diagnostics, &[])));
        }
        let n_tests: usize = files
            .iter()
            .map(|f| self.adapter.outline(&f.source).test_ids().len())
            .sum();
        if n_tests == 0 {
            return Ok(Step::Errors("The generated code contains no test methods.".into()));
        }
        let failures: Vec<TestVerdict> = self
            .toolchain
            .run_tests(ws, files)?
            .into_iter()
            .filter(|v| v.status != TestStatus::Passed)
            .collect();
        if failures.is_empty() {
            Ok(Step::Clean)
        } else {
            Ok(Step::Errors(render_errors(&[] as &[Diagnostic], &failures)))
        }
    }

    /// Generate, compile, execute and repair one unit, then prune and
    /// classify what the final reply produced.
    pub fn generate_for_unit(
        &self,
        project: &ProjectModel,
        spec: &UnitSpec<'_>,
    ) -> Result<UnitOutcome, OrchestratorError> {
        let ws = self.toolchain.prepare(project, &workspace_label(&spec.unit_id))?;
        let mut session = self.gateway.open_session(spec.unit_id.clone());
        let mut prompt = self.initial_prompt(spec)?;
        let mut files: Vec<TestFile> = Vec::new();
        let mut stats = UnitStats::default();
        let mut aborted = None;

        loop {
            let reply = match self.gateway.send(&mut session, &prompt) {
                Ok(r) => r,
                Err(e @ (LlmError::Desync { .. } | LlmError::InvalidTemperature(_))) => {
                    return Err(e.into())
                }
                Err(e) => {
                    tracing::warn!(unit = %spec.unit_id, error = %e, "unit aborted");
                    aborted = Some(e.to_string());
                    break;
                }
            };
            let errors = match self.candidate(spec, &reply) {
                Ok(file) => {
                    files = vec![file];
                    match self.evaluate(&ws, &files) {
                        Ok(Step::Clean) => break,
                        Ok(Step::Errors(e)) => e,
                        Err(e @ (ToolchainError::Timeout { .. } | ToolchainError::Infrastructure(_))) => {
                            e.to_string()
                        }
                        Err(e) => return Err(e.into()),
                    }
                }
                Err(e) => {
                    files.clear();
                    e
                }
            };
            if stats.repair_rounds >= self.limits.repair_limit {
                break;
            }
            prompt = self.prompts.build_repair_prompt(&errors)?;
            stats.repair_rounds += 1;
        }
        stats.requests = session.counted_requests;
        stats.transport_failures = session.transport_failures;
        stats.session_messages = session.turn_messages() as u32;

        if let Some(reason) = aborted {
            let mut artifact = TestSuiteArtifact::aborted(&spec.unit_id, reason);
            artifact.unit_id = spec.unit_id.clone();
            return Ok(UnitOutcome { artifact, stats });
        }
        let artifact = sanitize(
            &spec.unit_id,
            files,
            &project.simple_type_names(),
            self.toolchain,
            &ws,
            self.adapter,
            self.limits.prune_rounds,
        )?;
        Ok(UnitOutcome { artifact, stats })
    }

    fn run_units(
        &self,
        project: &ProjectModel,
        specs: &[UnitSpec<'_>],
    ) -> Result<BTreeMap<String, UnitOutcome>, OrchestratorError> {
        let results: Vec<Result<(String, UnitOutcome), OrchestratorError>> =
            self.pool.install(|| {
                specs
                    .par_iter()
                    .map(|s| {
                        tracing::info!(unit = %s.unit_id, "generating");
                        self.generate_for_unit(project, s)
                            .map(|o| (s.unit_id.clone(), o))
                    })
                    .collect()
            });
        results.into_iter().collect()
    }

    fn assemble(
        &self,
        project: &ProjectModel,
        mode: GranularityMode,
        units: BTreeMap<String, UnitOutcome>,
    ) -> Result<GenerationRun, OrchestratorError> {
        let suite: Vec<TestFile> = units
            .values()
            .filter(|u| u.artifact.aborted.is_none())
            .flat_map(|u| passing_suite(&u.artifact, self.adapter))
            .collect();
        let mut run = GenerationRun {
            mode,
            project: project.name(),
            ledger: RunLedger::from_outcomes(&units),
            units,
            suite: Vec::new(),
            coverage: None,
            mutation: None,
            measurement_notes: Vec::new(),
            suite_conflicts: Vec::new(),
            hybrid_fallback: false,
        };
        self.measure(project, &mut run, suite)?;
        Ok(run)
    }

    /// Installs `suite` as the run's final suite and measures it. Files that
    /// do not compile together with the rest are dropped first.
    fn measure(
        &self,
        project: &ProjectModel,
        run: &mut GenerationRun,
        mut suite: Vec<TestFile>,
    ) -> Result<(), OrchestratorError> {
        suite.sort_by(|a, b| a.path.cmp(&b.path));
        let ws = self
            .toolchain
            .prepare(project, &format!("{}_suite", run.mode))?;
        if !suite.is_empty() {
            loop {
                let diags = self.toolchain.compile(&ws, &suite)?;
                if diags.is_empty() {
                    break;
                }
                let bad: BTreeSet<PathBuf> = diags.iter().map(|d| d.file.clone()).collect();
                let before = suite.len();
                suite.retain(|f| !bad.contains(&f.path));
                if suite.len() == before {
                    run.suite_conflicts.extend(suite.drain(..).map(|f| f.path));
                    break;
                }
                run.suite_conflicts.extend(bad);
                if suite.is_empty() {
                    break;
                }
            }
        }
        for p in &run.suite_conflicts {
            tracing::warn!(file = %p.display(), "suite file dropped: does not compile with the rest");
        }
        match self.toolchain.coverage(&ws, &suite) {
            Ok(c) => run.coverage = Some(c),
            Err(e @ (ToolchainError::CoverageUnavailable(_)
            | ToolchainError::Timeout { .. }
            | ToolchainError::Infrastructure(_))) => run.measurement_notes.push(e.to_string()),
            Err(e) => return Err(e.into()),
        }
        match self.toolchain.mutation_score(&ws, &suite) {
            Ok(m) => run.mutation = Some(m),
            Err(e @ (ToolchainError::CoverageUnavailable(_)
            | ToolchainError::Timeout { .. }
            | ToolchainError::Infrastructure(_))) => run.measurement_notes.push(e.to_string()),
            Err(e) => return Err(e.into()),
        }
        run.suite = suite;
        Ok(())
    }

    pub fn run_class_level(&self, project: &ProjectModel) -> Result<GenerationRun, OrchestratorError> {
        let units = self.run_units(project, &self.class_units(project))?;
        self.assemble(project, GranularityMode::ClassLevel, units)
    }

    pub fn run_method_level(&self, project: &ProjectModel) -> Result<GenerationRun, OrchestratorError> {
        let units = self.run_units(project, &self.all_method_units(project))?;
        self.assemble(project, GranularityMode::MethodLevel, units)
    }

    /// Union of the passing suites of two runs over the same project, with
    /// coverage and mutation measured again on the union.
    pub fn combine(
        &self,
        project: &ProjectModel,
        a: &GenerationRun,
        b: &GenerationRun,
        mode: GranularityMode,
    ) -> Result<GenerationRun, OrchestratorError> {
        for r in [a, b] {
            if r.project != project.name() {
                return Err(OrchestratorError::ProjectMismatch(r.project.clone(), project.name()));
            }
        }
        let mut units = a.units.clone();
        for (id, u) in &b.units {
            units.entry(id.clone()).or_insert_with(|| u.clone());
        }
        let suite = merge_suites(&a.suite, a.mode, &b.suite, b.mode, self.adapter);
        let mut run = GenerationRun {
            mode,
            project: project.name(),
            ledger: RunLedger::from_outcomes(&units),
            units,
            suite: Vec::new(),
            coverage: None,
            mutation: None,
            measurement_notes: Vec::new(),
            suite_conflicts: Vec::new(),
            hybrid_fallback: a.hybrid_fallback || b.hybrid_fallback,
        };
        // the same unit id in both runs is counted once, from the first run
        run.ledger.total_requests = a.ledger.total_requests + b.ledger.total_requests
            - a.units
                .iter()
                .filter(|(id, _)| b.units.contains_key(*id))
                .map(|(_, u)| u64::from(u.stats.requests))
                .sum::<u64>();
        self.measure(project, &mut run, suite)?;
        Ok(run)
    }

    pub fn run_combined(&self, project: &ProjectModel) -> Result<GenerationRun, OrchestratorError> {
        let class = self.run_class_level(project)?;
        let method = self.run_method_level(project)?;
        self.combine(project, &class, &method, GranularityMode::Combined)
    }

    pub fn run_hybrid(&self, project: &ProjectModel) -> Result<GenerationRun, OrchestratorError> {
        let phase1 = self.run_class_level(project)?;
        let (specs, fallback) = match &phase1.coverage {
            Some(cov) => {
                let specs: Vec<UnitSpec<'_>> = project
                    .containers
                    .iter()
                    .flat_map(|c| {
                        let sigs = uncovered_methods(c, cov).into_iter().collect();
                        let ctor = c.has_constructor && constructor_uncovered(c, cov);
                        self.method_units(c, &sigs, ctor)
                    })
                    .collect();
                (specs, false)
            }
            None => {
                tracing::warn!(project = %project.name(), "no phase-1 coverage, hybrid falls back to full method level");
                (self.all_method_units(project), true)
            }
        };
        tracing::info!(targets = specs.len(), "hybrid phase 2");
        let units = self.run_units(project, &specs)?;
        let mut phase2 = self.assemble(project, GranularityMode::MethodLevel, units)?;
        phase2.hybrid_fallback = fallback;
        self.combine(project, &phase1, &phase2, GranularityMode::Hybrid)
    }

    pub fn run(&self, project: &ProjectModel, mode: GranularityMode) -> Result<GenerationRun, OrchestratorError> {
        match mode {
            GranularityMode::ClassLevel => self.run_class_level(project),
            GranularityMode::MethodLevel => self.run_method_level(project),
            GranularityMode::Combined => self.run_combined(project),
            GranularityMode::Hybrid => self.run_hybrid(project),
        }
    }
}

fn origin_suffix(mode: GranularityMode) -> &'static str {
    match mode {
        GranularityMode::ClassLevel => "_c",
        _ => "_m",
    }
}

/// Union of two suites. Files whose paths collide are renamed by origin:
/// `_c` for class-level output, `_m` otherwise.
pub fn merge_suites(
    a: &[TestFile],
    a_mode: GranularityMode,
    b: &[TestFile],
    b_mode: GranularityMode,
    adapter: &dyn LanguageAdapter,
) -> Vec<TestFile> {
    let a_paths: BTreeSet<&PathBuf> = a.iter().map(|f| &f.path).collect();
    let b_paths: BTreeSet<&PathBuf> = b.iter().map(|f| &f.path).collect();
    let mut out = Vec::new();
    let mut seen = BTreeSet::new();
    for (files, mode, other) in [(a, a_mode, &b_paths), (b, b_mode, &a_paths)] {
        for f in files {
            if !other.contains(&f.path) {
                if seen.insert(f.path.clone()) {
                    out.push(f.clone());
                }
                continue;
            }
            let suffix = if a_mode == b_mode {
                if std::ptr::eq(files, a) { "_c" } else { "_m" }
            } else {
                origin_suffix(mode)
            };
            let renamed = format!("{}{suffix}", f.stem());
            let namespace = adapter
                .outline(&f.source)
                .namespace
                .map(|h| h.name)
                .unwrap_or_default();
            match adapter.align_identity(&f.source, &renamed, &namespace) {
                Ok(source) => {
                    let path = f.path.with_file_name(format!(
                        "{renamed}.{}",
                        f.path.extension().and_then(|e| e.to_str()).unwrap_or("java")
                    ));
                    if seen.insert(path.clone()) {
                        out.push(TestFile { path, source });
                    }
                }
                Err(e) => tracing::warn!(file = %f.path.display(), error = %e, "could not rename clashing file"),
            }
        }
    }
    out.sort_by(|x, y| x.path.cmp(&y.path));
    out
}
