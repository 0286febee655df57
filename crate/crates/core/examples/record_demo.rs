//! Regenerates `demo/simulator.json` and `demo/transcript.jsonl`.
//!
//! The transcript comes from a scripted stand-in for the LLM that behaves
//! like a plausible model: most units pass on the first turn, one class
//! reply calls a method that does not exist, one asserts the wrong value,
//! one method unit never gets its test right, and one request hits a
//! transport failure before succeeding.
//!
//! Run from the workspace root: `cargo run -p testgen-core --example record_demo`.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use anyhow::Context;
use testgen_core::lang::{JavaAdapter, LanguageAdapter};
use testgen_core::llm::{
    BackendError, Completion, CompletionRequest, GatewayConfig, LlmGateway, ScriptedBackend,
    TranscriptRecorder,
};
use testgen_core::orchestrator::{Limits, Orchestrator};
use testgen_core::prompts::{NamingScheme, PromptFactory, PromptTemplates, DEFAULT_DIAGNOSTIC_CAP};
use testgen_core::source_model::{discover_with, ContainerUnit, ProjectModel};
use testgen_core::toolchain::simulated::{
    CompileOutcome, ContainerCoverage, CoverageTables, MethodCoverage, MutantKillMap,
    ScriptedVerdict, SimulatedToolchain, SimulatorScript, TestCoverage,
};
use testgen_core::toolchain::{DiagnosticKind, TestStatus};

fn simple_name(c: &ContainerUnit) -> &str {
    c.simple_path()
}

fn has_public_constructor(c: &ContainerUnit) -> bool {
    c.source_text
        .contains(&format!("public {}(", simple_name(c)))
}

/// Members of a container with their line count and branch count.
fn members(c: &ContainerUnit) -> Vec<(String, String, u32)> {
    let mut out: Vec<(String, String, u32)> = c
        .constructors
        .iter()
        .map(|sig| ("constructor".to_string(), sig.clone(), 0))
        .collect();
    out.extend(
        c.methods
            .iter()
            .map(|m| (m.name.clone(), m.signature.clone(), m.branch_count)),
    );
    out
}

fn build_script(project: &ProjectModel) -> SimulatorScript {
    let mut coverage = CoverageTables::default();
    let mut kills: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    let mut next_mutant = 0u64;
    for c in &project.containers {
        let qn = &c.qualified_name;
        let name = simple_name(c);
        let class_test = format!("{name}Test");
        let mut container = ContainerCoverage::default();
        let mut next_line = 1u32;
        for (member, sig, branches) in members(c) {
            let n_lines = 2 + branches;
            let lines: Vec<u32> = (next_line..next_line + n_lines).collect();
            next_line += n_lines;
            container.methods.insert(
                sig.clone(),
                MethodCoverage {
                    lines: lines.clone(),
                    branches,
                },
            );
            let key = format!("{qn}#{sig}");
            let mutants: Vec<u64> = (next_mutant..next_mutant + u64::from(branches.max(1))).collect();
            next_mutant += mutants.len() as u64;

            let class_level_name = if member == "constructor" {
                has_public_constructor(c).then(|| format!("{class_test}.test_constructor"))
            } else if member == "capitalize" {
                Some(format!("{class_test}.test_capitalize_first_letter"))
            } else {
                Some(format!("{class_test}.test_{member}"))
            };
            if let Some(test) = class_level_name {
                // class-level tests take the first branch only
                let t = coverage.tests.entry(test.clone()).or_default();
                t.lines.entry(qn.clone()).or_default().extend(&lines);
                if branches > 0 {
                    t.branches.insert(key.clone(), vec![0]);
                }
                kills.entry(test).or_default().push(mutants[0]);
            }

            let method_class = if member == "constructor" {
                format!("{name}_Constructor_Test")
            } else {
                format!("{name}_{member}_Test")
            };
            for (suffix, parity) in [("a", 0u32), ("b", 1u32)] {
                let test = format!("{method_class}.covers_{member}_{suffix}");
                let t: &mut TestCoverage = coverage.tests.entry(test.clone()).or_default();
                t.lines.entry(qn.clone()).or_default().extend(&lines);
                let own: Vec<u32> = (0..branches).filter(|b| b % 2 == parity).collect();
                if !own.is_empty() {
                    t.branches.insert(key.clone(), own);
                }
                kills.entry(test).or_default().extend(&mutants);
            }
        }
        container.lines = next_line - 1;
        coverage.containers.insert(qn.clone(), container);
    }

    let mut script = SimulatorScript {
        coverage_tables: coverage,
        mutant_kill_map: MutantKillMap {
            total: next_mutant,
            kills,
        },
        ..SimulatorScript::default()
    };
    script.compile_outcomes.insert(
        "AccountTest.test_transfer".into(),
        CompileOutcome {
            error: Some("cannot find symbol\n  symbol:   method transfer(com.example.Account,long)\n  location: variable account of type com.example.Account".into()),
            kind: DiagnosticKind::CompileError,
            ..CompileOutcome::default()
        },
    );
    for test in ["TextUtilsTest.test_capitalize", "Inventory_remove_Test.covers_remove_missing"] {
        script.test_verdicts.insert(
            test.into(),
            ScriptedVerdict {
                status: TestStatus::Failed,
                message: Some(if test.starts_with("TextUtils") {
                    "org.opentest4j.AssertionFailedError: expected: <Hello> but was: <hello>".into()
                } else {
                    "org.opentest4j.AssertionFailedError: expected: <true> but was: <false>".into()
                }),
            },
        );
    }
    script
}

fn test_method(name: &str, target: &str) -> String {
    format!(
        "    @Test\n    void {name}() {{\n        // exercises {target}\n        assertTrue(true);\n    }}\n"
    )
}

fn java_class(package: &str, class: &str, tests: &[String], extra: &str) -> String {
    format!(
        "```java\npackage {package};\n\nimport org.junit.jupiter.api.Test;\nimport static org.junit.jupiter.api.Assertions.*;\n\nclass {class} {{\n{}{extra}}}\n```",
        tests.join("\n")
    )
}

/// Scripted stand-in for the model.
fn reply(request: &CompletionRequest<'_>) -> Result<Completion, BackendError> {
    let session = request.session_id;
    let turn = request.messages.len() / 2;
    if session.ends_with("Calculator#max(int,int)") && request.seq == 0 {
        return Err(BackendError::Transport("connection reset by peer".into()));
    }
    let adapter = JavaAdapter::default();
    let prompt = &request.messages[0].content;
    let code = prompt.split("Return only the code\n\n").nth(1).unwrap_or_default();
    let container = adapter
        .parse_containers(Path::new("Unit.java"), code)
        .map_err(|e| BackendError::Rejected(e.to_string()))?
        .remove(0);
    let package = container.namespace.clone();
    let name = simple_name(&container).to_string();

    let text = if let Some(qn_sig) = session.strip_prefix("method:") {
        let sig = qn_sig.split_once('#').map(|(_, s)| s).unwrap_or_default();
        let method = container.method_by_signature(sig).map(|m| m.name.clone()).unwrap_or_default();
        let class = format!("{name}_{method}_Test");
        let mut tests = vec![
            test_method(&format!("covers_{method}_a"), sig),
            test_method(&format!("covers_{method}_b"), sig),
        ];
        if class == "Inventory_remove_Test" {
            tests.push(test_method("covers_remove_missing", sig));
        }
        java_class(&package, &class, &tests, "")
    } else if session.starts_with("constructor:") {
        let class = format!("{name}_Constructor_Test");
        let tests = vec![
            test_method("covers_constructor_a", "the constructors"),
            test_method("covers_constructor_b", "the constructors"),
        ];
        java_class(&package, &class, &tests, "")
    } else {
        let class = format!("{name}Test");
        let mut tests = Vec::new();
        if has_public_constructor(&container) {
            tests.push(test_method("test_constructor", "the constructor"));
        }
        for m in &container.methods {
            let test = if m.name == "capitalize" {
                if turn == 0 { "test_capitalize" } else { "test_capitalize_first_letter" }.to_string()
            } else {
                format!("test_{}", m.name)
            };
            tests.push(test_method(&test, &m.signature));
        }
        if name == "Account" && turn == 0 {
            tests.push(test_method("test_transfer", "transfer(Account,long)"));
        }
        let extra = if name == "TextUtils" {
            "\n    static class Fixture {\n        // shared sample strings\n    }\n"
        } else {
            ""
        };
        java_class(&package, &class, &tests, extra)
    };
    Ok(Completion::stop(text))
}

fn main() -> anyhow::Result<()> {
    let demo = Path::new("demo");
    let adapter = JavaAdapter::default();
    let project = discover_with(&demo.join("project"), &adapter)?;
    let script = build_script(&project);
    std::fs::write(
        demo.join("simulator.json"),
        serde_json::to_string_pretty(&script)? + "\n",
    )
    .context("writing simulator.json")?;

    let transcript = demo.join("transcript.jsonl");
    let gateway = LlmGateway::new(
        Box::new(ScriptedBackend::new(reply)),
        GatewayConfig {
            backoff_base: Duration::ZERO,
            ..GatewayConfig::default()
        },
    )?
    .with_recorder(TranscriptRecorder::to_file(&transcript)?);
    let toolchain = SimulatedToolchain::new(script, Box::new(JavaAdapter::default()));
    let prompts = PromptFactory::new(
        PromptTemplates::default(),
        adapter.language_label(),
        adapter.framework_label(),
        DEFAULT_DIAGNOSTIC_CAP,
    )?;
    let orchestrator = Orchestrator::new(
        &gateway,
        &toolchain,
        &adapter,
        &prompts,
        NamingScheme::default(),
        Limits::default(),
    )?;
    let run = orchestrator.run_combined(&project)?;
    let records = gateway.recorder().expect("attached").finish()?;
    println!(
        "recorded {} exchanges ({} counted requests) over {} units",
        records.len(),
        run.ledger.total_requests,
        run.units.len()
    );
    Ok(())
}
