use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::prelude::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use testgen_core::lang::{JavaAdapter, LanguageAdapter};
use testgen_core::sanitizer::{sanitize, RemovalKind, DEFAULT_PRUNE_ROUNDS};
use testgen_core::toolchain::simulated::{
    CompileOutcome, ScriptedVerdict, SimulatedToolchain, SimulatorScript,
};
use testgen_core::toolchain::{DiagnosticKind, TestFile, TestStatus, Toolchain, Workspace};

use crate::common::Verdict;

const FIXTURES: u64 = 100;

struct Fixture {
    files: Vec<TestFile>,
    script: SimulatorScript,
    /// Tests carrying a compile error of their own.
    broken: BTreeSet<(PathBuf, String)>,
    /// Tests scripted to fail when run.
    failing: BTreeSet<(PathBuf, String)>,
}

fn method(name: &str, test: bool) -> String {
    if test {
        format!("    @Test\n    void {name}() {{\n        int x = 1;\n    }}\n\n")
    } else {
        format!("    int {name}() {{\n        return 0;\n    }}\n\n")
    }
}

fn indent(block: &str) -> String {
    block
        .lines()
        .map(|l| if l.is_empty() { "\n".to_string() } else { format!("    {l}\n") })
        .collect()
}

fn fixture(seed: u64) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut files = Vec::new();
    // (key, file path, test name within the file when it is a test)
    let mut entities: Vec<(String, PathBuf, Option<String>)> = Vec::new();
    for k in 0..rng.random_range(1..=3) {
        let class = format!("Case{k}Test");
        let path = PathBuf::from(format!("src/test/java/p/{class}.java"));
        let mut src = String::from(
            "package p;\n\nimport org.junit.jupiter.api.Nested;\nimport org.junit.jupiter.api.Test;\n\n",
        );
        src.push_str(&format!("class {class} {{\n\n"));
        entities.push((class.clone(), path.clone(), None));
        for t in 0..rng.random_range(2..=6) {
            let name = format!("t{t}");
            src.push_str(&method(&name, true));
            let key = format!("{class}.{name}");
            entities.push((key.clone(), path.clone(), Some(key)));
        }
        for h in 0..rng.random_range(0..=3) {
            let name = format!("h{h}");
            src.push_str(&method(&name, false));
            entities.push((format!("{class}.{name}"), path.clone(), None));
        }
        if rng.random_bool(0.5) {
            src.push_str("    @Nested\n    class Inner {\n\n");
            entities.push((format!("{class}.Inner"), path.clone(), None));
            for n in 0..rng.random_range(1..=3) {
                let name = format!("n{n}");
                src.push_str(&indent(&method(&name, true)));
                let key = format!("{class}.Inner.{name}");
                entities.push((key.clone(), path.clone(), Some(key)));
            }
            src.push_str("    }\n\n");
        }
        if rng.random_bool(0.4) {
            src.push_str("    static class Fixture {\n        int value;\n    }\n");
            entities.push((format!("{class}.Fixture"), path.clone(), None));
        }
        src.push_str("}\n");
        if rng.random_bool(0.4) {
            src.push_str(&format!("\nclass Support{k} {{\n    int value;\n}}\n"));
            entities.push((format!("Support{k}"), path.clone(), None));
        }
        files.push(TestFile { path, source: src });
    }

    let keys: Vec<String> = entities.iter().map(|(k, _, _)| k.clone()).collect();
    let mut script = SimulatorScript::default();
    let mut broken = BTreeSet::new();
    let mut failing = BTreeSet::new();
    for (key, path, test) in &entities {
        if key.starts_with("Case") && !key.contains('.') {
            continue;
        }
        let roll: f64 = rng.random();
        let outcome = if roll < 0.08 {
            Some(CompileOutcome {
                error: Some(format!("cannot find symbol in {key}")),
                ..CompileOutcome::default()
            })
        } else if roll < 0.15 {
            let other = keys.choose(&mut rng).expect("entities exist").clone();
            Some(CompileOutcome {
                requires: vec![format!("{other}_gone"), other]
                    .into_iter()
                    .skip(usize::from(rng.random_bool(0.7)))
                    .collect(),
                ..CompileOutcome::default()
            })
        } else if roll < 0.155 {
            Some(CompileOutcome {
                error: Some("error: compilation failed".into()),
                attributable: false,
                ..CompileOutcome::default()
            })
        } else if roll < 0.16 {
            Some(CompileOutcome {
                error: Some("package org.example.missing does not exist".into()),
                kind: DiagnosticKind::ImportError,
                ..CompileOutcome::default()
            })
        } else {
            None
        };
        if let Some(test) = test {
            let id = (path.clone(), test.clone());
            if outcome.as_ref().is_some_and(|o| o.error.is_some()) {
                broken.insert(id);
            } else if rng.random_bool(0.25) {
                script.test_verdicts.insert(
                    test.clone(),
                    ScriptedVerdict {
                        status: TestStatus::Failed,
                        message: Some("expected: <true> but was: <false>".into()),
                    },
                );
                failing.insert(id);
            }
        }
        if let Some(o) = outcome {
            script.compile_outcomes.insert(key.clone(), o);
        }
    }
    Fixture {
        files,
        script,
        broken,
        failing,
    }
}

#[derive(Default)]
struct Tally {
    clean: u32,
    partition: u32,
    tests: u32,
    non_compiling: u32,
    non_passing: u32,
    passing: u32,
    whole_files: u32,
}

pub fn check() -> anyhow::Result<Verdict> {
    let adapter = JavaAdapter::default();
    let mut tally = Tally::default();
    let mut problems = Vec::new();
    for seed in 0..FIXTURES {
        let fx = fixture(seed);
        let expected: BTreeMap<(PathBuf, String), ()> = fx
            .files
            .iter()
            .flat_map(|f| {
                adapter
                    .outline(&f.source)
                    .test_ids()
                    .into_iter()
                    .map(|t| ((f.path.clone(), t), ()))
            })
            .collect();
        let sim = SimulatedToolchain::new(fx.script.clone(), Box::new(JavaAdapter::default()));
        let ws = Workspace::virtual_workspace(&format!("fixture_{seed}"));
        let art = sanitize(
            &format!("fixture:{seed}"),
            fx.files.clone(),
            &BTreeSet::new(),
            &sim,
            &ws,
            &adapter,
            DEFAULT_PRUNE_ROUNDS,
        )?;

        let remaining = sim.compile(&ws, &art.files)?;
        if remaining.is_empty() {
            tally.clean += 1;
        } else {
            problems.push(format!("fixture {seed}: {} diagnostics left", remaining.len()));
        }

        let counts = art.counts();
        let mut seen: BTreeMap<(PathBuf, String), TestStatus> = BTreeMap::new();
        let mut duplicate = false;
        for v in &art.per_test_verdicts {
            let id = (v.test_id.file.clone(), v.test_id.name.clone());
            duplicate |= seen.insert(id, v.status).is_some();
        }
        let passed = seen.values().filter(|s| **s == TestStatus::Passed).count() as u32;
        let ids_match = seen.keys().eq(expected.keys());
        let partition = passed + counts.n_non_compiling + counts.n_non_passing == counts.n_generated
            && counts.n_generated as usize == expected.len()
            && ids_match
            && !duplicate;
        let broken_ok = fx
            .broken
            .iter()
            .all(|id| seen.get(id) == Some(&TestStatus::NotCompiled));
        let failing_ok = fx
            .failing
            .iter()
            .all(|id| seen.get(id) != Some(&TestStatus::Passed));
        if partition && broken_ok && failing_ok {
            tally.partition += 1;
        } else {
            problems.push(format!(
                "fixture {seed}: partition {partition}, broken {broken_ok}, failing {failing_ok}"
            ));
        }
        tally.tests += counts.n_generated;
        tally.non_compiling += counts.n_non_compiling;
        tally.non_passing += counts.n_non_passing;
        tally.passing += passed;
        tally.whole_files += art
            .removals
            .iter()
            .filter(|r| r.kind == RemovalKind::File)
            .count() as u32;
    }
    let pass = tally.clean == FIXTURES as u32 && tally.partition == FIXTURES as u32;
    let mut detail = format!(
        "clean {}/{FIXTURES}, invariant {}/{FIXTURES}; {} tests = {} passing + {} non-compiling + {} non-passing; {} whole files dropped",
        tally.clean,
        tally.partition,
        tally.tests,
        tally.passing,
        tally.non_compiling,
        tally.non_passing,
        tally.whole_files
    );
    if let Some(p) = problems.first() {
        detail.push_str(&format!("; {p}"));
    }
    Ok(Verdict::new(pass, detail))
}
