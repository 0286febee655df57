use std::collections::BTreeMap;
use std::sync::Arc;

use testgen_core::lang::JavaAdapter;
use testgen_core::llm::ScriptedBackend;
use testgen_core::orchestrator::GenerationRun;
use testgen_core::prompts::NamingScheme;
use testgen_core::source_model::{discover_with, ProjectModel};
use testgen_core::toolchain::simulated::{ScriptedVerdict, SimulatorScript};
use testgen_core::toolchain::TestStatus;

use crate::common::{demo_dir, fenced_class, test_method, Rig, Verdict};

const GENERATION_PLUS_REPAIRS: u32 = 6;

/// Session id → (package, expected test class name).
fn session_classes(project: &ProjectModel) -> BTreeMap<String, (String, String)> {
    let naming = NamingScheme::default();
    let mut out = BTreeMap::new();
    for c in &project.containers {
        let qn = &c.qualified_name;
        let pkg = c.namespace.clone();
        out.insert(format!("class:{qn}"), (pkg.clone(), naming.class_test_name(c)));
        out.insert(format!("constructor:{qn}"), (pkg.clone(), naming.constructor_test_name(c)));
        for (sig, name) in naming.method_test_names(c) {
            out.insert(format!("method:{qn}#{sig}"), (pkg.clone(), name));
        }
    }
    out
}

/// Even turns do not compile, odd turns compile but fail.
fn never_passing(classes: Arc<BTreeMap<String, (String, String)>>) -> ScriptedBackend {
    ScriptedBackend::replies(move |req| {
        let (pkg, class) = classes
            .get(req.session_id)
            .cloned()
            .unwrap_or_else(|| ("p".into(), "UnknownTest".into()));
        let turn = req.messages.len() / 2;
        let body = if turn % 2 == 0 {
            "    @Test\n    void does_not_compile() {\n        int x = ;\n    }\n".to_string()
        } else {
            test_method("always_fails")
        };
        fenced_class(&pkg, &class, &body)
    })
}

fn first_turn_success(classes: Arc<BTreeMap<String, (String, String)>>) -> ScriptedBackend {
    ScriptedBackend::replies(move |req| {
        let (pkg, class) = classes
            .get(req.session_id)
            .cloned()
            .unwrap_or_else(|| ("p".into(), "UnknownTest".into()));
        fenced_class(&pkg, &class, &(test_method("smoke_one") + &test_method("smoke_two")))
    })
}

struct Observed {
    units: usize,
    total_requests: u64,
    violations: Vec<String>,
}

fn observe(rig: &Rig, runs: &[GenerationRun], expected: u32) -> Observed {
    let records = rig.gateway.recorder().map(|r| r.records()).unwrap_or_default();
    let mut per_session: BTreeMap<&str, u32> = BTreeMap::new();
    for r in records.iter().filter(|r| r.counted) {
        *per_session.entry(r.session_id.as_str()).or_default() += 1;
    }
    let mut violations = Vec::new();
    let mut units = 0;
    let mut total_requests = 0;
    for run in runs {
        total_requests += run.ledger.total_requests;
        for (id, u) in &run.units {
            units += 1;
            let logged = per_session.get(id.as_str()).copied().unwrap_or(0);
            if u.stats.requests != expected || logged != expected || u.artifact.aborted.is_some() {
                violations.push(format!("{id}: {} requests, {logged} in transcript", u.stats.requests));
            }
        }
    }
    Observed {
        units,
        total_requests,
        violations,
    }
}

pub fn check() -> anyhow::Result<Verdict> {
    let adapter = JavaAdapter::default();
    let project = discover_with(&demo_dir().join("project"), &adapter)?;
    let classes = Arc::new(session_classes(&project));
    let mut script = SimulatorScript::default();
    for (_, class) in classes.values() {
        script.test_verdicts.insert(
            format!("{class}.always_fails"),
            ScriptedVerdict {
                status: TestStatus::Failed,
                message: Some("expected: <1> but was: <2>".into()),
            },
        );
    }

    let rig = Rig::new(never_passing(classes.clone()), script.clone())?;
    let o = rig.orchestrator()?;
    let runs = [o.run_class_level(&project)?, o.run_method_level(&project)?];
    let never = observe(&rig, &runs, GENERATION_PLUS_REPAIRS);
    let never_passing_tests: u64 = runs.iter().map(|r| r.ledger.passing_tests).sum();

    let rig = Rig::new(first_turn_success(classes), script)?;
    let o = rig.orchestrator()?;
    let runs = [o.run_class_level(&project)?, o.run_method_level(&project)?];
    let first = observe(&rig, &runs, 1);

    let pass = never.violations.is_empty()
        && first.violations.is_empty()
        && never.total_requests == u64::from(GENERATION_PLUS_REPAIRS) * never.units as u64
        && first.total_requests == first.units as u64
        && never_passing_tests == 0
        && never.units > 0;
    let mut detail = format!(
        "never passing: {} units, {} requests; first-turn success: {} units, {} requests",
        never.units, never.total_requests, first.units, first.total_requests
    );
    for v in never.violations.iter().chain(&first.violations).take(3) {
        detail.push_str(&format!("; {v}"));
    }
    Ok(Verdict::new(pass, detail))
}
