use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use testgen_core::lang::{JavaAdapter, LanguageAdapter};
use testgen_core::llm::ScriptedBackend;
use testgen_core::orchestrator::{GenerationRun, GranularityMode};
use testgen_core::source_model::ProjectModel;
use testgen_core::toolchain::simulated::{
    ContainerCoverage, CoverageTables, MethodCoverage, ScriptedVerdict, SimulatorScript,
    TestCoverage,
};
use testgen_core::toolchain::TestStatus;

use crate::common::{fenced_class, test_method, Rig, Verdict};

const TRIALS: u64 = 50;
const CONTAINERS: usize = 24;
const CORPUS_SEED: u64 = 0x5eed;
const CTOR: &str = "ctor";

struct Member {
    token: String,
    signature: String,
    branches: u32,
    lines: Vec<u32>,
}

struct SynthContainer {
    qualified_name: String,
    name: String,
    members: Vec<Member>,
}

fn corpus() -> anyhow::Result<(ProjectModel, Vec<SynthContainer>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(CORPUS_SEED);
    let adapter = JavaAdapter::default();
    let mut containers = Vec::new();
    let mut synth = Vec::new();
    for i in 0..CONTAINERS {
        let name = format!("Widget{i}");
        let with_ctor = rng.random_bool(0.4);
        let n_methods = rng.random_range(4..=7);
        let mut src = format!("package synth;\n\npublic class {name} {{\n    private int seed;\n\n");
        if with_ctor {
            src.push_str(&format!("    public {name}(int seed) {{\n        this.seed = seed;\n    }}\n\n"));
        }
        for j in 0..n_methods {
            src.push_str(&format!("    public int op{j}(int x) {{\n        return x + seed + {j};\n    }}\n\n"));
        }
        src.push_str("}\n");
        let path = PathBuf::from(format!("src/main/java/synth/{name}.java"));
        let mut parsed = adapter.parse_containers(&path, &src)?;
        anyhow::ensure!(parsed.len() == 1, "synthetic source {name} did not parse");
        let c = parsed.remove(0);

        let mut members = Vec::new();
        let mut next_line = 1;
        let mut push = |token: String, signature: String, branches: u32| {
            let n = 2 + branches;
            members.push(Member {
                token,
                signature,
                branches,
                lines: (next_line..next_line + n).collect(),
            });
            next_line += n;
        };
        for sig in &c.constructors {
            push(CTOR.into(), sig.clone(), rng.random_range(0..=1));
        }
        for m in &c.methods {
            push(m.name.clone(), m.signature.clone(), rng.random_range(0..=4));
        }
        synth.push(SynthContainer {
            qualified_name: c.qualified_name.clone(),
            name,
            members,
        });
        containers.push(c);
    }
    let project = ProjectModel {
        root_path: PathBuf::from("synthetic"),
        language_id: "java".into(),
        containers,
    };
    Ok((project, synth))
}

/// What the class-level phase leaves covered for one member.
#[derive(Clone)]
struct ClassCoverage {
    /// None: the class reply has no test for the member.
    test: Option<(Vec<u32>, Vec<u32>)>,
    failing: bool,
}

struct Plan {
    full: bool,
    broken_first_turn: BTreeSet<String>,
    /// qualified name → member token → phase-1 coverage
    class_cov: BTreeMap<String, BTreeMap<String, ClassCoverage>>,
}

fn plan(trial: u64, synth: &[SynthContainer]) -> Plan {
    let mut rng = ChaCha8Rng::seed_from_u64(trial);
    let full = trial.is_multiple_of(5);
    let p_full = if full { 1.0 } else { rng.random_range(0.2..0.9) };
    let mut class_cov = BTreeMap::new();
    let mut broken_first_turn = BTreeSet::new();
    for c in synth {
        if rng.random_bool(0.2) {
            broken_first_turn.insert(format!("class:{}", c.qualified_name));
        }
        let mut per = BTreeMap::new();
        for m in &c.members {
            let sessions = [
                format!("method:{}#{}", c.qualified_name, m.signature),
                format!("constructor:{}", c.qualified_name),
            ];
            let session = if m.token == CTOR { &sessions[1] } else { &sessions[0] };
            if rng.random_bool(0.2) {
                broken_first_turn.insert(session.clone());
            }
            let all_branches: Vec<u32> = (0..m.branches).collect();
            let cov = if full || rng.random_bool(p_full) {
                ClassCoverage {
                    test: Some((m.lines.clone(), all_branches)),
                    failing: false,
                }
            } else if rng.random_bool(0.15) {
                ClassCoverage {
                    test: None,
                    failing: false,
                }
            } else {
                let mut lines = m.lines.clone();
                let branches = if m.branches > 0 {
                    let keep = rng.random_range(0..m.branches);
                    all_branches.into_iter().take(keep as usize).collect()
                } else {
                    lines.pop();
                    Vec::new()
                };
                ClassCoverage {
                    test: Some((lines, branches)),
                    failing: rng.random_bool(0.1),
                }
            };
            per.insert(m.token.clone(), cov);
        }
        class_cov.insert(c.qualified_name.clone(), per);
    }
    Plan {
        full,
        broken_first_turn,
        class_cov,
    }
}

fn method_test_class(c: &SynthContainer, token: &str) -> String {
    if token == CTOR {
        format!("{}_Constructor_Test", c.name)
    } else {
        format!("{}_{token}_Test", c.name)
    }
}

fn script(plan: &Plan, synth: &[SynthContainer]) -> SimulatorScript {
    let mut s = SimulatorScript::default();
    let mut tables = CoverageTables::default();
    for c in synth {
        let qn = &c.qualified_name;
        let mut container = ContainerCoverage::default();
        for m in &c.members {
            container.lines += m.lines.len() as u32;
            container.methods.insert(
                m.signature.clone(),
                MethodCoverage {
                    lines: m.lines.clone(),
                    branches: m.branches,
                },
            );
            let key = format!("{qn}#{}", m.signature);
            let full = TestCoverage {
                lines: BTreeMap::from([(qn.clone(), m.lines.clone())]),
                branches: BTreeMap::from([(key.clone(), (0..m.branches).collect())]),
            };
            tables.tests.insert(
                format!("{}.covers_{}", method_test_class(c, &m.token), m.token),
                full,
            );
            let cov = &plan.class_cov[qn][&m.token];
            if let Some((lines, branches)) = &cov.test {
                let test = format!("{}Test.test_{}", c.name, m.token);
                tables.tests.insert(
                    test.clone(),
                    TestCoverage {
                        lines: BTreeMap::from([(qn.clone(), lines.clone())]),
                        branches: BTreeMap::from([(key, branches.clone())]),
                    },
                );
                if cov.failing {
                    s.test_verdicts.insert(
                        test,
                        ScriptedVerdict {
                            status: TestStatus::Failed,
                            message: Some("expected: <3> but was: <4>".into()),
                        },
                    );
                }
            }
        }
        tables.containers.insert(qn.clone(), container);
    }
    s.coverage_tables = tables;
    s
}

struct Shape {
    package: String,
    class_tests: Vec<String>,
    /// session id → (test class, single test name)
    method_tests: BTreeMap<String, (String, String)>,
}

fn backend(plan: &Plan, synth: &[SynthContainer]) -> ScriptedBackend {
    let mut shapes: BTreeMap<String, Shape> = BTreeMap::new();
    for c in synth {
        let mut method_tests = BTreeMap::new();
        let mut class_tests = Vec::new();
        for m in &c.members {
            let session = if m.token == CTOR {
                format!("constructor:{}", c.qualified_name)
            } else {
                format!("method:{}#{}", c.qualified_name, m.signature)
            };
            method_tests.insert(session, (method_test_class(c, &m.token), format!("covers_{}", m.token)));
            if plan.class_cov[&c.qualified_name][&m.token].test.is_some() {
                class_tests.push(format!("test_{}", m.token));
            }
        }
        shapes.insert(
            c.qualified_name.clone(),
            Shape {
                package: "synth".into(),
                class_tests,
                method_tests,
            },
        );
    }
    let shapes = Arc::new(shapes);
    let broken = Arc::new(plan.broken_first_turn.clone());
    ScriptedBackend::replies(move |req| {
        let session = req.session_id;
        let qn = session
            .split_once(':')
            .map(|(_, rest)| rest.split('#').next().unwrap_or(rest))
            .unwrap_or_default();
        let Some(shape) = shapes.get(qn) else {
            return "no idea".into();
        };
        let simple = qn.rsplit('.').next().unwrap_or(qn);
        let (class, tests) = if session.starts_with("class:") {
            (format!("{simple}Test"), shape.class_tests.clone())
        } else {
            match shape.method_tests.get(session) {
                Some((class, test)) => (class.clone(), vec![test.clone()]),
                None => return "no idea".into(),
            }
        };
        if req.messages.len() / 2 == 0 && broken.contains(session) {
            return fenced_class(&shape.package, &class, "    @Test\n    void half() {\n        int x = ;\n    }\n");
        }
        let body: String = tests.iter().map(|t| test_method(t)).collect();
        fenced_class(&shape.package, &class, &body)
    })
}

/// Method-level units the hybrid phase 2 must target, derived from the plan.
fn expected_targets(plan: &Plan, synth: &[SynthContainer]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for c in synth {
        for m in &c.members {
            let cov = &plan.class_cov[&c.qualified_name][&m.token];
            let (lines, branches) = match (&cov.test, cov.failing) {
                (Some((l, b)), false) => (l.len(), b.len() as u32),
                _ => (0, 0),
            };
            let uncovered = if m.branches > 0 {
                branches < m.branches
            } else {
                lines < m.lines.len()
            };
            if uncovered {
                out.insert(if m.token == CTOR {
                    format!("constructor:{}", c.qualified_name)
                } else {
                    format!("method:{}#{}", c.qualified_name, m.signature)
                });
            }
        }
    }
    out
}

struct TrialResult {
    full: bool,
    class: u64,
    method: u64,
    hybrid: u64,
    hybrid_expected: u64,
    targets_match: bool,
    fallback: bool,
    /// (lines, branches) for class, method, combined
    coverage: Option<[(u64, u64); 3]>,
}

struct Summary {
    corpus: (usize, usize),
    trials: Vec<TrialResult>,
    cost_time: Duration,
    union_time: Duration,
}

fn covered(run: &GenerationRun) -> Option<(u64, u64)> {
    run.coverage
        .as_ref()
        .map(|c| (c.lines_covered, c.branches_covered))
}

fn run_trials() -> anyhow::Result<Summary> {
    let (project, synth) = corpus()?;
    let corpus_size = (project.containers.len(), project.method_count());
    let mut trials = Vec::new();
    let mut cost_time = Duration::ZERO;
    let mut union_time = Duration::ZERO;
    for trial in 0..TRIALS {
        let start = Instant::now();
        let plan = plan(trial, &synth);
        let rig = Rig::new(backend(&plan, &synth), script(&plan, &synth))?;
        let o = rig.orchestrator()?;
        let class = o.run_class_level(&project)?;
        let method = o.run_method_level(&project)?;
        let hybrid = o.run_hybrid(&project)?;
        let targets = expected_targets(&plan, &synth);
        let hybrid_units: BTreeSet<String> = hybrid
            .units
            .keys()
            .filter(|k| !k.starts_with("class:"))
            .cloned()
            .collect();
        let hybrid_expected = class.ledger.total_requests
            + targets
                .iter()
                .map(|t| method.units.get(t).map_or(0, |u| u64::from(u.stats.requests)))
                .sum::<u64>();
        cost_time += start.elapsed();

        let start = Instant::now();
        let combined = o.combine(&project, &class, &method, GranularityMode::Combined)?;
        let coverage = match (covered(&class), covered(&method), covered(&combined)) {
            (Some(a), Some(b), Some(c)) => Some([a, b, c]),
            _ => None,
        };
        union_time += start.elapsed();

        trials.push(TrialResult {
            full: plan.full,
            class: class.ledger.total_requests,
            method: method.ledger.total_requests,
            hybrid: hybrid.ledger.total_requests,
            hybrid_expected,
            targets_match: hybrid_units == targets,
            fallback: hybrid.hybrid_fallback,
            coverage,
        });
    }
    Ok(Summary {
        corpus: corpus_size,
        trials,
        cost_time,
        union_time,
    })
}

fn summary() -> &'static Result<Summary, String> {
    static SUMMARY: OnceLock<Result<Summary, String>> = OnceLock::new();
    SUMMARY.get_or_init(|| run_trials().map_err(|e| format!("{e:#}")))
}

pub fn check_cost() -> anyhow::Result<Verdict> {
    let s = summary().as_ref().map_err(|e| anyhow::anyhow!("{e}"))?;
    let (containers, methods) = s.corpus;
    let dominated = s
        .trials
        .iter()
        .filter(|t| t.hybrid <= t.class + t.method)
        .count();
    let full: Vec<&TrialResult> = s.trials.iter().filter(|t| t.full).collect();
    let full_equal = full.iter().filter(|t| t.hybrid == t.class).count();
    let oracle = s
        .trials
        .iter()
        .filter(|t| t.targets_match && t.hybrid == t.hybrid_expected && !t.fallback)
        .count();
    let spent: u64 = s.trials.iter().map(|t| t.class + t.method).sum();
    let hybrid: u64 = s.trials.iter().map(|t| t.hybrid).sum();
    let savings = 1.0 - hybrid as f64 / spent as f64;
    let pass = containers >= 20
        && methods >= 100
        && s.trials.len() == TRIALS as usize
        && dominated == s.trials.len()
        && !full.is_empty()
        && full_equal == full.len()
        && oracle == s.trials.len();
    let detail = format!(
        "{containers} containers / {methods} methods; dominance {dominated}/{}; full-coverage trials hybrid = class {full_equal}/{}; phase-2 targets match coverage oracle {oracle}/{}; savings vs class + method {:.1}% (reference: 20.3%)",
        s.trials.len(),
        full.len(),
        s.trials.len(),
        savings * 100.0
    );
    Ok(Verdict {
        pass,
        detail,
        runtime: Some(s.cost_time),
    })
}

pub fn check_union() -> anyhow::Result<Verdict> {
    let s = summary().as_ref().map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut ok = 0;
    let mut strict = 0;
    let mut first_bad = None;
    for (i, t) in s.trials.iter().enumerate() {
        let Some([class, method, combined]) = t.coverage else {
            first_bad.get_or_insert(format!("trial {i}: coverage missing"));
            continue;
        };
        let good = combined.0 >= class.0.max(method.0) && combined.1 >= class.1.max(method.1);
        if good {
            ok += 1;
            if combined.0 > class.0 || combined.1 > class.1 {
                strict += 1;
            }
        } else {
            first_bad.get_or_insert(format!(
                "trial {i}: class {class:?} method {method:?} combined {combined:?}"
            ));
        }
    }
    let mut detail = format!(
        "{ok}/{} trials monotone, {strict} strictly above class-level",
        s.trials.len()
    );
    if let Some(b) = first_bad {
        detail.push_str(&format!("; {b}"));
    }
    Ok(Verdict {
        pass: ok == s.trials.len() && !s.trials.is_empty(),
        detail,
        runtime: Some(s.union_time),
    })
}
