use std::path::PathBuf;
use std::time::Duration;

use testgen_core::lang::{JavaAdapter, LanguageAdapter};
use testgen_core::llm::{GatewayConfig, LlmGateway, ScriptedBackend, TranscriptRecorder};
use testgen_core::orchestrator::{Limits, Orchestrator};
use testgen_core::prompts::{NamingScheme, PromptFactory, PromptTemplates, DEFAULT_DIAGNOSTIC_CAP};
use testgen_core::toolchain::simulated::{SimulatedToolchain, SimulatorScript};

pub struct Verdict {
    pub pass: bool,
    pub detail: String,
    /// Reported instead of the wall time of the check itself.
    pub runtime: Option<Duration>,
}

impl Verdict {
    pub fn new(pass: bool, detail: impl Into<String>) -> Self {
        Self {
            pass,
            detail: detail.into(),
            runtime: None,
        }
    }
}

pub fn demo_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../demo")
}

/// Scripted model plus simulated toolchain, wired like a real run.
pub struct Rig {
    pub gateway: LlmGateway,
    pub sim: SimulatedToolchain,
    pub adapter: JavaAdapter,
    pub prompts: PromptFactory,
}

impl Rig {
    pub fn new(backend: ScriptedBackend, script: SimulatorScript) -> anyhow::Result<Self> {
        let adapter = JavaAdapter::default();
        let prompts = PromptFactory::new(
            PromptTemplates::default(),
            adapter.language_label(),
            adapter.framework_label(),
            DEFAULT_DIAGNOSTIC_CAP,
        )?;
        let gateway = LlmGateway::new(
            Box::new(backend),
            GatewayConfig {
                backoff_base: Duration::ZERO,
                ..GatewayConfig::default()
            },
        )?
        .with_recorder(TranscriptRecorder::in_memory());
        Ok(Self {
            gateway,
            sim: SimulatedToolchain::new(script, Box::new(JavaAdapter::default())),
            adapter,
            prompts,
        })
    }

    pub fn orchestrator(&self) -> anyhow::Result<Orchestrator<'_>> {
        Ok(Orchestrator::new(
            &self.gateway,
            &self.sim,
            &self.adapter,
            &self.prompts,
            NamingScheme::default(),
            Limits::default(),
        )?)
    }
}

/// A JUnit 5 test class in a fenced block, as a model would answer.
pub fn fenced_class(package: &str, class: &str, body: &str) -> String {
    format!(
        "```java\npackage {package};\n\nimport org.junit.jupiter.api.Test;\nimport static org.junit.jupiter.api.Assertions.*;\n\nclass {class} {{\n{body}}}\n```"
    )
}

pub fn test_method(name: &str) -> String {
    format!("    @Test\n    void {name}() {{\n        assertTrue(true);\n    }}\n\n")
}
