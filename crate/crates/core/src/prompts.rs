//! Generation and repair prompts, and the test class naming scheme.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::source_model::{ContainerUnit, CONSTRUCTOR_SENTINEL};
use crate::toolchain::{Diagnostic, TestVerdict};

pub const DEFAULT_DIAGNOSTIC_CAP: usize = 8000;

const PLACEHOLDERS: &[&str] = &[
    "class_content",
    "method",
    "test_class_name",
    "language",
    "framework",
    "errors",
];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("prompt template `{0}` is empty")]
    EmptyTemplate(&'static str),
    #[error("prompt template `{template}` lacks placeholder {{{placeholder}}}")]
    MissingPlaceholder {
        template: &'static str,
        placeholder: &'static str,
    },
    #[error("prompt template `{template}` uses unsupported placeholder {{{placeholder}}}")]
    UnknownPlaceholder {
        template: &'static str,
        placeholder: String,
    },
    #[error("naming pattern `{0}` must contain {{class}}")]
    BadNamingPattern(String),
    #[error("container {container} has no method `{method}`")]
    UnknownMethod { container: String, method: String },
    #[error("repair prompt needs non-empty diagnostics")]
    EmptyDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PromptTemplates {
    pub class_template: String,
    pub method_template: String,
    pub constructor_template: String,
    pub repair_template: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self {
            class_template: "The following class is missing unit tests. Please generate all tests \
needed to achieve 100% code coverage using {language} and {framework}. Return only the code\n\n\
{class_content}"
                .into(),
            method_template: "The following class is missing unit tests for method {method}. \
Please generate all tests needed to achieve 100% code coverage for method {method}, using \
{language} and {framework}.\nThe name of the generated test class must be {test_class_name}. \
Return only the code\n\n{class_content}"
                .into(),
            constructor_template: "The following class is missing unit tests for the constructors \
of the class. Please generate all tests needed to achieve 100% code coverage for the \
constructors of the class, using {language} and {framework}.\nThe name of the generated test \
class must be {test_class_name}. Return only the code\n\n{class_content}"
                .into(),
            repair_template: "The tests you generated produced the following errors. Fix the tests \
and return only the corrected code:\n{errors}"
                .into(),
        }
    }
}

fn placeholders_in(template: &str) -> Vec<String> {
    let mut found = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close)
                if !after[..close].is_empty()
                    && after[..close]
                        .chars()
                        .all(|c| c.is_ascii_lowercase() || c == '_') =>
            {
                found.push(after[..close].to_string());
                rest = &after[close + 1..];
            }
            _ => rest = after,
        }
    }
    found
}

/// Substitutes `{name}` placeholders in one pass; substituted values are
/// never rescanned.
fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 256);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let hit = after.find('}').and_then(|close| {
            vars.iter()
                .find(|(k, _)| *k == &after[..close])
                .map(|(_, v)| (close, *v))
        });
        match hit {
            Some((close, value)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

impl PromptTemplates {
    /// Each template must use all of its required placeholders and nothing
    /// outside the known set.
    pub fn validate(&self) -> Result<(), PromptError> {
        let spec: [(&'static str, &String, &[&'static str], &[&'static str]); 4] = [
            (
                "class_template",
                &self.class_template,
                &["class_content", "language", "framework"],
                &["test_class_name"],
            ),
            (
                "method_template",
                &self.method_template,
                &["class_content", "method", "test_class_name", "language", "framework"],
                &[],
            ),
            (
                "constructor_template",
                &self.constructor_template,
                &["class_content", "test_class_name", "language", "framework"],
                &[],
            ),
            ("repair_template", &self.repair_template, &["errors"], &[]),
        ];
        for (name, template, required, optional) in spec {
            if template.trim().is_empty() {
                return Err(PromptError::EmptyTemplate(name));
            }
            let used = placeholders_in(template);
            for p in &used {
                if PLACEHOLDERS.contains(&p.as_str())
                    && !required.contains(&p.as_str())
                    && !optional.contains(&p.as_str())
                    || !PLACEHOLDERS.contains(&p.as_str())
                {
                    return Err(PromptError::UnknownPlaceholder {
                        template: name,
                        placeholder: p.clone(),
                    });
                }
            }
            for r in required {
                if !used.iter().any(|u| u == r) {
                    return Err(PromptError::MissingPlaceholder {
                        template: name,
                        placeholder: r,
                    });
                }
            }
            if used.iter().filter(|u| *u == "class_content").count() > 1 {
                return Err(PromptError::UnknownPlaceholder {
                    template: name,
                    placeholder: "class_content (repeated)".into(),
                });
            }
        }
        Ok(())
    }
}

/// Patterns for generated test class names. `{class}` is the container's
/// simple path with dots replaced by underscores.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct NamingScheme {
    pub class_pattern: String,
    pub method_pattern: String,
    pub constructor_pattern: String,
}

impl Default for NamingScheme {
    fn default() -> Self {
        Self {
            class_pattern: "{class}Test".into(),
            method_pattern: "{class}_{method}_Test".into(),
            constructor_pattern: "{class}_Constructor_Test".into(),
        }
    }
}

impl NamingScheme {
    pub fn validate(&self) -> Result<(), PromptError> {
        for p in [&self.class_pattern, &self.method_pattern, &self.constructor_pattern] {
            if !p.contains("{class}") {
                return Err(PromptError::BadNamingPattern(p.clone()));
            }
        }
        if !self.method_pattern.contains("{method}") {
            return Err(PromptError::BadNamingPattern(self.method_pattern.clone()));
        }
        Ok(())
    }

    pub fn class_test_name(&self, c: &ContainerUnit) -> String {
        render(&self.class_pattern, &[("class", &c.class_token())])
    }

    pub fn constructor_test_name(&self, c: &ContainerUnit) -> String {
        render(&self.constructor_pattern, &[("class", &c.class_token())])
    }

    /// Test class name per method signature, in method order. Overloads
    /// after the first get `_2`, `_3`, ... appended to the method token;
    /// names already taken are bumped further.
    pub fn method_test_names(&self, c: &ContainerUnit) -> Vec<(String, String)> {
        let token = c.class_token();
        let mut taken: BTreeSet<String> = BTreeSet::new();
        taken.insert(self.class_test_name(c));
        taken.insert(self.constructor_test_name(c));
        let mut out = Vec::new();
        for m in &c.methods {
            let mut k = c
                .methods
                .iter()
                .take_while(|o| o.signature != m.signature)
                .filter(|o| o.name == m.name)
                .count()
                + 1;
            loop {
                let method_token = if k == 1 {
                    m.name.clone()
                } else {
                    format!("{}_{k}", m.name)
                };
                let name = render(
                    &self.method_pattern,
                    &[("class", &token), ("method", &method_token)],
                );
                if taken.insert(name.clone()) {
                    out.push((m.signature.clone(), name));
                    break;
                }
                k += 1;
            }
        }
        out
    }
}

pub struct PromptFactory {
    templates: PromptTemplates,
    language: String,
    framework: String,
    diagnostic_cap: usize,
}

impl PromptFactory {
    pub fn new(
        templates: PromptTemplates,
        language: &str,
        framework: &str,
        diagnostic_cap: usize,
    ) -> Result<Self, PromptError> {
        templates.validate()?;
        Ok(Self {
            templates,
            language: language.to_string(),
            framework: framework.to_string(),
            diagnostic_cap,
        })
    }

    pub fn build_class_prompt(&self, c: &ContainerUnit, test_class_name: &str) -> String {
        render(
            &self.templates.class_template,
            &[
                ("class_content", &c.source_text),
                ("language", &self.language),
                ("framework", &self.framework),
                ("test_class_name", test_class_name),
            ],
        )
    }

    /// `method` is a method name, a signature, or the constructor sentinel.
    pub fn build_method_prompt(
        &self,
        c: &ContainerUnit,
        method: &str,
        test_class_name: &str,
    ) -> Result<String, PromptError> {
        let vars = |m: &str| -> String {
            let template = if m == CONSTRUCTOR_SENTINEL {
                &self.templates.constructor_template
            } else {
                &self.templates.method_template
            };
            render(
                template,
                &[
                    ("class_content", &c.source_text),
                    ("method", m),
                    ("test_class_name", test_class_name),
                    ("language", &self.language),
                    ("framework", &self.framework),
                ],
            )
        };
        if method == CONSTRUCTOR_SENTINEL {
            return Ok(vars(method));
        }
        if c.methods.iter().any(|m| m.name == method || m.signature == method) {
            return Ok(vars(method));
        }
        Err(PromptError::UnknownMethod {
            container: c.qualified_name.clone(),
            method: method.to_string(),
        })
    }

    pub fn build_repair_prompt(&self, diagnostics: &str) -> Result<String, PromptError> {
        if diagnostics.trim().is_empty() {
            return Err(PromptError::EmptyDiagnostics);
        }
        let errors = truncate_diagnostics(diagnostics, self.diagnostic_cap);
        Ok(render(&self.templates.repair_template, &[("errors", &errors)]))
    }
}

/// Keeps `cap` characters: the first 75% and the last 25%, joined by a
/// marker line stating how many characters were dropped.
pub fn truncate_diagnostics(text: &str, cap: usize) -> String {
    let total = text.chars().count();
    if total <= cap {
        return text.to_string();
    }
    let head = cap * 3 / 4;
    let tail = cap - head;
    let head_end = text.char_indices().nth(head).map(|(i, _)| i).unwrap_or(text.len());
    let tail_start = text
        .char_indices()
        .nth(total - tail)
        .map(|(i, _)| i)
        .unwrap_or(text.len());
    format!(
        "{}\n[... {} characters truncated ...]\n{}",
        &text[..head_end],
        total - cap,
        &text[tail_start..]
    )
}

/// Verbatim error listing for a repair prompt: compiler diagnostics first,
/// then failing tests.
pub fn render_errors(diagnostics: &[Diagnostic], failures: &[TestVerdict]) -> String {
    diagnostics
        .iter()
        .map(Diagnostic::render)
        .chain(failures.iter().map(TestVerdict::render))
        .collect::<Vec<_>>()
        .join("\n")
}
