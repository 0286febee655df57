//! Target-language adapters.
//!
//! An adapter knows how to find production sources, parse them into
//! containers and methods, outline generated test files, and apply the
//! identity fixes (namespace, class name, framework imports) that generated
//! code needs before it can be compiled. Only Java is shipped.

use std::ops::Range;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::source_model::ContainerUnit;

pub mod java;

pub use java::JavaAdapter;

#[derive(Debug, Error)]
pub enum LangError {
    #[error("unknown language adapter `{0}`")]
    UnknownAdapter(String),
    #[error("failed to parse {path}: {reason}")]
    Parse { path: PathBuf, reason: String },
    #[error("source is not recoverable: no top-level type declaration found")]
    Unfixable,
}

/// Kind of a declared type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeKind {
    Class,
    Interface,
    Enum,
    Record,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MemberKind {
    TestMethod,
    Method,
    Constructor,
    Field,
    Initializer,
}

/// A header-level declaration (namespace or import).
#[derive(Debug, Clone)]
pub struct HeaderDecl {
    pub name: String,
    pub is_static: bool,
    pub span: Range<usize>,
    pub line: usize,
}

#[derive(Debug, Clone)]
pub struct MemberOutline {
    pub name: String,
    pub kind: MemberKind,
    /// Span to delete when the member is removed (includes leading comments
    /// and the trailing newline).
    pub removal_span: Range<usize>,
    /// 1-based inclusive line range of the declaration itself.
    pub lines: (usize, usize),
}

#[derive(Debug, Clone)]
pub struct TypeOutline {
    pub name: String,
    pub kind: TypeKind,
    pub removal_span: Range<usize>,
    pub lines: (usize, usize),
    pub is_public: bool,
    pub annotations: Vec<String>,
    pub members: Vec<MemberOutline>,
    pub nested: Vec<TypeOutline>,
    /// False when the body holds nothing but comments.
    pub has_members: bool,
}

impl TypeOutline {
    pub fn contains_line(&self, line: usize) -> bool {
        self.lines.0 <= line && line <= self.lines.1
    }

    /// True when this type declares tests directly or through nested types.
    pub fn holds_tests(&self) -> bool {
        self.members.iter().any(|m| m.kind == MemberKind::TestMethod)
            || self.nested.iter().any(TypeOutline::holds_tests)
    }

    pub fn is_test_container(&self, nested_marker: &str) -> bool {
        self.annotations.iter().any(|a| a == nested_marker) || self.holds_tests()
    }

    /// Qualified test identifiers (`Outer.Inner.method`) of every test method
    /// below this type, in source order.
    pub fn test_ids(&self, prefix: &str) -> Vec<String> {
        let path = if prefix.is_empty() {
            self.name.clone()
        } else {
            format!("{prefix}.{}", self.name)
        };
        let mut ids: Vec<(usize, String)> = self
            .members
            .iter()
            .filter(|m| m.kind == MemberKind::TestMethod)
            .map(|m| (m.lines.0, format!("{path}.{}", m.name)))
            .collect();
        for nested in &self.nested {
            ids.extend(
                nested
                    .test_ids(&path)
                    .into_iter()
                    .map(|id| (nested.lines.0, id)),
            );
        }
        ids.sort_by_key(|(line, _)| *line);
        ids.into_iter().map(|(_, id)| id).collect()
    }
}

/// Structural summary of one source file.
#[derive(Debug, Clone, Default)]
pub struct FileOutline {
    pub namespace: Option<HeaderDecl>,
    pub imports: Vec<HeaderDecl>,
    pub types: Vec<TypeOutline>,
    /// 1-based lines carrying syntax errors.
    pub syntax_errors: Vec<usize>,
}

impl FileOutline {
    pub fn test_ids(&self) -> Vec<String> {
        self.types.iter().flat_map(|t| t.test_ids("")).collect()
    }

    pub fn find_type(&self, name: &str) -> Option<&TypeOutline> {
        self.types.iter().find(|t| t.name == name)
    }
}

pub trait LanguageAdapter: Send + Sync {
    fn id(&self) -> &str;
    /// Language name as it appears in prompts, e.g. `Java`.
    fn language_label(&self) -> &str;
    /// Test framework name as it appears in prompts, e.g. `Junit5`.
    fn framework_label(&self) -> &str;
    /// Annotation marking a nested test container.
    fn nested_test_marker(&self) -> &str;

    fn is_source_file(&self, path: &Path) -> bool;
    /// Directories (relative to the project root) holding production code.
    fn production_roots(&self, root: &Path) -> Vec<PathBuf>;
    /// Paths (relative to the project root) excluded from discovery and from
    /// workspace copies: existing tests and build output.
    fn is_excluded(&self, rel: &Path) -> bool;

    fn parse_containers(&self, path: &Path, text: &str) -> Result<Vec<ContainerUnit>, LangError>;
    fn outline(&self, text: &str) -> FileOutline;

    /// Namespace of a production container, derived from its qualified name.
    fn namespace_of(&self, qualified_name: &str, simple_path: &str) -> String {
        qualified_name
            .strip_suffix(simple_path)
            .map(|p| p.trim_end_matches('.').to_string())
            .unwrap_or_default()
    }

    fn test_file_path(&self, namespace: &str, class_name: &str) -> PathBuf;

    /// Merge several code snippets from one reply into a single compilation unit.
    fn merge_snippets(&self, snippets: &[String]) -> String;

    fn align_identity(
        &self,
        source: &str,
        expected_class: &str,
        expected_namespace: &str,
    ) -> Result<String, LangError>;
}

pub fn adapter_for(id: &str) -> Result<Box<dyn LanguageAdapter>, LangError> {
    match id {
        "java" => Ok(Box::new(JavaAdapter::default())),
        other => Err(LangError::UnknownAdapter(other.to_string())),
    }
}

/// Removes the given byte ranges from `text`. Ranges contained in another
/// range are dropped first.
pub fn remove_spans(text: &str, spans: &[Range<usize>]) -> String {
    let mut sorted: Vec<Range<usize>> = spans.to_vec();
    sorted.sort_by(|a, b| a.start.cmp(&b.start).then(b.end.cmp(&a.end)));
    let mut merged: Vec<Range<usize>> = Vec::new();
    for span in sorted {
        match merged.last_mut() {
            Some(last) if span.start < last.end => last.end = last.end.max(span.end),
            _ => merged.push(span),
        }
    }
    let mut out = String::with_capacity(text.len());
    let mut cursor = 0;
    for span in merged {
        out.push_str(&text[cursor..span.start]);
        cursor = span.end;
    }
    out.push_str(&text[cursor..]);
    out
}
