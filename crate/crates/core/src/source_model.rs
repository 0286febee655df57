//! Project inventory: containers (classes, interfaces, enums, records) and the
//! methods and constructors they declare.

use std::fmt;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::lang::{self, LangError, LanguageAdapter, TypeKind};

/// Sentinel method name addressing the constructors of a container.
pub const CONSTRUCTOR_SENTINEL: &str = "<init>";

#[derive(Debug, Error)]
pub enum DiscoveryError {
    #[error("project root {0} does not exist")]
    MissingRoot(PathBuf),
    #[error("no source files recognized by the `{adapter}` adapter under {root}")]
    EmptyProject { root: PathBuf, adapter: String },
    #[error("duplicate container `{0}`")]
    DuplicateContainer(String),
    #[error(transparent)]
    Lang(#[from] LangError),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContainerId(pub String);

impl fmt::Display for ContainerId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodUnit {
    pub container_id: ContainerId,
    pub name: String,
    /// Erased parameter signature, e.g. `bar(int,String)`.
    pub signature: String,
    /// Byte span of the whole declaration, relative to the container's
    /// `source_text`.
    pub body_span: (usize, usize),
    pub branch_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContainerUnit {
    pub id: ContainerId,
    pub qualified_name: String,
    pub namespace: String,
    pub kind: TypeKind,
    pub is_abstract: bool,
    pub source_text: String,
    pub source_path: PathBuf,
    pub methods: Vec<MethodUnit>,
    pub has_constructor: bool,
    /// Signatures of declared constructors, e.g. `<init>(int)`.
    pub constructors: Vec<String>,
}

impl ContainerUnit {
    /// Qualified name without the namespace, e.g. `Outer.Inner`.
    pub fn simple_path(&self) -> &str {
        if self.namespace.is_empty() {
            &self.qualified_name
        } else {
            &self.qualified_name[self.namespace.len() + 1..]
        }
    }

    /// Identifier-safe form of [`simple_path`](Self::simple_path), used to
    /// derive test class names.
    pub fn class_token(&self) -> String {
        self.simple_path().replace('.', "_")
    }

    pub fn method(&self, name: &str) -> Option<&MethodUnit> {
        self.methods.iter().find(|m| m.name == name)
    }

    pub fn method_by_signature(&self, signature: &str) -> Option<&MethodUnit> {
        self.methods.iter().find(|m| m.signature == signature)
    }

    pub fn is_overloaded(&self, name: &str) -> bool {
        self.methods.iter().filter(|m| m.name == name).count() > 1
    }

    /// Key used by coverage reports for one of this container's methods.
    pub fn method_key(&self, signature: &str) -> String {
        format!("{}#{}", self.qualified_name, signature)
    }
}

/// True iff the container declares at least one constructor explicitly.
pub fn has_constructor(container: &ContainerUnit) -> bool {
    !container.constructors.is_empty()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectModel {
    pub root_path: PathBuf,
    pub language_id: String,
    pub containers: Vec<ContainerUnit>,
}

impl ProjectModel {
    pub fn container(&self, id: &ContainerId) -> Option<&ContainerUnit> {
        self.containers.iter().find(|c| &c.id == id)
    }

    pub fn method_count(&self) -> usize {
        self.containers.iter().map(|c| c.methods.len()).sum()
    }

    /// Project name: the last component of the root path.
    pub fn name(&self) -> String {
        self.root_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "project".to_string())
    }

    /// Simple names of every production type.
    pub fn simple_type_names(&self) -> std::collections::BTreeSet<String> {
        self.containers
            .iter()
            .map(|c| {
                c.qualified_name
                    .rsplit('.')
                    .next()
                    .unwrap_or(&c.qualified_name)
                    .to_string()
            })
            .collect()
    }

    /// Serialized inventory (`units.json`).
    pub fn to_units_json(&self) -> String {
        serde_json::to_string_pretty(&self.containers).expect("inventory serializes")
    }
}

/// Walks `root`, parses every recognized production source file, and returns
/// the ordered inventory.
pub fn discover_units(root: &Path, language_id: &str) -> Result<ProjectModel, DiscoveryError> {
    let adapter = lang::adapter_for(language_id)?;
    discover_with(root, adapter.as_ref())
}

pub fn discover_with(
    root: &Path,
    adapter: &dyn LanguageAdapter,
) -> Result<ProjectModel, DiscoveryError> {
    if !root.is_dir() {
        return Err(DiscoveryError::MissingRoot(root.to_path_buf()));
    }
    let mut files: Vec<PathBuf> = Vec::new();
    for source_root in adapter.production_roots(root) {
        let walker = WalkDir::new(root.join(&source_root))
            .sort_by_file_name()
            .into_iter()
            .filter_entry(|e| {
                let name = e.file_name().to_string_lossy();
                let rel = e.path().strip_prefix(root).unwrap_or(e.path());
                e.depth() == 0 || !(name.starts_with('.') || adapter.is_excluded(rel))
            });
        for entry in walker {
            let entry = entry.map_err(|e| DiscoveryError::Io {
                path: root.to_path_buf(),
                source: e.into(),
            })?;
            if entry.file_type().is_file() && adapter.is_source_file(entry.path()) {
                files.push(entry.into_path());
            }
        }
    }
    if files.is_empty() {
        return Err(DiscoveryError::EmptyProject {
            root: root.to_path_buf(),
            adapter: adapter.id().to_string(),
        });
    }

    let parsed: Vec<Vec<ContainerUnit>> = files
        .par_iter()
        .map(|path| {
            let text = std::fs::read_to_string(path).map_err(|source| DiscoveryError::Io {
                path: path.clone(),
                source,
            })?;
            let rel = path.strip_prefix(root).unwrap_or(path);
            Ok(adapter.parse_containers(rel, &text)?)
        })
        .collect::<Result<_, DiscoveryError>>()?;

    let mut containers: Vec<ContainerUnit> = parsed.into_iter().flatten().collect();
    containers.sort_by(|a, b| a.qualified_name.cmp(&b.qualified_name));
    for pair in containers.windows(2) {
        if pair[0].qualified_name == pair[1].qualified_name {
            return Err(DiscoveryError::DuplicateContainer(
                pair[0].qualified_name.clone(),
            ));
        }
    }
    Ok(ProjectModel {
        root_path: root.to_path_buf(),
        language_id: adapter.id().to_string(),
        containers,
    })
}
