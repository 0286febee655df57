//! Java adapter backed by the tree-sitter Java grammar.

use std::collections::{BTreeSet, HashMap};
use std::ops::Range;
use std::path::{Path, PathBuf};

use tree_sitter::{Node, Parser, Tree};

use super::{
    FileOutline, HeaderDecl, LangError, LanguageAdapter, MemberKind, MemberOutline, TypeKind,
    TypeOutline,
};
use crate::source_model::{ContainerId, ContainerUnit, MethodUnit};

const TYPE_DECLS: &[&str] = &[
    "class_declaration",
    "interface_declaration",
    "enum_declaration",
    "record_declaration",
];

/// JUnit 5 annotations and where they live.
const FRAMEWORK_ANNOTATIONS: &[(&str, &str)] = &[
    ("Test", "org.junit.jupiter.api.Test"),
    ("BeforeEach", "org.junit.jupiter.api.BeforeEach"),
    ("AfterEach", "org.junit.jupiter.api.AfterEach"),
    ("BeforeAll", "org.junit.jupiter.api.BeforeAll"),
    ("AfterAll", "org.junit.jupiter.api.AfterAll"),
    ("DisplayName", "org.junit.jupiter.api.DisplayName"),
    ("Disabled", "org.junit.jupiter.api.Disabled"),
    ("Nested", "org.junit.jupiter.api.Nested"),
    ("RepeatedTest", "org.junit.jupiter.api.RepeatedTest"),
    ("TestFactory", "org.junit.jupiter.api.TestFactory"),
    ("ParameterizedTest", "org.junit.jupiter.params.ParameterizedTest"),
    ("ValueSource", "org.junit.jupiter.params.provider.ValueSource"),
    ("CsvSource", "org.junit.jupiter.params.provider.CsvSource"),
    ("MethodSource", "org.junit.jupiter.params.provider.MethodSource"),
    ("NullSource", "org.junit.jupiter.params.provider.NullSource"),
    ("EmptySource", "org.junit.jupiter.params.provider.EmptySource"),
];

const ASSERTIONS: &[&str] = &[
    "assertEquals",
    "assertNotEquals",
    "assertTrue",
    "assertFalse",
    "assertNull",
    "assertNotNull",
    "assertSame",
    "assertNotSame",
    "assertThrows",
    "assertDoesNotThrow",
    "assertArrayEquals",
    "assertIterableEquals",
    "assertLinesMatch",
    "assertAll",
    "assertInstanceOf",
    "assertTimeout",
    "fail",
];

const ASSERTIONS_IMPORT: &str = "org.junit.jupiter.api.Assertions.*";

#[derive(Debug, Clone)]
pub struct JavaAdapter {
    test_markers: Vec<String>,
}

impl Default for JavaAdapter {
    fn default() -> Self {
        Self {
            test_markers: ["Test", "ParameterizedTest", "RepeatedTest", "TestFactory", "TestTemplate"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

fn parse(text: &str) -> Tree {
    let mut parser = Parser::new();
    parser
        .set_language(&tree_sitter_java::LANGUAGE.into())
        .expect("java grammar is compatible");
    parser.parse(text, None).expect("parser has a language")
}

fn node_text<'a>(node: Node<'_>, src: &'a str) -> &'a str {
    &src[node.byte_range()]
}

fn line_range(node: Node<'_>) -> (usize, usize) {
    (node.start_position().row + 1, node.end_position().row + 1)
}

fn named_children<'t>(node: Node<'t>) -> Vec<Node<'t>> {
    let mut cursor = node.walk();
    node.named_children(&mut cursor).collect()
}

fn all_children<'t>(node: Node<'t>) -> Vec<Node<'t>> {
    let mut cursor = node.walk();
    node.children(&mut cursor).collect()
}

fn is_comment(node: Node<'_>) -> bool {
    matches!(node.kind(), "line_comment" | "block_comment")
}

fn modifiers_of(node: Node<'_>) -> Option<Node<'_>> {
    named_children(node).into_iter().find(|c| c.kind() == "modifiers")
}

fn has_modifier(node: Node<'_>, keyword: &str) -> bool {
    modifiers_of(node)
        .map(|m| all_children(m).iter().any(|c| c.kind() == keyword))
        .unwrap_or(false)
}

fn annotation_names(node: Node<'_>, src: &str) -> Vec<String> {
    let Some(mods) = modifiers_of(node) else {
        return Vec::new();
    };
    named_children(mods)
        .into_iter()
        .filter(|c| matches!(c.kind(), "marker_annotation" | "annotation"))
        .filter_map(|a| a.child_by_field_name("name"))
        .map(|n| {
            let text = node_text(n, src);
            text.rsplit('.').next().unwrap_or(text).to_string()
        })
        .collect()
}

fn type_kind(kind: &str) -> Option<TypeKind> {
    match kind {
        "class_declaration" => Some(TypeKind::Class),
        "interface_declaration" => Some(TypeKind::Interface),
        "enum_declaration" => Some(TypeKind::Enum),
        "record_declaration" => Some(TypeKind::Record),
        _ => None,
    }
}

/// Member declarations of a type body, flattening enum body declarations.
fn body_members(decl: Node<'_>) -> Vec<Node<'_>> {
    let Some(body) = decl.child_by_field_name("body") else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for child in named_children(body) {
        if child.kind() == "enum_body_declarations" {
            out.extend(named_children(child));
        } else {
            out.push(child);
        }
    }
    out
}

/// Byte span covering the node, directly preceding comments that start their
/// own line, leading indentation, and the trailing newline.
fn removal_span(node: Node<'_>, src: &str) -> Range<usize> {
    let bytes = src.as_bytes();
    let mut start = node.start_byte();
    let mut prev = node.prev_sibling();
    while let Some(p) = prev {
        if !is_comment(p) {
            break;
        }
        let gap = &src[p.end_byte()..start];
        if !gap.trim().is_empty() || !starts_own_line(src, p.start_byte()) {
            break;
        }
        start = p.start_byte();
        prev = p.prev_sibling();
    }
    let mut s = start;
    while s > 0 && matches!(bytes[s - 1], b' ' | b'\t') {
        s -= 1;
    }
    if s == 0 || bytes[s - 1] == b'\n' {
        start = s;
    }
    let mut end = node.end_byte();
    let mut e = end;
    while e < bytes.len() && matches!(bytes[e], b' ' | b'\t' | b'\r') {
        e += 1;
    }
    if e < bytes.len() && bytes[e] == b'\n' {
        end = e + 1;
    }
    start..end
}

fn starts_own_line(src: &str, at: usize) -> bool {
    src[..at]
        .rsplit('\n')
        .next()
        .map(|l| l.trim().is_empty())
        .unwrap_or(true)
}

type TypeVars = HashMap<String, String>;

fn collect_type_params(decl: Node<'_>, src: &str, vars: &mut TypeVars) {
    let Some(params) = decl.child_by_field_name("type_parameters") else {
        return;
    };
    for param in named_children(params) {
        if param.kind() != "type_parameter" {
            continue;
        }
        let children = named_children(param);
        let Some(name) = children.iter().find(|c| c.kind() == "type_identifier") else {
            continue;
        };
        let bound = children
            .iter()
            .find(|c| c.kind() == "type_bound")
            .and_then(|b| named_children(*b).into_iter().next())
            .map(|b| erase_type(b, src, &TypeVars::new()))
            .unwrap_or_else(|| "Object".to_string());
        vars.insert(node_text(*name, src).to_string(), bound);
    }
}

/// Erased simple type name as a bytecode descriptor would render it.
fn erase_type(node: Node<'_>, src: &str, vars: &TypeVars) -> String {
    match node.kind() {
        "type_identifier" => {
            let name = node_text(node, src);
            vars.get(name).cloned().unwrap_or_else(|| name.to_string())
        }
        "scoped_type_identifier" => named_children(node)
            .into_iter()
            .rev()
            .find(|c| c.kind() == "type_identifier")
            .map(|c| node_text(c, src).to_string())
            .unwrap_or_default(),
        "generic_type" => named_children(node)
            .into_iter()
            .find(|c| matches!(c.kind(), "type_identifier" | "scoped_type_identifier"))
            .map(|c| erase_type(c, src, vars))
            .unwrap_or_default(),
        "array_type" => {
            let element = node
                .child_by_field_name("element")
                .map(|e| erase_type(e, src, vars))
                .unwrap_or_default();
            let dims = node
                .child_by_field_name("dimensions")
                .map(|d| node_text(d, src).matches('[').count())
                .unwrap_or(1);
            format!("{element}{}", "[]".repeat(dims))
        }
        "annotated_type" => named_children(node)
            .into_iter()
            .rev()
            .find(|c| !matches!(c.kind(), "marker_annotation" | "annotation"))
            .map(|c| erase_type(c, src, vars))
            .unwrap_or_default(),
        _ => node_text(node, src).split_whitespace().collect(),
    }
}

fn parameter_types(params: Option<Node<'_>>, src: &str, vars: &TypeVars) -> Vec<String> {
    let Some(params) = params else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for p in named_children(params) {
        match p.kind() {
            "formal_parameter" => {
                let mut ty = p
                    .child_by_field_name("type")
                    .map(|t| erase_type(t, src, vars))
                    .unwrap_or_default();
                if let Some(dims) = p.child_by_field_name("dimensions") {
                    ty.push_str(&"[]".repeat(node_text(dims, src).matches('[').count()));
                }
                out.push(ty);
            }
            "spread_parameter" => {
                let ty = named_children(p)
                    .into_iter()
                    .find(|c| !matches!(c.kind(), "modifiers" | "variable_declarator"))
                    .map(|t| erase_type(t, src, vars))
                    .unwrap_or_default();
                out.push(format!("{ty}[]"));
            }
            _ => {}
        }
    }
    out
}

/// Decision points in a method body, two outcomes each.
fn count_branches(node: Node<'_>, src: &str) -> u32 {
    let mut count = 0;
    let mut stack = vec![node];
    while let Some(n) = stack.pop() {
        match n.kind() {
            "if_statement" | "while_statement" | "do_statement" | "for_statement"
            | "enhanced_for_statement" | "ternary_expression" => count += 2,
            "binary_expression" => {
                if let Some(op) = n.child_by_field_name("operator") {
                    if matches!(op.kind(), "&&" | "||") {
                        count += 2;
                    }
                }
            }
            "switch_label" => {
                if !node_text(n, src).trim_start().starts_with("default") {
                    count += 2;
                }
            }
            // anonymous class bodies are separate methods
            "class_body" if n.id() != node.id() => continue,
            _ => {}
        }
        stack.extend(named_children(n));
    }
    count
}

struct ContainerCtx<'a> {
    src: &'a str,
    namespace: &'a str,
    path: &'a Path,
}

fn collect_containers(
    decl: Node<'_>,
    ctx: &ContainerCtx<'_>,
    prefix: &str,
    whole_file: bool,
    outer_vars: &TypeVars,
    out: &mut Vec<ContainerUnit>,
) {
    let Some(kind) = type_kind(decl.kind()) else {
        return;
    };
    let Some(name_node) = decl.child_by_field_name("name") else {
        return;
    };
    let name = node_text(name_node, ctx.src);
    let simple_path = if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}.{name}")
    };
    let qualified_name = if ctx.namespace.is_empty() {
        simple_path.clone()
    } else {
        format!("{}.{simple_path}", ctx.namespace)
    };
    let (source_text, base) = if whole_file {
        (ctx.src.to_string(), 0)
    } else {
        (node_text(decl, ctx.src).to_string(), decl.start_byte())
    };
    let id = ContainerId(qualified_name.clone());
    let mut vars = outer_vars.clone();
    collect_type_params(decl, ctx.src, &mut vars);

    let mut methods: Vec<MethodUnit> = Vec::new();
    let mut constructors: Vec<String> = Vec::new();
    let mut seen = BTreeSet::new();
    let mut nested = Vec::new();
    for member in body_members(decl) {
        match member.kind() {
            "method_declaration" => {
                let Some(mname) = member.child_by_field_name("name") else {
                    continue;
                };
                let mname = node_text(mname, ctx.src).to_string();
                let mut mvars = vars.clone();
                collect_type_params(member, ctx.src, &mut mvars);
                let params =
                    parameter_types(member.child_by_field_name("parameters"), ctx.src, &mvars);
                let signature = format!("{mname}({})", params.join(","));
                if !seen.insert(signature.clone()) {
                    tracing::warn!(container = %qualified_name, %signature, "duplicate signature skipped");
                    continue;
                }
                methods.push(MethodUnit {
                    container_id: id.clone(),
                    name: mname,
                    signature,
                    body_span: (member.start_byte() - base, member.end_byte() - base),
                    branch_count: count_branches(member, ctx.src),
                });
            }
            "constructor_declaration" => {
                let params =
                    parameter_types(member.child_by_field_name("parameters"), ctx.src, &vars);
                constructors.push(format!("<init>({})", params.join(",")));
            }
            "compact_constructor_declaration" => {
                let params =
                    parameter_types(decl.child_by_field_name("parameters"), ctx.src, &vars);
                constructors.push(format!("<init>({})", params.join(",")));
            }
            k if TYPE_DECLS.contains(&k) => nested.push(member),
            _ => {}
        }
    }
    let is_abstract = kind == TypeKind::Interface || has_modifier(decl, "abstract");
    out.push(ContainerUnit {
        id,
        qualified_name,
        namespace: ctx.namespace.to_string(),
        kind,
        is_abstract,
        source_text,
        source_path: ctx.path.to_path_buf(),
        methods,
        has_constructor: !constructors.is_empty(),
        constructors,
    });
    for n in nested {
        let inner_vars = if has_modifier(n, "static") {
            TypeVars::new()
        } else {
            vars.clone()
        };
        collect_containers(n, ctx, &simple_path, false, &inner_vars, out);
    }
}

fn header_name(node: Node<'_>, src: &str) -> String {
    node_text(node, src)
        .trim_start_matches("package")
        .trim_start()
        .trim_start_matches("import")
        .trim_start()
        .trim_start_matches("static ")
        .trim_end_matches(';')
        .split_whitespace()
        .collect()
}

fn package_node(root: Node<'_>) -> Option<Node<'_>> {
    named_children(root)
        .into_iter()
        .find(|c| c.kind() == "package_declaration")
}

fn collect_error_lines(root: Node<'_>) -> Vec<usize> {
    let mut lines = BTreeSet::new();
    if !root.has_error() {
        return Vec::new();
    }
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        if n.is_error() || n.is_missing() {
            lines.insert(n.start_position().row + 1);
            continue;
        }
        if n.has_error() {
            stack.extend(all_children(n));
        }
    }
    lines.into_iter().collect()
}

impl JavaAdapter {
    fn outline_type(&self, decl: Node<'_>, src: &str) -> Option<TypeOutline> {
        let kind = type_kind(decl.kind())?;
        let name = node_text(decl.child_by_field_name("name")?, src).to_string();
        let mut members = Vec::new();
        let mut nested = Vec::new();
        let mut has_members = false;
        if let Some(body) = decl.child_by_field_name("body") {
            has_members = named_children(body).iter().any(|c| !is_comment(*c));
        }
        for member in body_members(decl) {
            let kind = match member.kind() {
                "method_declaration" => {
                    let marked = annotation_names(member, src)
                        .iter()
                        .any(|a| self.test_markers.contains(a));
                    if marked {
                        MemberKind::TestMethod
                    } else {
                        MemberKind::Method
                    }
                }
                "constructor_declaration" | "compact_constructor_declaration" => {
                    MemberKind::Constructor
                }
                "field_declaration" | "constant_declaration" => MemberKind::Field,
                "static_initializer" | "block" => MemberKind::Initializer,
                k if TYPE_DECLS.contains(&k) => {
                    if let Some(t) = self.outline_type(member, src) {
                        nested.push(t);
                    }
                    continue;
                }
                _ => continue,
            };
            let name = match kind {
                MemberKind::Field => member
                    .child_by_field_name("declarator")
                    .and_then(|d| d.child_by_field_name("name"))
                    .map(|n| node_text(n, src).to_string())
                    .unwrap_or_default(),
                MemberKind::Initializer => String::new(),
                _ => member
                    .child_by_field_name("name")
                    .map(|n| node_text(n, src).to_string())
                    .unwrap_or_default(),
            };
            members.push(MemberOutline {
                name,
                kind,
                removal_span: removal_span(member, src),
                lines: line_range(member),
            });
        }
        Some(TypeOutline {
            name,
            kind,
            removal_span: removal_span(decl, src),
            lines: line_range(decl),
            is_public: has_modifier(decl, "public"),
            annotations: annotation_names(decl, src),
            members,
            nested,
            has_members,
        })
    }
}

struct Edits {
    items: Vec<(Range<usize>, String)>,
}

impl Edits {
    fn apply(mut self, src: &str) -> String {
        // stable sort keeps insertion order for equal starts
        self.items.sort_by_key(|(r, _)| r.start);
        let mut out = String::with_capacity(src.len() + 64);
        let mut cursor = 0;
        for (range, text) in self.items {
            if range.start >= cursor {
                out.push_str(&src[cursor..range.start]);
            }
            out.push_str(&text);
            cursor = cursor.max(range.end);
        }
        out.push_str(&src[cursor.min(src.len())..]);
        out
    }
}

fn collect_nodes<'t>(root: Node<'t>, pred: &dyn Fn(Node<'t>) -> bool) -> Vec<Node<'t>> {
    let mut out = Vec::new();
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        if pred(n) {
            out.push(n);
        }
        stack.extend(all_children(n));
    }
    out.sort_by_key(|n| n.start_byte());
    out
}

impl LanguageAdapter for JavaAdapter {
    fn id(&self) -> &str {
        "java"
    }

    fn language_label(&self) -> &str {
        "Java"
    }

    fn framework_label(&self) -> &str {
        "Junit5"
    }

    fn nested_test_marker(&self) -> &str {
        "Nested"
    }

    fn is_source_file(&self, path: &Path) -> bool {
        path.extension().is_some_and(|e| e == "java")
            && path.file_name().is_some_and(|n| {
                n != "package-info.java" && n != "module-info.java"
            })
    }

    fn production_roots(&self, root: &Path) -> Vec<PathBuf> {
        let conventional = Path::new("src/main/java");
        if root.join(conventional).is_dir() {
            vec![conventional.to_path_buf()]
        } else {
            vec![PathBuf::new()]
        }
    }

    fn is_excluded(&self, rel: &Path) -> bool {
        rel.starts_with("src/test")
            || rel.starts_with("target")
            || rel.starts_with("build")
            || rel.starts_with("out")
    }

    fn parse_containers(&self, path: &Path, text: &str) -> Result<Vec<ContainerUnit>, LangError> {
        let tree = parse(text);
        let root = tree.root_node();
        let namespace = package_node(root)
            .map(|p| header_name(p, text))
            .unwrap_or_default();
        let tops: Vec<Node<'_>> = named_children(root)
            .into_iter()
            .filter(|c| TYPE_DECLS.contains(&c.kind()))
            .collect();
        if tops.is_empty() && root.has_error() {
            return Err(LangError::Parse {
                path: path.to_path_buf(),
                reason: "no recoverable type declaration".into(),
            });
        }
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        let primary = tops
            .iter()
            .position(|t| {
                t.child_by_field_name("name")
                    .is_some_and(|n| node_text(n, text) == stem)
            })
            .or(if tops.len() == 1 { Some(0) } else { None });
        let ctx = ContainerCtx {
            src: text,
            namespace: &namespace,
            path,
        };
        let mut out = Vec::new();
        for (i, decl) in tops.iter().enumerate() {
            collect_containers(*decl, &ctx, "", Some(i) == primary, &TypeVars::new(), &mut out);
        }
        Ok(out)
    }

    fn outline(&self, text: &str) -> FileOutline {
        let tree = parse(text);
        let root = tree.root_node();
        let mut outline = FileOutline {
            syntax_errors: collect_error_lines(root),
            ..FileOutline::default()
        };
        for child in named_children(root) {
            match child.kind() {
                "package_declaration" => {
                    outline.namespace = Some(HeaderDecl {
                        name: header_name(child, text),
                        is_static: false,
                        span: child.byte_range(),
                        line: child.start_position().row + 1,
                    })
                }
                "import_declaration" => outline.imports.push(HeaderDecl {
                    name: header_name(child, text),
                    is_static: all_children(child).iter().any(|c| c.kind() == "static"),
                    span: child.byte_range(),
                    line: child.start_position().row + 1,
                }),
                k if TYPE_DECLS.contains(&k) => {
                    if let Some(t) = self.outline_type(child, text) {
                        outline.types.push(t);
                    }
                }
                _ => {}
            }
        }
        outline
    }

    fn test_file_path(&self, namespace: &str, class_name: &str) -> PathBuf {
        let mut path = PathBuf::from("src/test/java");
        for part in namespace.split('.').filter(|p| !p.is_empty()) {
            path.push(part);
        }
        path.push(format!("{class_name}.java"));
        path
    }

    fn merge_snippets(&self, snippets: &[String]) -> String {
        if snippets.len() == 1 {
            return snippets[0].clone();
        }
        let mut package: Option<String> = None;
        let mut imports: Vec<String> = Vec::new();
        let mut types: Vec<String> = Vec::new();
        for snippet in snippets {
            let tree = parse(snippet);
            let root = tree.root_node();
            let mut found = false;
            for child in named_children(root) {
                match child.kind() {
                    "package_declaration" if package.is_none() => {
                        package = Some(node_text(child, snippet).to_string())
                    }
                    "import_declaration" => {
                        let imp = node_text(child, snippet).to_string();
                        if !imports.contains(&imp) {
                            imports.push(imp);
                        }
                    }
                    k if TYPE_DECLS.contains(&k) => {
                        found = true;
                        let span = removal_span(child, snippet);
                        types.push(snippet[span].trim_end().to_string());
                    }
                    _ => {}
                }
            }
            if !found {
                tracing::debug!("dropping snippet without type declarations");
            }
        }
        if types.is_empty() {
            return snippets.first().cloned().unwrap_or_default();
        }
        let mut out = String::new();
        if let Some(p) = package {
            out.push_str(&p);
            out.push_str("\n\n");
        }
        if !imports.is_empty() {
            out.push_str(&imports.join("\n"));
            out.push_str("\n\n");
        }
        out.push_str(&types.join("\n\n"));
        out.push('\n');
        out
    }

    fn align_identity(
        &self,
        source: &str,
        expected_class: &str,
        expected_namespace: &str,
    ) -> Result<String, LangError> {
        let tree = parse(source);
        let root = tree.root_node();
        let tops: Vec<Node<'_>> = named_children(root)
            .into_iter()
            .filter(|c| TYPE_DECLS.contains(&c.kind()) && c.child_by_field_name("name").is_some())
            .collect();
        if tops.is_empty() {
            return Err(LangError::Unfixable);
        }
        let outline = self.outline(source);
        let name_of = |n: Node<'_>| node_text(n.child_by_field_name("name").unwrap(), source);
        let mut edits = Edits { items: Vec::new() };

        let pkg = package_node(root);
        let mut pkg_inserted = false;
        match pkg {
            Some(p) if expected_namespace.is_empty() => {
                edits.items.push((removal_span(p, source), String::new()));
            }
            Some(p) => {
                if header_name(p, source) != expected_namespace {
                    edits
                        .items
                        .push((p.byte_range(), format!("package {expected_namespace};")));
                }
            }
            None if !expected_namespace.is_empty() => {
                edits
                    .items
                    .push((0..0, format!("package {expected_namespace};\n\n")));
                pkg_inserted = true;
            }
            None => {}
        }

        // primary test class: by name, else public, else first holding tests
        let by_name = tops.iter().position(|t| name_of(*t) == expected_class);
        let primary = by_name
            .or_else(|| tops.iter().position(|t| has_modifier(*t, "public")))
            .or_else(|| {
                outline
                    .types
                    .iter()
                    .position(|t| t.holds_tests())
                    .and_then(|i| {
                        let name = &outline.types[i].name;
                        tops.iter().position(|t| name_of(*t) == name)
                    })
            })
            .unwrap_or(0);
        let old_name = name_of(tops[primary]).to_string();
        if old_name != expected_class {
            for ident in collect_nodes(root, &|n| {
                matches!(n.kind(), "identifier" | "type_identifier")
            }) {
                if node_text(ident, source) == old_name {
                    edits.items.push((ident.byte_range(), expected_class.to_string()));
                }
            }
        }
        for (i, t) in tops.iter().enumerate() {
            if i == primary || !has_modifier(*t, "public") {
                continue;
            }
            let mods = modifiers_of(*t).expect("public implies modifiers");
            if let Some(kw) = all_children(mods).into_iter().find(|c| c.kind() == "public") {
                let mut end = kw.end_byte();
                while source.as_bytes().get(end).is_some_and(|b| *b == b' ') {
                    end += 1;
                }
                edits.items.push((kw.start_byte()..end, String::new()));
            }
        }

        // framework imports
        let imports = &outline.imports;
        let mut needed: Vec<String> = Vec::new();
        let annotations = collect_nodes(root, &|n| {
            matches!(n.kind(), "marker_annotation" | "annotation")
        });
        let mut used: BTreeSet<&str> = BTreeSet::new();
        for a in annotations {
            if let Some(n) = a.child_by_field_name("name") {
                let text = node_text(n, source);
                if !text.contains('.') {
                    used.insert(text);
                }
            }
        }
        for (simple, fqn) in FRAMEWORK_ANNOTATIONS {
            if !used.contains(simple) {
                continue;
            }
            let package = fqn.rsplit_once('.').map(|(p, _)| p).unwrap_or("");
            let satisfied = imports.iter().any(|i| {
                !i.is_static
                    && (i.name == *fqn
                        || i.name == format!("{package}.*")
                        || i.name.rsplit('.').next() == Some(*simple))
            });
            if !satisfied {
                needed.push(format!("import {fqn};"));
            }
        }
        let declared_methods: BTreeSet<&str> = collect_nodes(root, &|n| n.kind() == "method_declaration")
            .into_iter()
            .filter_map(|m| m.child_by_field_name("name"))
            .map(|n| node_text(n, source))
            .collect();
        let uses_assertions = collect_nodes(root, &|n| n.kind() == "method_invocation")
            .into_iter()
            .filter(|m| m.child_by_field_name("object").is_none())
            .filter_map(|m| m.child_by_field_name("name"))
            .map(|n| node_text(n, source))
            .any(|name| {
                ASSERTIONS.contains(&name)
                    && !declared_methods.contains(name)
                    && !imports.iter().any(|i| {
                        i.is_static
                            && matches!(i.name.rsplit('.').next(), Some(last) if last == "*" || last == name)
                    })
            });
        if uses_assertions {
            needed.push(format!("import static {ASSERTIONS_IMPORT};"));
        }
        if !needed.is_empty() {
            let block = needed.join("\n");
            if let Some(last) = imports.last() {
                edits
                    .items
                    .push((last.span.end..last.span.end, format!("\n{block}")));
            } else if let (Some(p), false) = (pkg, expected_namespace.is_empty()) {
                edits
                    .items
                    .push((p.end_byte()..p.end_byte(), format!("\n\n{block}")));
            } else {
                let _ = pkg_inserted;
                edits.items.push((0..0, format!("{block}\n\n")));
            }
        }
        if edits.items.is_empty() {
            return Ok(source.to_string());
        }
        Ok(edits.apply(source))
    }
}
