//! Parsers for javac (via Maven) output, Surefire, JaCoCo and PIT reports.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::{CoverageSnapshot, Diagnostic, DiagnosticKind, MutationSnapshot, TestStatus};

#[derive(Debug, thiserror::Error)]
#[error("malformed report: {0}")]
pub struct ReportError(pub String);

fn attr(e: &BytesStart<'_>, name: &str) -> Option<String> {
    e.attributes().flatten().find_map(|a| {
        (a.key.as_ref() == name).then(|| {
            a.normalized_value(quick_xml::XmlVersion::default())
                .map(|v| v.into_owned())
                .unwrap_or_else(|_| a.value.to_string())
        })
    })
}

/// Parses `[ERROR] /abs/File.java:[line,col] message` lines. Paths are made
/// relative to `root` when possible; following `symbol:`/`location:` lines
/// are folded into the message. Duplicates are dropped.
pub fn parse_javac_output(output: &str, root: &Path) -> Vec<Diagnostic> {
    let mut out: Vec<Diagnostic> = Vec::new();
    let mut import_lines: BTreeMap<PathBuf, Vec<usize>> = BTreeMap::new();
    for raw in output.lines() {
        let line = raw.trim_start_matches("[ERROR]").trim_end();
        let trimmed = line.trim_start();
        if trimmed.starts_with("symbol:") || trimmed.starts_with("location:") {
            if let Some(last) = out.last_mut() {
                last.message.push_str("\n  ");
                last.message.push_str(trimmed);
            }
            continue;
        }
        let Some(idx) = trimmed.find(".java:[") else {
            continue;
        };
        let path_part = &trimmed[..idx + 5];
        let rest = &trimmed[idx + 7..];
        let Some(close) = rest.find(']') else {
            continue;
        };
        let mut nums = rest[..close].split(',').map(|n| n.trim().parse::<usize>());
        let (Some(Ok(l)), Some(Ok(c))) = (nums.next(), nums.next()) else {
            continue;
        };
        let message = rest[close + 1..].trim().to_string();
        let abs = PathBuf::from(path_part);
        let file = abs.strip_prefix(root).map(Path::to_path_buf).unwrap_or(abs.clone());
        let imports = import_lines
            .entry(file.clone())
            .or_insert_with(|| import_line_numbers(&abs));
        let kind = if message.contains("should be declared in a file named") {
            DiagnosticKind::NameMismatch
        } else if imports.contains(&l) {
            DiagnosticKind::ImportError
        } else {
            DiagnosticKind::CompileError
        };
        out.push(Diagnostic {
            file,
            span: Some((l, c)),
            kind,
            message,
            attributed_test: None,
        });
    }
    let mut seen = std::collections::BTreeSet::new();
    out.retain(|d| {
        let first = d.message.lines().next().unwrap_or_default().to_string();
        seen.insert((d.file.clone(), d.span, first))
    });
    out
}

fn import_line_numbers(path: &Path) -> Vec<usize> {
    std::fs::read_to_string(path)
        .map(|text| {
            text.lines()
                .enumerate()
                .filter(|(_, l)| l.trim_start().starts_with("import "))
                .map(|(i, _)| i + 1)
                .collect()
        })
        .unwrap_or_default()
}

/// One Surefire test case: class path as dotted simple names
/// (`FooTest.Inner`), method name, and outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SurefireCase {
    pub class_path: String,
    pub method: String,
    pub status: TestStatus,
    pub message: Option<String>,
}

pub fn parse_surefire(xml: &str) -> Result<Vec<SurefireCase>, ReportError> {
    let mut reader = Reader::from_str(xml);
    let mut cases = Vec::new();
    let mut current: Option<SurefireCase> = None;
    loop {
        match reader.read_event() {
            Ok(Event::Start(e)) | Ok(Event::Empty(e)) => match e.name().as_ref() {
                "testcase" => {
                    if let Some(done) = current.take() {
                        cases.push(done);
                    }
                    let classname = attr(&e, "classname").unwrap_or_default();
                    let simple = classname.rsplit('.').next().unwrap_or(&classname);
                    let name = attr(&e, "name").unwrap_or_default();
                    let method = name.split('(').next().unwrap_or(&name).trim().to_string();
                    current = Some(SurefireCase {
                        class_path: simple.replace('$', "."),
                        method,
                        status: TestStatus::Passed,
                        message: None,
                    });
                }
                tag @ ("failure" | "error" | "skipped") => {
                    if let Some(c) = current.as_mut() {
                        c.status = TestStatus::Failed;
                        let msg = attr(&e, "message")
                            .or_else(|| attr(&e, "type"))
                            .unwrap_or_else(|| tag.to_string());
                        c.message.get_or_insert(msg);
                    }
                }
                _ => {}
            },
            Ok(Event::End(e)) if e.name().as_ref() == "testcase" => {
                if let Some(done) = current.take() {
                    cases.push(done);
                }
            }
            Ok(Event::Eof) => break,
            Err(e) => return Err(ReportError(e.to_string())),
            _ => {}
        }
    }
    if let Some(done) = current {
        cases.push(done);
    }
    Ok(cases)
}

/// Converts a JVM method descriptor's parameter list into source-style
/// simple type names: `(ILjava/util/List;[[J)V` → `int,List,long[][]`.
pub fn descriptor_params(desc: &str) -> Result<String, ReportError> {
    let inner = desc
        .strip_prefix('(')
        .and_then(|d| d.split_once(')'))
        .map(|(p, _)| p)
        .ok_or_else(|| ReportError(format!("bad descriptor {desc}")))?;
    let mut out = Vec::new();
    let mut chars = inner.chars().peekable();
    while chars.peek().is_some() {
        let mut dims = 0;
        while chars.peek() == Some(&'[') {
            chars.next();
            dims += 1;
        }
        let base = match chars.next() {
            Some('I') => "int".to_string(),
            Some('J') => "long".to_string(),
            Some('Z') => "boolean".to_string(),
            Some('B') => "byte".to_string(),
            Some('C') => "char".to_string(),
            Some('S') => "short".to_string(),
            Some('F') => "float".to_string(),
            Some('D') => "double".to_string(),
            Some('L') => {
                let name: String = chars.by_ref().take_while(|c| *c != ';').collect();
                name.rsplit(['/', '$']).next().unwrap_or(&name).to_string()
            }
            other => return Err(ReportError(format!("bad descriptor {desc} at {other:?}"))),
        };
        out.push(format!("{base}{}", "[]".repeat(dims)));
    }
    Ok(out.join(","))
}

#[derive(Default, Clone, Copy)]
struct Counter {
    missed: u64,
    covered: u64,
}

/// Parses `jacoco.xml`. Per-method keys are `pkg.Outer.Inner#name(types)`;
/// static initializers and synthetic lambdas are skipped.
pub fn parse_jacoco(xml: &str) -> Result<CoverageSnapshot, ReportError> {
    let mut reader = Reader::from_str(xml);
    let mut snap = CoverageSnapshot::default();
    let mut depth = 0usize;
    let mut class: Option<String> = None;
    let mut method: Option<String> = None;
    let mut report_line = Counter::default();
    let mut report_branch = Counter::default();
    loop {
        let event = reader.read_event().map_err(|e| ReportError(e.to_string()))?;
        let (e, empty) = match &event {
            Event::Start(e) => (e.clone(), false),
            Event::Empty(e) => (e.clone(), true),
            Event::End(e) => {
                match e.name().as_ref() {
                    "method" => method = None,
                    "class" => class = None,
                    _ => {}
                }
                depth = depth.saturating_sub(1);
                continue;
            }
            Event::Eof => break,
            _ => continue,
        };
        let tag = e.name().as_ref().to_string();
        match tag.as_str() {
            "class" => {
                class = attr(&e, "name").map(|n| n.replace(['/', '$'], "."));
            }
            "method" => {
                let name = attr(&e, "name").unwrap_or_default();
                let desc = attr(&e, "desc").unwrap_or_default();
                method = match (&class, name.as_str()) {
                    (_, "<clinit>") => None,
                    (_, n) if n.starts_with("lambda$") => None,
                    (Some(c), n) => Some(format!("{c}#{n}({})", descriptor_params(&desc)?)),
                    (None, _) => None,
                };
            }
            "counter" => {
                let kind = attr(&e, "type").unwrap_or_default();
                let parse = |k: &str| -> Result<u64, ReportError> {
                    attr(&e, k)
                        .unwrap_or_default()
                        .parse()
                        .map_err(|_| ReportError(format!("bad counter {k}")))
                };
                let c = Counter {
                    missed: parse("missed")?,
                    covered: parse("covered")?,
                };
                if depth == 1 {
                    match kind.as_str() {
                        "LINE" => report_line = c,
                        "BRANCH" => report_branch = c,
                        _ => {}
                    }
                } else if let Some(m) = &method {
                    let pair = (c.covered as u32, (c.missed + c.covered) as u32);
                    match kind.as_str() {
                        "LINE" => {
                            snap.per_method_lines.insert(m.clone(), pair);
                        }
                        "BRANCH" => {
                            snap.per_method_branches.insert(m.clone(), pair);
                        }
                        _ => {}
                    }
                }
            }
            _ => {}
        }
        if !empty {
            depth += 1;
        }
    }
    snap.lines_covered = report_line.covered;
    snap.lines_total = report_line.covered + report_line.missed;
    snap.branches_covered = report_branch.covered;
    snap.branches_total = report_branch.covered + report_branch.missed;
    // methods without branches have no BRANCH counter
    let keys: Vec<String> = snap.per_method_lines.keys().cloned().collect();
    for k in keys {
        snap.per_method_branches.entry(k).or_insert((0, 0));
    }
    Ok(snap)
}

/// Parses PIT's `mutations.xml`; detected mutants count as killed.
pub fn parse_pit(xml: &str) -> Result<MutationSnapshot, ReportError> {
    let mut reader = Reader::from_str(xml);
    let mut snap = MutationSnapshot::default();
    loop {
        match reader.read_event() {
            Ok(Event::Start(e)) | Ok(Event::Empty(e)) if e.name().as_ref() == "mutation" => {
                snap.mutants_total += 1;
                if attr(&e, "detected").as_deref() == Some("true") {
                    snap.mutants_killed += 1;
                }
            }
            Ok(Event::Eof) => break,
            Err(e) => return Err(ReportError(e.to_string())),
            _ => {}
        }
    }
    Ok(snap)
}
