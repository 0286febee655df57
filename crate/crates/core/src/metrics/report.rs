//! Cross-mode report: `report.json`, `report.md` and `report.csv`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{aggregate, compilation_rate, mann_whitney_u, passing_rate, percent, SuiteMetrics, Totals};

const MODE_ORDER: &[&str] = &["class_level", "method_level", "combined", "hybrid"];

/// What a report needs from one completed run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub project: String,
    pub mode: String,
    pub metrics: SuiteMetrics,
    pub totals: Totals,
    #[serde(default)]
    pub hybrid_fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Cell {
    Ratio(Option<f64>),
    Count(u64),
    Mean(Option<f64>),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Ratio(r) => percent(*r),
            Cell::Count(c) => c.to_string(),
            Cell::Mean(Some(m)) => format!("{m:.2}"),
            Cell::Mean(None) => "n/a".into(),
        }
    }

    fn csv_value(&self) -> String {
        match self {
            Cell::Ratio(Some(r)) | Cell::Mean(Some(r)) => format!("{r}"),
            Cell::Ratio(None) | Cell::Mean(None) => String::new(),
            Cell::Count(c) => c.to_string(),
        }
    }

    fn ratio(&self) -> Option<f64> {
        match self {
            Cell::Ratio(r) => *r,
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TableRow {
    pub label: String,
    pub values: BTreeMap<String, Cell>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricTable {
    pub metric: String,
    pub title: String,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SignificanceRow {
    pub metric: String,
    pub mode_a: String,
    pub mode_b: String,
    pub n_a: usize,
    pub n_b: usize,
    pub u_statistic: f64,
    pub p_value: f64,
    pub significant: bool,
    pub exact: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub modes: Vec<String>,
    pub projects: Vec<String>,
    pub tables: Vec<MetricTable>,
    pub significance: Vec<SignificanceRow>,
    pub hybrid_fallback_projects: Vec<String>,
    pub runs: Vec<RunRecord>,
}

#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub json: PathBuf,
    pub markdown: PathBuf,
    pub csv: PathBuf,
}

type Extract = fn(&RunRecord) -> Cell;
type Pool = fn(&[&RunRecord]) -> Cell;

fn sum(rs: &[&RunRecord], f: fn(&RunRecord) -> u64) -> Cell {
    Cell::Count(rs.iter().map(|r| f(r)).sum())
}

fn pooled_totals(rs: &[&RunRecord]) -> Option<super::Aggregate> {
    let t: Vec<Totals> = rs.iter().map(|r| r.totals).collect();
    aggregate(&t).ok()
}

fn metric_specs() -> Vec<(&'static str, &'static str, Extract, Pool)> {
    vec![
        (
            "line_coverage",
            "Line coverage",
            |r| Cell::Ratio(r.metrics.line_cov),
            |rs| Cell::Ratio(pooled_totals(rs).and_then(|a| a.line_cov)),
        ),
        (
            "branch_coverage",
            "Branch coverage",
            |r| Cell::Ratio(r.metrics.branch_cov),
            |rs| Cell::Ratio(pooled_totals(rs).and_then(|a| a.branch_cov)),
        ),
        (
            "mutation_score",
            "Mutation score",
            |r| Cell::Ratio(r.metrics.mutation_score),
            |rs| Cell::Ratio(pooled_totals(rs).and_then(|a| a.mutation_score)),
        ),
        (
            "compilation_rate",
            "Compilation rate",
            |r| Cell::Ratio(r.metrics.compilation_rate),
            |rs| {
                let n: u32 = rs.iter().map(|r| r.metrics.n_generated).sum();
                let nc: u32 = rs.iter().map(|r| r.metrics.n_non_compiling).sum();
                Cell::Ratio(compilation_rate(n, nc).ok())
            },
        ),
        (
            "passing_rate",
            "Passing rate",
            |r| Cell::Ratio(r.metrics.passing_rate),
            |rs| {
                let n: u32 = rs.iter().map(|r| r.metrics.n_generated).sum();
                let nc: u32 = rs.iter().map(|r| r.metrics.n_non_compiling).sum();
                let np: u32 = rs.iter().map(|r| r.metrics.n_non_passing).sum();
                Cell::Ratio(passing_rate(n, nc, np).ok())
            },
        ),
        (
            "generated_tests",
            "Generated tests",
            |r| Cell::Count(u64::from(r.metrics.n_generated)),
            |rs| sum(rs, |r| u64::from(r.metrics.n_generated)),
        ),
        (
            "requests",
            "LLM requests",
            |r| Cell::Count(r.metrics.total_requests),
            |rs| sum(rs, |r| r.metrics.total_requests),
        ),
        (
            "additional_classes",
            "Additional classes",
            |r| Cell::Count(u64::from(r.metrics.extra_content.additional_classes)),
            |rs| sum(rs, |r| u64::from(r.metrics.extra_content.additional_classes)),
        ),
        (
            "additional_interfaces",
            "Additional interfaces",
            |r| Cell::Count(u64::from(r.metrics.extra_content.additional_interfaces)),
            |rs| sum(rs, |r| u64::from(r.metrics.extra_content.additional_interfaces)),
        ),
        (
            "overriding_classes",
            "Overriding classes",
            |r| Cell::Count(u64::from(r.metrics.extra_content.overriding_classes)),
            |rs| sum(rs, |r| u64::from(r.metrics.extra_content.overriding_classes)),
        ),
        (
            "empty_placeholder_classes",
            "Empty placeholder classes",
            |r| Cell::Count(u64::from(r.metrics.extra_content.empty_placeholder_classes)),
            |rs| sum(rs, |r| u64::from(r.metrics.extra_content.empty_placeholder_classes)),
        ),
    ]
}

fn mean_of(cells: &[Cell]) -> Cell {
    let values: Vec<f64> = cells
        .iter()
        .filter_map(|c| match c {
            Cell::Ratio(r) => *r,
            Cell::Count(n) => Some(*n as f64),
            Cell::Mean(m) => *m,
        })
        .collect();
    let m = (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64);
    match cells.first() {
        Some(Cell::Ratio(_)) => Cell::Ratio(m),
        _ => Cell::Mean(m),
    }
}

pub fn build_report(runs: &[RunRecord]) -> Report {
    let mut by_key: BTreeMap<(String, String), RunRecord> = BTreeMap::new();
    for r in runs {
        if by_key
            .insert((r.mode.clone(), r.project.clone()), r.clone())
            .is_some()
        {
            tracing::warn!(mode = %r.mode, project = %r.project, "duplicate run, keeping the last");
        }
    }
    let present: BTreeSet<&str> = by_key.keys().map(|(m, _)| m.as_str()).collect();
    let mut modes: Vec<String> = MODE_ORDER
        .iter()
        .filter(|m| present.contains(*m))
        .map(|m| m.to_string())
        .collect();
    modes.extend(
        present
            .iter()
            .filter(|m| !MODE_ORDER.contains(m))
            .map(|m| m.to_string()),
    );
    let projects: Vec<String> = by_key
        .keys()
        .map(|(_, p)| p.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();

    let mut tables = Vec::new();
    for (metric, title, extract, pool) in metric_specs() {
        let mut rows = Vec::new();
        for p in &projects {
            let values = modes
                .iter()
                .filter_map(|m| {
                    by_key
                        .get(&(m.clone(), p.clone()))
                        .map(|r| (m.clone(), extract(r)))
                })
                .collect();
            rows.push(TableRow {
                label: p.clone(),
                values,
            });
        }
        let mut total = BTreeMap::new();
        let mut mean = BTreeMap::new();
        for m in &modes {
            let rs: Vec<&RunRecord> = by_key
                .iter()
                .filter(|((mode, _), _)| mode == m)
                .map(|(_, r)| r)
                .collect();
            total.insert(m.clone(), pool(&rs));
            let cells: Vec<Cell> = rs.iter().map(|r| extract(r)).collect();
            mean.insert(m.clone(), mean_of(&cells));
        }
        rows.push(TableRow {
            label: "Total".into(),
            values: total,
        });
        rows.push(TableRow {
            label: "Mean".into(),
            values: mean,
        });
        tables.push(MetricTable {
            metric: metric.into(),
            title: title.into(),
            rows,
        });
    }

    let mut significance = Vec::new();
    for (metric, _, extract, _) in metric_specs().into_iter().take(3) {
        for (i, a) in modes.iter().enumerate() {
            for b in &modes[i + 1..] {
                let sample = |mode: &String| -> Vec<f64> {
                    projects
                        .iter()
                        .filter_map(|p| by_key.get(&(mode.clone(), p.clone())))
                        .filter_map(|r| extract(r).ratio())
                        .collect()
                };
                let (sa, sb) = (sample(a), sample(b));
                if let Ok(res) = mann_whitney_u(&sa, &sb) {
                    significance.push(SignificanceRow {
                        metric: metric.into(),
                        mode_a: a.clone(),
                        mode_b: b.clone(),
                        n_a: sa.len(),
                        n_b: sb.len(),
                        u_statistic: res.u_statistic,
                        p_value: res.p_value,
                        significant: res.significant,
                        exact: res.exact,
                    });
                }
            }
        }
    }

    Report {
        hybrid_fallback_projects: by_key
            .values()
            .filter(|r| r.hybrid_fallback)
            .map(|r| r.project.clone())
            .collect(),
        modes,
        projects,
        tables,
        significance,
        runs: by_key.into_values().collect(),
    }
}

pub fn render_markdown(report: &Report) -> String {
    let mut out = String::from("# Test generation report\n");
    for table in &report.tables {
        out.push_str(&format!("\n## {}\n\n| Project |", table.title));
        for m in &report.modes {
            out.push_str(&format!(" {m} |"));
        }
        out.push_str("\n|---|");
        for _ in &report.modes {
            out.push_str("---:|");
        }
        out.push('\n');
        for row in &table.rows {
            let label = if row.label == "Total" || row.label == "Mean" {
                format!("**{}**", row.label)
            } else {
                row.label.clone()
            };
            out.push_str(&format!("| {label} |"));
            for m in &report.modes {
                let cell = row.values.get(m).map(Cell::render).unwrap_or_else(|| "-".into());
                out.push_str(&format!(" {cell} |"));
            }
            out.push('\n');
        }
    }
    out.push_str("\n## Significance (two-sided Mann-Whitney U over per-project values, alpha = 0.05)\n\n");
    if report.significance.is_empty() {
        out.push_str("Not enough modes to compare.\n");
    } else {
        out.push_str("| Metric | A | B | n_a | n_b | U | p | Significant |\n|---|---|---|---:|---:|---:|---:|---|\n");
        for s in &report.significance {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {:.4}{} | {} |\n",
                s.metric,
                s.mode_a,
                s.mode_b,
                s.n_a,
                s.n_b,
                s.u_statistic,
                s.p_value,
                if s.exact { "" } else { " (approx.)" },
                if s.significant { "yes" } else { "no" }
            ));
        }
    }
    if !report.hybrid_fallback_projects.is_empty() {
        out.push_str(&format!(
            "\nHybrid fell back to full method-level generation (coverage unavailable) for: {}\n",
            report.hybrid_fallback_projects.join(", ")
        ));
    }
    out
}

pub fn render_csv(report: &Report) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["project", "mode", "metric", "value"])?;
    for table in &report.tables {
        for row in table.rows.iter().filter(|r| report.projects.contains(&r.label)) {
            for (mode, cell) in &row.values {
                w.write_record([&row.label, mode, &table.metric, &cell.csv_value()])?;
            }
        }
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn emit_report(runs: &[RunRecord], out_dir: &Path) -> std::io::Result<ReportFiles> {
    let report = build_report(runs);
    std::fs::create_dir_all(out_dir)?;
    let files = ReportFiles {
        json: out_dir.join("report.json"),
        markdown: out_dir.join("report.md"),
        csv: out_dir.join("report.csv"),
    };
    std::fs::write(
        &files.json,
        serde_json::to_string_pretty(&report).map_err(std::io::Error::other)?,
    )?;
    std::fs::write(&files.markdown, render_markdown(&report))?;
    std::fs::write(
        &files.csv,
        render_csv(&report).map_err(std::io::Error::other)?,
    )?;
    Ok(files)
}
