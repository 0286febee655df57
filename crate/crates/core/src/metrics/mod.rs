//! Effectiveness and cost metrics, pooled aggregation and significance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sanitizer::{ExtraContentStats, FailureCounts};
use crate::toolchain::{CoverageSnapshot, MutationSnapshot};

pub mod mwu;
pub mod report;

pub use mwu::{mann_whitney_u, SignificanceResult};
pub use report::{emit_report, ReportFiles};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("rate undefined: no tests were generated")]
    UndefinedRate,
    #[error("inconsistent counts: {0}")]
    InconsistentCounts(String),
    #[error("Mann-Whitney U needs two non-empty samples")]
    EmptySample,
    #[error("sample contains NaN")]
    NotANumber,
    #[error("aggregation needs at least one snapshot")]
    NoSnapshots,
}

/// (generated − non-compiling) / generated.
pub fn compilation_rate(n_generated: u32, n_non_compiling: u32) -> Result<f64, MetricsError> {
    if n_generated == 0 {
        return Err(MetricsError::UndefinedRate);
    }
    if n_non_compiling > n_generated {
        return Err(MetricsError::InconsistentCounts(format!(
            "{n_non_compiling} non-compiling of {n_generated}"
        )));
    }
    Ok(f64::from(n_generated - n_non_compiling) / f64::from(n_generated))
}

/// (generated − (non-compiling + non-passing)) / generated.
pub fn passing_rate(
    n_generated: u32,
    n_non_compiling: u32,
    n_non_passing: u32,
) -> Result<f64, MetricsError> {
    if n_generated == 0 {
        return Err(MetricsError::UndefinedRate);
    }
    let failing = n_non_compiling + n_non_passing;
    if failing > n_generated {
        return Err(MetricsError::InconsistentCounts(format!(
            "{failing} failing of {n_generated}"
        )));
    }
    Ok(f64::from(n_generated - failing) / f64::from(n_generated))
}

/// Metrics of one strategy run on one project.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SuiteMetrics {
    pub n_generated: u32,
    pub n_non_compiling: u32,
    pub n_non_passing: u32,
    /// `None` when nothing was generated.
    pub compilation_rate: Option<f64>,
    pub passing_rate: Option<f64>,
    pub total_requests: u64,
    pub line_cov: Option<f64>,
    pub branch_cov: Option<f64>,
    pub mutation_score: Option<f64>,
    pub extra_content: ExtraContentStats,
}

impl SuiteMetrics {
    pub fn compute(
        counts: FailureCounts,
        total_requests: u64,
        coverage: Option<&CoverageSnapshot>,
        mutation: Option<&MutationSnapshot>,
        extra_content: ExtraContentStats,
    ) -> Self {
        Self {
            n_generated: counts.n_generated,
            n_non_compiling: counts.n_non_compiling,
            n_non_passing: counts.n_non_passing,
            compilation_rate: compilation_rate(counts.n_generated, counts.n_non_compiling).ok(),
            passing_rate: passing_rate(
                counts.n_generated,
                counts.n_non_compiling,
                counts.n_non_passing,
            )
            .ok(),
            total_requests,
            line_cov: coverage.and_then(CoverageSnapshot::line_ratio),
            branch_cov: coverage.and_then(CoverageSnapshot::branch_ratio),
            mutation_score: mutation.and_then(MutationSnapshot::score),
            extra_content,
        }
    }
}

/// Raw covered/total counts of one project.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub lines_covered: u64,
    pub lines_total: u64,
    pub branches_covered: u64,
    pub branches_total: u64,
    pub mutants_killed: u64,
    pub mutants_total: u64,
}

impl Totals {
    pub fn from_snapshots(c: &CoverageSnapshot, m: &MutationSnapshot) -> Self {
        Self {
            lines_covered: c.lines_covered,
            lines_total: c.lines_total,
            branches_covered: c.branches_covered,
            branches_total: c.branches_total,
            mutants_killed: m.mutants_killed,
            mutants_total: m.mutants_total,
        }
    }

    /// Line, branch and mutation ratios; `None` where the total is zero.
    pub fn ratios(&self) -> [Option<f64>; 3] {
        let r = |a: u64, b: u64| (b > 0).then(|| a as f64 / b as f64);
        [
            r(self.lines_covered, self.lines_total),
            r(self.branches_covered, self.branches_total),
            r(self.mutants_killed, self.mutants_total),
        ]
    }
}

impl std::ops::Add for Totals {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self {
            lines_covered: self.lines_covered + o.lines_covered,
            lines_total: self.lines_total + o.lines_total,
            branches_covered: self.branches_covered + o.branches_covered,
            branches_total: self.branches_total + o.branches_total,
            mutants_killed: self.mutants_killed + o.mutants_killed,
            mutants_total: self.mutants_total + o.mutants_total,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub pooled: Totals,
    pub line_cov: Option<f64>,
    pub branch_cov: Option<f64>,
    pub mutation_score: Option<f64>,
    /// Unweighted means of the per-project ratios (secondary column).
    pub mean_line_cov: Option<f64>,
    pub mean_branch_cov: Option<f64>,
    pub mean_mutation_score: Option<f64>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let v: Vec<f64> = values.flatten().collect();
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Dataset-wide totals: covered and total counts are summed over projects
/// before dividing.
pub fn aggregate(projects: &[Totals]) -> Result<Aggregate, MetricsError> {
    if projects.is_empty() {
        return Err(MetricsError::NoSnapshots);
    }
    let pooled = projects.iter().copied().fold(Totals::default(), |a, b| a + b);
    let [line_cov, branch_cov, mutation_score] = pooled.ratios();
    let per: Vec<[Option<f64>; 3]> = projects.iter().map(Totals::ratios).collect();
    Ok(Aggregate {
        pooled,
        line_cov,
        branch_cov,
        mutation_score,
        mean_line_cov: mean(per.iter().map(|r| r[0])),
        mean_branch_cov: mean(per.iter().map(|r| r[1])),
        mean_mutation_score: mean(per.iter().map(|r| r[2])),
    })
}

/// Percent with two decimals, e.g. `88.64%`.
pub fn percent(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{:.2}%", v * 100.0),
        None => "n/a".into(),
    }
}
