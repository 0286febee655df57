use testgen_core::metrics::report::{build_report, Cell, RunRecord};
use testgen_core::metrics::{aggregate, SuiteMetrics, Totals};

use crate::common::Verdict;

fn totals(lines: (u64, u64), branches: (u64, u64), mutants: (u64, u64)) -> Totals {
    Totals {
        lines_covered: lines.0,
        lines_total: lines.1,
        branches_covered: branches.0,
        branches_total: branches.1,
        mutants_killed: mutants.0,
        mutants_total: mutants.1,
    }
}

pub fn check() -> anyhow::Result<Verdict> {
    // 15/20 and 5/10: pooled 20/30, mean of ratios (0.75 + 0.5) / 2 = 0.625
    let big = totals((15, 20), (3, 4), (8, 10));
    let small = totals((5, 10), (1, 4), (2, 10));
    let agg = aggregate(&[big, small])?;
    let pooled_ok = agg.pooled == totals((20, 30), (4, 8), (10, 20));
    let line_ok = agg.line_cov == Some(20.0 / 30.0) && agg.mean_line_cov == Some(0.625);
    // equal totals make pooled and mean coincide
    let branch_ok = agg.branch_cov == Some(0.5) && agg.mean_branch_cov == Some(0.5);
    let mutation_ok = agg.mutation_score == Some(0.5) && agg.mean_mutation_score == Some(0.5);

    let record = |project: &str, t: Totals| {
        let [line_cov, branch_cov, mutation_score] = t.ratios();
        RunRecord {
            project: project.into(),
            mode: "hybrid".into(),
            metrics: SuiteMetrics {
                line_cov,
                branch_cov,
                mutation_score,
                ..SuiteMetrics::default()
            },
            totals: t,
            hybrid_fallback: false,
        }
    };
    let report = build_report(&[record("big", big), record("small", small)]);
    let row = |label: &str| {
        report
            .tables
            .iter()
            .find(|t| t.metric == "line_coverage")
            .and_then(|t| t.rows.iter().find(|r| r.label == label))
            .and_then(|r| r.values.get("hybrid").copied())
    };
    let report_ok = matches!(row("Total"), Some(Cell::Ratio(Some(r))) if r == 20.0 / 30.0)
        && matches!(row("Mean"), Some(Cell::Ratio(Some(m))) if m == 0.625);

    let pass = pooled_ok && line_ok && branch_ok && mutation_ok && report_ok;
    let detail = format!(
        "pooled line {}/{} = {:.4}, mean of projects {:.4}; report Total {:?}, Mean {:?}",
        agg.pooled.lines_covered,
        agg.pooled.lines_total,
        agg.line_cov.unwrap_or(f64::NAN),
        agg.mean_line_cov.unwrap_or(f64::NAN),
        row("Total"),
        row("Mean")
    );
    Ok(Verdict::new(pass, detail))
}
