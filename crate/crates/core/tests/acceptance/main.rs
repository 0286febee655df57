//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod aggregation;
mod common;
mod extra_content;
mod granularity;
mod mwu;
mod rates;
mod repair;
mod replay;
mod sanitizer;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::Verdict;

struct Criterion {
    id: u8,
    title: &'static str,
    budget: Duration,
    run: fn() -> anyhow::Result<Verdict>,
}

fn fmt_duration(d: Duration) -> String {
    if d < Duration::from_secs(1) {
        format!("{} ms", d.as_millis())
    } else {
        format!("{:.1} s", d.as_secs_f64())
    }
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            title: "compilation/passing rates from reference counts (±0.01 pp)",
            budget: Duration::from_secs(1),
            run: rates::check,
        },
        Criterion {
            id: 2,
            title: "repair loop bound: 1 + 5 requests when never passing, 1 on first-turn success",
            budget: Duration::from_secs(10),
            run: repair::check,
        },
        Criterion {
            id: 3,
            title: "hybrid requests <= class + method over 50 trials, = class under full coverage",
            budget: Duration::from_secs(120),
            run: granularity::check_cost,
        },
        Criterion {
            id: 4,
            title: "combined line/branch coverage >= max(class, method) on every trial (exact)",
            budget: Duration::from_secs(60),
            run: granularity::check_union,
        },
        Criterion {
            id: 5,
            title: "exact Mann-Whitney U vs brute-force enumeration (1e-12), per-project samples non-significant",
            budget: Duration::from_secs(30),
            run: mwu::check,
        },
        Criterion {
            id: 6,
            title: "sanitizer: clean compile and partition invariant on 100 fault-injection fixtures",
            budget: Duration::from_secs(60),
            run: sanitizer::check,
        },
        Criterion {
            id: 7,
            title: "extra-content detector: 100% agreement on 22 labeled fixtures",
            budget: Duration::from_secs(10),
            run: extra_content::check,
        },
        Criterion {
            id: 8,
            title: "replay determinism: identical artifacts and ledger, every mutation detected",
            budget: Duration::from_secs(60),
            run: replay::check,
        },
        Criterion {
            id: 9,
            title: "pooled aggregation: 20/30 and distinct from the per-project mean (exact)",
            budget: Duration::from_secs(1),
            run: aggregation::check,
        },
    ];

    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = (c.run)();
        let measured = start.elapsed();
        let (mut pass, mut detail, elapsed) = match result {
            Ok(v) => (v.pass, v.detail, v.runtime.unwrap_or(measured)),
            Err(e) => (false, format!("error: {e:#}"), measured),
        };
        if elapsed > c.budget {
            pass = false;
            detail.push_str(&format!("; over the {} budget", fmt_duration(c.budget)));
        }
        if !pass {
            failed += 1;
        }
        println!(
            "{} [{}] {}: {} ({})",
            if pass { "PASS" } else { "FAIL" },
            c.id,
            c.title,
            detail,
            fmt_duration(elapsed)
        );
    }
    println!(
        "{} of {} acceptance criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
