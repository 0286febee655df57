use testgen_core::metrics::{compilation_rate, passing_rate};

use crate::common::Verdict;

const TOLERANCE_PP: f64 = 0.01;

pub fn check() -> anyhow::Result<Verdict> {
    // (label, computed, reference percent, reference numerator, generated)
    let cases = [
        ("class compile", compilation_rate(3232, 367)?, 88.64, 2865, 3232),
        ("class pass", passing_rate(3232, 367, 1232)?, 50.53, 1633, 3232),
        ("method compile", compilation_rate(12158, 1904)?, 84.34, 10254, 12158),
        ("method pass", passing_rate(12158, 1904, 3762)?, 53.40, 6492, 12158),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, rate, reference, numerator, generated) in cases {
        let pp = rate * 100.0;
        let fraction_ok = (rate * f64::from(generated)).round() as u32 == numerator;
        let ok = (pp - reference).abs() <= TOLERANCE_PP && fraction_ok;
        pass &= ok;
        parts.push(format!("{label} {pp:.4}% vs {reference:.2}% ({numerator}/{generated})"));
    }
    Ok(Verdict::new(pass, parts.join(", ")))
}
