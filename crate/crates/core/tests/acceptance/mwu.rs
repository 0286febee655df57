use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use testgen_core::metrics::mann_whitney_u;

use crate::common::Verdict;

const MAX_N: usize = 6;
const SAMPLES_PER_SHAPE: usize = 25;
const TOLERANCE: f64 = 1e-12;

/// Combined and hybrid columns per project, in percent.
const LINE_COMBINED: [f64; 6] = [49.07, 49.89, 51.06, 44.72, 69.08, 63.67];
const LINE_HYBRID: [f64; 6] = [49.47, 44.30, 47.86, 43.98, 71.47, 63.98];
const BRANCH_COMBINED: [f64; 6] = [36.05, 35.71, 53.39, 31.87, 55.37, 40.22];
const BRANCH_HYBRID: [f64; 6] = [38.56, 33.03, 54.30, 31.87, 62.22, 40.14];

/// Twice the midrank of `x` in `pooled`: 2 * (#smaller) + #equal + 1.
fn doubled_midrank(x: f64, pooled: &[f64]) -> i64 {
    let smaller = pooled.iter().filter(|&&y| y < x).count() as i64;
    let equal = pooled.iter().filter(|&&y| y == x).count() as i64;
    2 * smaller + equal + 1
}

/// Two-sided p by enumerating every way to pick which pooled positions form
/// the first sample.
fn brute_force_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    let na = a.len();
    let ranks: Vec<i64> = pooled.iter().map(|&x| doubled_midrank(x, &pooled)).collect();
    // doubled U = doubled rank sum - na (na + 1); its mean is na * nb
    let centre = (na * (n - na)) as i64;
    let dev = |mask: u32| -> i64 {
        let sum: i64 = (0..n).filter(|i| mask & (1 << i) != 0).map(|i| ranks[i]).sum();
        (sum - (na * (na + 1)) as i64 - centre).abs()
    };
    let observed = dev((1u32 << na) - 1);
    let mut extreme = 0u64;
    let mut total = 0u64;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != na {
            continue;
        }
        total += 1;
        if dev(mask) >= observed {
            extreme += 1;
        }
    }
    extreme as f64 / total as f64
}

fn sample(rng: &mut ChaCha8Rng, n: usize, tied: bool) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if tied {
                f64::from(rng.random_range(0..4u8))
            } else {
                rng.random_range(0.0..100.0)
            }
        })
        .collect()
}

pub fn check() -> anyhow::Result<Verdict> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0dd5);
    let mut cases = 0;
    let mut worst = 0.0f64;
    let mut first_bad = None;
    for na in 1..=MAX_N {
        for nb in 1..=MAX_N {
            for k in 0..SAMPLES_PER_SHAPE {
                let tied = k % 2 == 0;
                let a = sample(&mut rng, na, tied);
                let b = sample(&mut rng, nb, tied);
                let got = mann_whitney_u(&a, &b)?;
                let want = brute_force_p(&a, &b);
                let err = (got.p_value - want).abs();
                worst = worst.max(err);
                cases += 1;
                if (err > TOLERANCE || !got.exact) && first_bad.is_none() {
                    first_bad = Some(format!("{a:?} vs {b:?}: {} vs {want}", got.p_value));
                }
            }
        }
    }

    let branch = mann_whitney_u(&BRANCH_COMBINED, &BRANCH_HYBRID)?;
    let line = mann_whitney_u(&LINE_COMBINED, &LINE_HYBRID)?;
    let pass = first_bad.is_none() && branch.p_value > 0.05 && line.p_value > 0.05;
    let mut detail = format!(
        "{cases} samples, max |dp| = {worst:.1e}; per-project combined vs hybrid: branch U = {}, p = {:.4} (reference 0.92), line U = {}, p = {:.4} (reference 0.75)",
        branch.u_statistic, branch.p_value, line.u_statistic, line.p_value
    );
    if let Some(b) = first_bad {
        detail.push_str(&format!("; mismatch {b}"));
    }
    Ok(Verdict::new(pass, detail))
}
