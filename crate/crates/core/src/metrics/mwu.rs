//! Two-sided Mann–Whitney U test with midrank ties.
//!
//! Small samples (`n_a * n_b <= 400`) use the exact permutation distribution
//! of the rank sum, computed over doubled midranks so all arithmetic stays in
//! integers. Larger samples use the normal approximation with tie and
//! continuity correction.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::MetricsError;

pub const EXACT_LIMIT: usize = 400;
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignificanceResult {
    /// U of the first sample.
    pub u_statistic: f64,
    pub p_value: f64,
    pub significant: bool,
    pub exact: bool,
}

/// Doubled midranks (2 × average rank) of the pooled sample, and the tie
/// group sizes.
fn doubled_ranks(pooled: &[f64]) -> (Vec<u64>, Vec<u64>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0u64; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1, doubled average = i + j + 2
        for k in i..=j {
            ranks[order[k]] = (i + j + 2) as u64;
        }
        ties.push((j - i + 1) as u64);
        i = j + 1;
    }
    (ranks, ties)
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<SignificanceResult, MetricsError> {
    if a.is_empty() || b.is_empty() {
        return Err(MetricsError::EmptySample);
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(MetricsError::NotANumber);
    }
    let (na, nb) = (a.len(), b.len());
    let n = na + nb;
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = doubled_ranks(&pooled);
    let s_obs: u64 = ranks[..na].iter().sum();
    let u_a = s_obs as f64 / 2.0 - (na * (na + 1)) as f64 / 2.0;

    if na * nb <= EXACT_LIMIT {
        let p = exact_p(&ranks, na, s_obs);
        return Ok(SignificanceResult {
            u_statistic: u_a,
            p_value: p,
            significant: p < ALPHA,
            exact: true,
        });
    }

    let mu = (na * nb) as f64 / 2.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>()
        / (n as f64 * (n as f64 - 1.0));
    let var = (na * nb) as f64 / 12.0 * ((n as f64 + 1.0) - tie_term);
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((u_a - mu).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::standard();
        (2.0 * normal.sf(z)).min(1.0)
    };
    Ok(SignificanceResult {
        u_statistic: u_a,
        p_value: p,
        significant: p < ALPHA,
        exact: false,
    })
}

/// P(|S - E| >= |s_obs - E|) under random assignment of `na` of the ranks
/// to the first sample, with S the doubled rank sum and E its mean.
fn exact_p(ranks: &[u64], na: usize, s_obs: u64) -> f64 {
    let n = ranks.len();
    let max_sum: usize = ranks.iter().sum::<u64>() as usize;
    // counts[k][s]: subsets of size k with doubled rank sum s
    let mut counts = vec![vec![0u128; max_sum + 1]; na + 1];
    counts[0][0] = 1;
    for &r in ranks {
        let r = r as usize;
        for k in (1..=na).rev() {
            let (lower, upper) = counts.split_at_mut(k);
            let prev = &lower[k - 1];
            let cur = &mut upper[0];
            for s in (r..=max_sum).rev() {
                if prev[s - r] != 0 {
                    cur[s] += prev[s - r];
                }
            }
        }
    }
    // E = na (n + 1) in doubled units
    let expected = (na * (n + 1)) as i128;
    let observed_dev = (s_obs as i128 - expected).abs();
    let mut extreme: u128 = 0;
    let mut total: u128 = 0;
    for (s, &c) in counts[na].iter().enumerate() {
        if c == 0 {
            continue;
        }
        total += c;
        if (s as i128 - expected).abs() >= observed_dev {
            extreme += c;
        }
    }
    (extreme as f64 / total as f64).min(1.0)
}
