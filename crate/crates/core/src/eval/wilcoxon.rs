//! Wilcoxon signed-rank and rank-sum tests. Exact null distributions are
//! built by dynamic programming over doubled (integer) average ranks, which
//! stays exact in the presence of ties.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const SIGNIFICANCE: f64 = 0.05;
pub const SIGNED_RANK_EXACT_MAX: usize = 12;
pub const RANK_SUM_EXACT_MIN_MAX: usize = 8;
pub const RANK_SUM_EXACT_TOTAL_MAX: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignedRank {
    pub w_plus: f64,
    pub w_minus: f64,
    /// Pairs with a non-zero difference.
    pub n: usize,
    /// P(W+ <= observed): evidence that `a` tends to be smaller.
    pub p_less: f64,
    /// P(W+ >= observed).
    pub p_greater: f64,
    pub p_value: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSum {
    /// Mann-Whitney U of the first sample.
    pub u: f64,
    pub rank_sum: f64,
    pub p_less: f64,
    pub p_greater: f64,
    pub p_value: f64,
    pub exact: bool,
}

/// Doubled average ranks (1-based) of `v`, plus the tie-group sizes.
pub fn doubled_ranks(v: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0u64; v.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let doubled = (i + 1 + j + 1) as u64;
        for &k in &idx[i..=j] {
            ranks[k] = doubled;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

fn two_sided(p_less: f64, p_greater: f64) -> f64 {
    (2.0 * p_less.min(p_greater)).min(1.0)
}

fn normal_tails(z: f64) -> (f64, f64) {
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    (n.cdf(z), n.sf(z))
}

fn tie_term(ties: &[usize]) -> f64 {
    ties.iter().map(|&t| (t * t * t - t) as f64).sum()
}

/// Paired test on `a - b`. Zero differences are dropped.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<SignedRank> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if d.is_empty() {
        return Err(Error::Degenerate("all paired differences are zero".into()));
    }
    let n = d.len();
    let abs: Vec<f64> = d.iter().map(|x| x.abs()).collect();
    let (r2, ties) = doubled_ranks(&abs);
    let w2_plus: u64 = d.iter().zip(&r2).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let total2: u64 = r2.iter().sum();
    let w_plus = w2_plus as f64 / 2.0;
    let w_minus = (total2 - w2_plus) as f64 / 2.0;

    let (p_less, p_greater, exact) = if n <= SIGNED_RANK_EXACT_MAX {
        let mut dist = vec![0u64; total2 as usize + 1];
        dist[0] = 1;
        for &r in &r2 {
            for s in (r as usize..dist.len()).rev() {
                dist[s] += dist[s - r as usize];
            }
        }
        let all = (1u64 << n) as f64;
        let le: u64 = dist[..=w2_plus as usize].iter().sum();
        let ge: u64 = dist[w2_plus as usize..].iter().sum();
        (le as f64 / all, ge as f64 / all, true)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term(&ties) / 48.0;
        if var <= 0.0 {
            (1.0, 1.0, false)
        } else {
            let (l, g) = normal_tails((w_plus - mean) / var.sqrt());
            (l, g, false)
        }
    };
    Ok(SignedRank {
        w_plus,
        w_minus,
        n,
        p_less,
        p_greater,
        p_value: two_sided(p_less, p_greater),
        exact,
    })
}

/// Two-sample test of `a` against `b`.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> Result<RankSum> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Err(Error::validation("rank-sum test needs two non-empty samples"));
    }
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let (r2, ties) = doubled_ranks(&all);
    let sum2: u64 = r2[..n].iter().sum();
    let rank_sum = sum2 as f64 / 2.0;
    let nf = n as f64;
    let mf = m as f64;
    let u = rank_sum - nf * (nf + 1.0) / 2.0;
    let big = n + m;

    let (p_less, p_greater, exact) = if n.min(m) <= RANK_SUM_EXACT_MIN_MAX && big <= RANK_SUM_EXACT_TOTAL_MAX {
        let total2: u64 = r2.iter().sum();
        // dp[k][s]: subsets of size k with doubled rank sum s
        let mut dp = vec![vec![0u64; total2 as usize + 1]; n + 1];
        dp[0][0] = 1;
        for &r in &r2 {
            for k in (1..=n).rev() {
                for s in (r as usize..=total2 as usize).rev() {
                    dp[k][s] += dp[k - 1][s - r as usize];
                }
            }
        }
        let row = &dp[n];
        let count: u64 = row.iter().sum();
        let le: u64 = row[..=sum2 as usize].iter().sum();
        let ge: u64 = row[sum2 as usize..].iter().sum();
        (le as f64 / count as f64, ge as f64 / count as f64, true)
    } else {
        let nn = big as f64;
        let mean = nf * mf / 2.0;
        let var = nf * mf / 12.0 * ((nn + 1.0) - tie_term(&ties) / (nn * (nn - 1.0)));
        if var <= 0.0 {
            (1.0, 1.0, false)
        } else {
            let (l, g) = normal_tails((u - mean) / var.sqrt());
            (l, g, false)
        }
    };
    Ok(RankSum {
        u,
        rank_sum,
        p_less,
        p_greater,
        p_value: two_sided(p_less, p_greater),
        exact,
    })
}
