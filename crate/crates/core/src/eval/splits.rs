use std::cmp::Ordering;
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::datamodel::Dataset;
use crate::error::{Error, Result};

pub const N_FOLDS: usize = 10;

/// How samples are ordered before being cut into contiguous folds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SplitScheme {
    /// Each user's days in date order, interleaved across users by relative
    /// position in their own timeline. Every fold holds a chronological slice
    /// of every user.
    #[default]
    Interleaved,
    /// Sorted by (user, date): folds are mostly single users.
    UserMajor,
    /// Sorted by (date, user).
    DateMajor,
}

impl FromStr for SplitScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interleaved" => Ok(SplitScheme::Interleaved),
            "user" | "user-major" => Ok(SplitScheme::UserMajor),
            "date" | "date-major" => Ok(SplitScheme::DateMajor),
            _ => Err(Error::validation(format!("unknown split scheme {s:?}"))),
        }
    }
}

/// Ten test folds; the inner validation folds of outer fold `k` are the
/// other nine folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub scheme: SplitScheme,
    pub folds: Vec<Vec<usize>>,
}

impl SplitPlan {
    pub fn n_folds(&self) -> usize {
        self.folds.len()
    }

    pub fn n_samples(&self) -> usize {
        self.folds.iter().map(Vec::len).sum()
    }

    pub fn test(&self, k: usize) -> &[usize] {
        &self.folds[k]
    }

    /// All samples outside fold `k`, ascending.
    pub fn outer_train(&self, k: usize) -> Vec<usize> {
        self.train_excluding(&[k])
    }

    /// `(train, validation)` pairs for outer fold `k`.
    pub fn inner(&self, k: usize) -> Vec<(Vec<usize>, Vec<usize>)> {
        (0..self.n_folds())
            .filter(|&j| j != k)
            .map(|j| (self.train_excluding(&[k, j]), self.folds[j].clone()))
            .collect()
    }

    fn train_excluding(&self, skip: &[usize]) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .folds
            .iter()
            .enumerate()
            .filter(|(j, _)| !skip.contains(j))
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        v.sort_unstable();
        v
    }
}

/// Split samples identified by `(user, date)` into [`N_FOLDS`] contiguous
/// blocks whose sizes differ by at most one.
pub fn make_splits_keys(keys: &[(usize, NaiveDate)], scheme: SplitScheme) -> Result<SplitPlan> {
    make_splits_n(keys, scheme, N_FOLDS)
}

pub fn make_splits_n(keys: &[(usize, NaiveDate)], scheme: SplitScheme, n_folds: usize) -> Result<SplitPlan> {
    let n = keys.len();
    if n_folds < 2 {
        return Err(Error::validation("need at least two folds"));
    }
    if n < n_folds {
        return Err(Error::validation(format!("{n} samples cannot fill {n_folds} folds")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| keys[a].cmp(&keys[b]).then(a.cmp(&b)));
    if scheme == SplitScheme::DateMajor {
        order.sort_by(|&a, &b| (keys[a].1, keys[a].0).cmp(&(keys[b].1, keys[b].0)));
    } else if scheme == SplitScheme::Interleaved {
        // position i of n_u within the user's own timeline
        let n_users = keys.iter().map(|k| k.0 + 1).max().unwrap_or(0);
        let mut count = vec![0u64; n_users];
        let mut pos = vec![0u64; n];
        for &i in &order {
            pos[i] = count[keys[i].0];
            count[keys[i].0] += 1;
        }
        order.sort_by(|&a, &b| {
            let (ua, ub) = (keys[a].0, keys[b].0);
            let lhs = pos[a] as u128 * count[ub] as u128;
            let rhs = pos[b] as u128 * count[ua] as u128;
            match lhs.cmp(&rhs) {
                Ordering::Equal => ua.cmp(&ub),
                o => o,
            }
        });
    }
    let base = n / n_folds;
    let extra = n % n_folds;
    let mut folds = Vec::with_capacity(n_folds);
    let mut start = 0;
    for k in 0..n_folds {
        let len = base + usize::from(k >= n_folds - extra);
        let mut f = order[start..start + len].to_vec();
        f.sort_unstable();
        folds.push(f);
        start += len;
    }
    Ok(SplitPlan { scheme, folds })
}

pub fn make_splits(dataset: &Dataset, scheme: SplitScheme) -> Result<SplitPlan> {
    make_splits_with(dataset, scheme, N_FOLDS)
}

pub fn make_splits_with(dataset: &Dataset, scheme: SplitScheme, n_folds: usize) -> Result<SplitPlan> {
    let keys: Vec<(usize, NaiveDate)> = dataset.samples.iter().map(|s| (s.user, s.date)).collect();
    make_splits_n(&keys, scheme, n_folds)
}
