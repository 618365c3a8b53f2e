use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::metrics::accuracy;
use crate::error::{Error, Result};
use crate::nnet::{train_logreg, LogRegOptions};
use crate::rng;

pub const PROBE_TEST_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub accuracy: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub n_users: usize,
    /// Users left out for having fewer than two samples.
    pub excluded_users: Vec<usize>,
}

/// Stratified split: each user contributes `round(0.2 n_u)` (at least one,
/// at most `n_u - 1`) shuffled samples to the test side.
pub fn stratified_split(users: &[usize], test_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    let n_users = users.iter().map(|u| u + 1).max().unwrap_or(0);
    let mut by_user: Vec<Vec<usize>> = vec![Vec::new(); n_users];
    for (i, &u) in users.iter().enumerate() {
        by_user[u].push(i);
    }
    let (mut train, mut test, mut excluded) = (Vec::new(), Vec::new(), Vec::new());
    for (u, mut rows) in by_user.into_iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        if rows.len() < 2 {
            excluded.push(u);
            continue;
        }
        let mut r = rng::stream(seed, &[rng::label("probe-split"), u as u64]);
        rows.shuffle(&mut r);
        let k = ((rows.len() as f64 * test_fraction).round() as usize).clamp(1, rows.len() - 1);
        test.extend_from_slice(&rows[..k]);
        train.extend_from_slice(&rows[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    (train, test, excluded)
}

/// Held-out accuracy of a logistic-regression identity classifier trained on
/// representations.
pub fn probe_identity(reps: ArrayView2<'_, f64>, users: &[usize], seed: u64) -> Result<ProbeResult> {
    if reps.nrows() != users.len() {
        return Err(Error::DimensionMismatch {
            expected: users.len(),
            actual: reps.nrows(),
        });
    }
    let (train, test, excluded) = stratified_split(users, PROBE_TEST_FRACTION, seed);
    for u in &excluded {
        log::warn!("user {u} has fewer than 2 samples; excluded from the identity probe");
    }
    if train.is_empty() {
        return Err(Error::EmptyDataset);
    }
    // contiguous class ids for users that remain
    let mut present: Vec<usize> = train.iter().map(|&i| users[i]).collect();
    present.sort_unstable();
    present.dedup();
    if present.len() < 2 {
        return Err(Error::SingleClass);
    }
    let class_of = |u: usize| present.binary_search(&u).expect("user present");
    let ytr: Vec<usize> = train.iter().map(|&i| class_of(users[i])).collect();
    let yte: Vec<usize> = test.iter().map(|&i| class_of(users[i])).collect();
    let model = train_logreg(reps.select(Axis(0), &train).view(), &ytr, present.len(), &LogRegOptions::default())?;
    let pred = model.predict(reps.select(Axis(0), &test).view())?;
    Ok(ProbeResult {
        accuracy: accuracy(&pred, &yte)?,
        n_train: train.len(),
        n_test: test.len(),
        n_users: present.len(),
        excluded_users: excluded,
    })
}
