//! Exact t-SNE with a Student-t kernel in two dimensions.

use ndarray::{Array2, ArrayView2};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub min_gain: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            exaggeration: 12.0,
            exaggeration_iters: 250,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            min_gain: 0.01,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneResult {
    pub coords: Array2<f64>,
    /// KL divergence against the unexaggerated affinities, one value per
    /// iteration starting with the initial embedding.
    pub kl_trace: Vec<f64>,
    /// Achieved perplexity per point.
    pub perplexities: Vec<f64>,
}

const PERPLEXITY_TOL: f64 = 1e-5;

fn sq_distances(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = x.nrows();
    let mut d = Array2::zeros((n, n));
    for i in 0..n {
        for j in i + 1..n {
            let v: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            d[[i, j]] = v;
            d[[j, i]] = v;
        }
    }
    d
}

/// Conditional affinities `p(j|i)` with a per-point Gaussian precision found
/// by bisection so that each row's perplexity matches the target.
pub fn conditional_p(x: ArrayView2<'_, f64>, perplexity: f64) -> Result<(Array2<f64>, Vec<f64>)> {
    let n = x.nrows();
    if n < 4 {
        return Err(Error::validation("t-SNE needs at least 4 points"));
    }
    if !(perplexity > 1.0 && perplexity < (n - 1) as f64) {
        return Err(Error::validation(format!(
            "perplexity must lie in (1, {}), got {perplexity}",
            n - 1
        )));
    }
    let d = sq_distances(x);
    let target = perplexity.ln();
    let mut p = Array2::zeros((n, n));
    let mut achieved = Vec::with_capacity(n);
    for i in 0..n {
        let row = d.row(i);
        let dmin = row
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &v)| v)
            .fold(f64::INFINITY, f64::min);
        let (mut lo, mut hi) = (0.0_f64, f64::INFINITY);
        let mut beta = 1.0;
        let mut entropy = 0.0;
        let mut probs = vec![0.0; n];
        for _ in 0..200 {
            let mut sum = 0.0;
            let mut wsum = 0.0;
            for j in 0..n {
                if j == i {
                    probs[j] = 0.0;
                    continue;
                }
                // shift by the nearest distance for stability
                let e = (-(row[j] - dmin) * beta).exp();
                probs[j] = e;
                sum += e;
                wsum += (row[j] - dmin) * e;
            }
            entropy = sum.ln() + beta * wsum / sum;
            for v in probs.iter_mut() {
                *v /= sum;
            }
            let diff = entropy - target;
            if diff.abs() < PERPLEXITY_TOL {
                break;
            }
            if diff > 0.0 {
                lo = beta;
                beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
        achieved.push(entropy.exp());
        for j in 0..n {
            p[[i, j]] = probs[j];
        }
    }
    Ok((p, achieved))
}

/// Symmetrized joint affinities `(p(j|i) + p(i|j)) / 2n`.
pub fn joint_p(cond: &Array2<f64>) -> Array2<f64> {
    let n = cond.nrows() as f64;
    (cond + &cond.t()) / (2.0 * n)
}

fn q_kernel(y: ArrayView2<'_, f64>) -> (Array2<f64>, f64) {
    let n = y.nrows();
    let mut num = Array2::zeros((n, n));
    let mut z = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let dx = y[[i, 0]] - y[[j, 0]];
            let dy = y[[i, 1]] - y[[j, 1]];
            let v = 1.0 / (1.0 + dx * dx + dy * dy);
            num[[i, j]] = v;
            num[[j, i]] = v;
            z += 2.0 * v;
        }
    }
    (num, z)
}

pub fn kl_divergence(p: &Array2<f64>, y: ArrayView2<'_, f64>) -> f64 {
    let (num, z) = q_kernel(y);
    kl_with(p, &num, z)
}

fn kl_with(p: &Array2<f64>, num: &Array2<f64>, z: f64) -> f64 {
    let mut kl = 0.0;
    for ((i, j), &pij) in p.indexed_iter() {
        if i != j && pij > 0.0 {
            let q = (num[[i, j]] / z).max(1e-300);
            kl += pij * (pij / q).ln();
        }
    }
    kl
}

/// Gradient of the KL divergence with respect to the embedding.
pub fn kl_gradient(p: &Array2<f64>, y: ArrayView2<'_, f64>) -> Array2<f64> {
    let (num, z) = q_kernel(y);
    grad_with(p, &num, z, y)
}

fn grad_with(p: &Array2<f64>, num: &Array2<f64>, z: f64, y: ArrayView2<'_, f64>) -> Array2<f64> {
    let n = y.nrows();
    let mut g = Array2::zeros((n, 2));
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let w = 4.0 * (p[[i, j]] - num[[i, j]] / z) * num[[i, j]];
            g[[i, 0]] += w * (y[[i, 0]] - y[[j, 0]]);
            g[[i, 1]] += w * (y[[i, 1]] - y[[j, 1]]);
        }
    }
    g
}

pub fn tsne(x: ArrayView2<'_, f64>, config: &TsneConfig) -> Result<TsneResult> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("t-SNE input must be finite"));
    }
    let (cond, perplexities) = conditional_p(x, config.perplexity)?;
    let p = joint_p(&cond);
    let n = x.nrows();
    let mut r = rng::named(config.seed, "tsne");
    let normal = Normal::new(0.0, 1e-2).expect("valid");
    let mut y = Array2::from_shape_simple_fn((n, 2), || normal.sample(&mut r));
    let mut update = Array2::<f64>::zeros((n, 2));
    let mut gains = Array2::<f64>::ones((n, 2));
    let mut kl_trace = Vec::with_capacity(config.iterations + 1);
    for it in 0..config.iterations {
        let (num, z) = q_kernel(y.view());
        kl_trace.push(kl_with(&p, &num, z));
        let early = it < config.exaggeration_iters;
        let grad = if early {
            grad_with(&(&p * config.exaggeration), &num, z, y.view())
        } else {
            grad_with(&p, &num, z, y.view())
        };
        let momentum = if early { config.initial_momentum } else { config.final_momentum };
        for ((g, u), gain) in grad.iter().zip(update.iter()).zip(gains.iter_mut()) {
            *gain = if (*g > 0.0) != (*u > 0.0) { *gain + 0.2 } else { *gain * 0.8 };
            *gain = gain.max(config.min_gain);
        }
        update = &update * momentum - &(&gains * &grad) * config.learning_rate;
        y += &update;
        let mean = y.mean_axis(ndarray::Axis(0)).expect("non-empty");
        y -= &mean;
    }
    kl_trace.push(kl_divergence(&p, y.view()));
    Ok(TsneResult { coords: y, kl_trace, perplexities })
}
