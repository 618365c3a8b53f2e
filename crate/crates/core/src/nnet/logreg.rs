//! Multinomial logistic regression, used as the linear probe.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::lbfgs::{minimize, LbfgsOptions};
use super::{argmax, softmax_rows};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegOptions {
    /// Penalty `l2 / 2 * ||W||^2` (biases are not penalized).
    pub l2: f64,
    pub max_iter: usize,
    pub grad_tol: f64,
}

impl Default for LogRegOptions {
    fn default() -> Self {
        LogRegOptions {
            l2: 1e-4,
            max_iter: 500,
            grad_tol: 1e-5,
        }
    }
}

/// Fitted model. Inputs are standardized with the training mean and scale
/// before the linear map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogReg {
    pub mean: Array1<f64>,
    pub scale: Array1<f64>,
    /// `(features, classes)`
    pub w: Array2<f64>,
    pub b: Array1<f64>,
    pub converged: bool,
    pub loss_trace: Vec<f64>,
}

impl LogReg {
    fn standardize(&self, x: ArrayView2<'_, f64>) -> Array2<f64> {
        (&x - &self.mean) / &self.scale
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.w.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.w.nrows(),
                actual: x.ncols(),
            });
        }
        let mut z = self.standardize(x).dot(&self.w) + &self.b;
        softmax_rows(&mut z);
        Ok(z)
    }

    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        let p = self.predict_proba(x)?;
        Ok(p.rows().into_iter().map(|r| argmax(r.iter().copied())).collect())
    }
}

/// Penalized mean cross-entropy at parameters `p = [W (d x k, row-major), b]`
/// on already standardized inputs; writes the gradient into `g`.
pub fn objective(xs: ArrayView2<'_, f64>, labels: &[usize], k: usize, l2: f64, p: &[f64], g: &mut [f64]) -> f64 {
    let d = xs.ncols();
    let nf = xs.nrows() as f64;
    let w = ndarray::ArrayView2::from_shape((d, k), &p[..d * k]).expect("shape");
    let b = ndarray::ArrayView1::from(&p[d * k..]);
    let mut z = xs.dot(&w) + &b;
    softmax_rows(&mut z);
    let mut loss = 0.0;
    for (r, &y) in labels.iter().enumerate() {
        loss -= z[[r, y]].max(1e-300).ln();
        z[[r, y]] -= 1.0;
    }
    loss /= nf;
    z /= nf;
    let mut gw = xs.t().dot(&z);
    gw.scaled_add(l2, &w);
    let gb = z.sum_axis(Axis(0));
    g[..d * k].copy_from_slice(gw.as_slice().expect("standard layout"));
    g[d * k..].copy_from_slice(gb.as_slice().expect("standard layout"));
    loss + 0.5 * l2 * w.iter().map(|v| v * v).sum::<f64>()
}

/// Fit by L-BFGS on the mean cross-entropy plus the L2 penalty.
pub fn train_logreg(
    x: ArrayView2<'_, f64>,
    labels: &[usize],
    n_classes: usize,
    opts: &LogRegOptions,
) -> Result<LogReg> {
    let (n, d) = x.dim();
    if n == 0 || n != labels.len() {
        return Err(Error::validation("logistic regression needs aligned, non-empty data"));
    }
    if labels.iter().any(|&y| y >= n_classes) {
        return Err(Error::validation("label outside class range"));
    }
    if labels.iter().all(|&y| y == labels[0]) {
        return Err(Error::SingleClass);
    }
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let scale = x
        .std_axis(Axis(0), 0.0)
        .mapv(|s| if s > 1e-12 { s } else { 1.0 });
    let xs = (&x - &mean) / &scale;
    let k = n_classes;
    let objective = |p: &[f64], g: &mut [f64]| objective(xs.view(), labels, k, opts.l2, p, g);
    let res = minimize(
        objective,
        vec![0.0; d * k + k],
        LbfgsOptions {
            max_iter: opts.max_iter,
            grad_tol: opts.grad_tol,
            ..Default::default()
        },
    );
    let w = Array2::from_shape_vec((d, k), res.x[..d * k].to_vec()).expect("shape");
    let b = Array1::from(res.x[d * k..].to_vec());
    Ok(LogReg {
        mean,
        scale,
        w,
        b,
        converged: res.converged,
        loss_trace: res.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_blobs() {
        let x = Array2::from_shape_fn((60, 2), |(i, j)| {
            let c = (i % 3) as f64;
            c * 4.0 * (j as f64 * 2.0 - 1.0) + ((i * 7 + j * 3) % 5) as f64 * 0.1
        });
        let y: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let m = train_logreg(x.view(), &y, 3, &LogRegOptions::default()).unwrap();
        assert_eq!(m.predict(x.view()).unwrap(), y);
        assert!(m.loss_trace.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn constant_feature_is_harmless() {
        let x = Array2::from_shape_fn((10, 2), |(i, j)| if j == 0 { 1.0 } else { i as f64 });
        let y: Vec<usize> = (0..10).map(|i| usize::from(i >= 5)).collect();
        let m = train_logreg(x.view(), &y, 2, &LogRegOptions::default()).unwrap();
        assert_eq!(m.predict(x.view()).unwrap(), y);
    }
}
