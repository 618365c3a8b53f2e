//! Kernel support vector machines trained by sequential minimal
//! optimization, with a one-vs-rest multiclass reduction.

mod smo;

use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use smo::{dual_objective, solve_binary, BinarySolution, SMO_TOLERANCE};

use crate::error::{Error, Result};

pub const C_GRID: [f64; 7] = [0.1, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0];
pub const POLY_DEGREES: [u32; 4] = [2, 3, 5, 10];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Kernel {
    /// `exp(-gamma |x - x'|^2)`; `None` uses `1 / (d * var(X))`.
    Rbf { gamma: Option<f64> },
    /// `(x . x' + 1)^degree`
    Poly { degree: u32 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64], gamma: f64) -> f64 {
        match *self {
            Kernel::Rbf { .. } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
            Kernel::Poly { degree } => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                (dot + 1.0).powi(degree as i32)
            }
        }
    }
}

impl std::fmt::Display for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Kernel::Rbf { gamma: None } => f.write_str("rbf"),
            Kernel::Rbf { gamma: Some(g) } => write!(f, "rbf:{g}"),
            Kernel::Poly { degree } => write!(f, "{degree}"),
        }
    }
}

impl FromStr for Kernel {
    type Err = Error;
    /// `rbf`, `rbf:<gamma>` or an integer polynomial degree.
    fn from_str(s: &str) -> Result<Self> {
        if s == "rbf" {
            return Ok(Kernel::Rbf { gamma: None });
        }
        if let Some(g) = s.strip_prefix("rbf:") {
            let gamma = g.parse().map_err(|_| Error::validation(format!("bad gamma {g:?}")))?;
            return Ok(Kernel::Rbf { gamma: Some(gamma) });
        }
        s.parse::<u32>()
            .map(|degree| Kernel::Poly { degree })
            .map_err(|_| Error::validation(format!("unknown kernel {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmSpec {
    pub c: f64,
    pub kernel: Kernel,
}

impl SvmSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::validation(format!("C must be positive, got {}", self.c)));
        }
        match self.kernel {
            Kernel::Rbf { gamma: Some(g) } if !(g > 0.0 && g.is_finite()) => {
                Err(Error::validation(format!("gamma must be positive, got {g}")))
            }
            Kernel::Poly { degree } if degree < 2 => Err(Error::validation("polynomial degree must be at least 2")),
            _ => Ok(()),
        }
    }

    /// Every (C, kernel) pair of the standard grid.
    pub fn grid() -> Vec<SvmSpec> {
        let mut kernels = vec![Kernel::Rbf { gamma: None }];
        kernels.extend(POLY_DEGREES.iter().map(|&degree| Kernel::Poly { degree }));
        C_GRID
            .iter()
            .flat_map(|&c| kernels.iter().map(move |&kernel| SvmSpec { c, kernel }))
            .collect()
    }
}

/// `1 / (d * var)` over all entries of `x`.
pub fn rbf_gamma(x: ArrayView2<'_, f64>) -> f64 {
    let var = x.var(0.0);
    let d = x.ncols().max(1) as f64;
    if var > 0.0 {
        1.0 / (d * var)
    } else {
        1.0 / d
    }
}

/// Symmetric Gram matrix.
pub fn gram(x: ArrayView2<'_, f64>, kernel: Kernel, gamma: f64) -> Array2<f64> {
    let n = x.nrows();
    let dots = x.dot(&x.t());
    let mut k = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            let v = match kernel {
                Kernel::Rbf { .. } => {
                    let d2 = (dots[[i, i]] + dots[[j, j]] - 2.0 * dots[[i, j]]).max(0.0);
                    (-gamma * d2).exp()
                }
                Kernel::Poly { degree } => (dots[[i, j]] + 1.0).powi(degree as i32),
            };
            k[[i, j]] = v;
            k[[j, i]] = v;
        }
    }
    k
}

/// Cross kernel between rows of `a` and rows of `b`.
pub fn cross_gram(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>, kernel: Kernel, gamma: f64) -> Array2<f64> {
    let dots = a.dot(&b.t());
    match kernel {
        Kernel::Rbf { .. } => {
            let na: Vec<f64> = a.rows().into_iter().map(|r| r.dot(&r)).collect();
            let nb: Vec<f64> = b.rows().into_iter().map(|r| r.dot(&r)).collect();
            Array2::from_shape_fn(dots.raw_dim(), |(i, j)| {
                (-gamma * (na[i] + nb[j] - 2.0 * dots[[i, j]]).max(0.0)).exp()
            })
        }
        Kernel::Poly { degree } => dots.mapv(|v| (v + 1.0).powi(degree as i32)),
    }
}

/// One binary machine: `f(x) = sum_i coef_i K(sv_i, x) - rho`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryMachine {
    /// Indices into [`SvmModel::support_vectors`].
    pub sv: Vec<usize>,
    /// `alpha_i * y_i`
    pub coef: Vec<f64>,
    pub rho: f64,
    pub kkt_gap: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub spec: SvmSpec,
    pub gamma: f64,
    pub support_vectors: Array2<f64>,
    /// One machine per class; `None` for classes absent from training.
    pub machines: Vec<Option<BinaryMachine>>,
}

impl SvmModel {
    pub fn n_classes(&self) -> usize {
        self.machines.len()
    }

    pub fn decision_values(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.support_vectors.ncols() {
            return Err(Error::DimensionMismatch {
                expected: self.support_vectors.ncols(),
                actual: x.ncols(),
            });
        }
        let k = cross_gram(x, self.support_vectors.view(), self.spec.kernel, self.gamma);
        let mut out = Array2::from_elem((x.nrows(), self.machines.len()), f64::NEG_INFINITY);
        for (c, m) in self.machines.iter().enumerate() {
            let Some(m) = m else { continue };
            for r in 0..x.nrows() {
                let s: f64 = m.sv.iter().zip(&m.coef).map(|(&i, a)| a * k[[r, i]]).sum();
                out[[r, c]] = s - m.rho;
            }
        }
        Ok(out)
    }

    /// Largest decision value; ties go to the lowest class index.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        let d = self.decision_values(x)?;
        Ok(d.rows().into_iter().map(|r| crate::nnet::argmax(r.iter().copied())).collect())
    }
}

pub fn train_svm(x: ArrayView2<'_, f64>, labels: &[usize], n_classes: usize, spec: &SvmSpec) -> Result<SvmModel> {
    spec.validate()?;
    if x.nrows() != labels.len() || labels.is_empty() {
        return Err(Error::validation("SVM needs aligned, non-empty data"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("SVM features must be finite"));
    }
    if labels.iter().any(|&y| y >= n_classes) {
        return Err(Error::validation("label outside class range"));
    }
    let present: Vec<bool> = (0..n_classes).map(|c| labels.contains(&c)).collect();
    if present.iter().filter(|p| **p).count() < 2 {
        return Err(Error::SingleClass);
    }
    let gamma = match spec.kernel {
        Kernel::Rbf { gamma: Some(g) } => g,
        Kernel::Rbf { gamma: None } => rbf_gamma(x),
        Kernel::Poly { .. } => 0.0,
    };
    let k = gram(x, spec.kernel, gamma);
    let sols: Vec<Option<BinarySolution>> = (0..n_classes)
        .into_par_iter()
        .map(|c| {
            present[c].then(|| {
                let y: Vec<f64> = labels.iter().map(|&l| if l == c { 1.0 } else { -1.0 }).collect();
                solve_binary(&k, &y, spec.c, SMO_TOLERANCE)
            })
        })
        .collect();

    let mut used: Vec<usize> = sols
        .iter()
        .flatten()
        .flat_map(|s| s.alpha.iter().enumerate().filter(|(_, a)| **a > 0.0).map(|(i, _)| i))
        .collect();
    used.sort_unstable();
    used.dedup();
    let machines = sols
        .into_iter()
        .enumerate()
        .map(|(c, s)| {
            s.map(|s| {
                let (sv, coef) = used
                    .iter()
                    .enumerate()
                    .filter(|(_, &i)| s.alpha[i] > 0.0)
                    .map(|(pos, &i)| (pos, s.alpha[i] * if labels[i] == c { 1.0 } else { -1.0 }))
                    .unzip();
                BinaryMachine {
                    sv,
                    coef,
                    rho: s.rho,
                    kkt_gap: s.gap,
                    iterations: s.iterations,
                }
            })
        })
        .collect();
    Ok(SvmModel {
        spec: *spec,
        gamma,
        support_vectors: x.select(Axis(0), &used),
        machines,
    })
}
