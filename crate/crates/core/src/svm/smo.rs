use ndarray::Array2;

pub const SMO_TOLERANCE: f64 = 1e-3;
const TAU: f64 = 1e-12;

/// Dual solution of one binary problem with labels `y_i` in {-1, +1}.
#[derive(Debug, Clone, PartialEq)]
pub struct BinarySolution {
    pub alpha: Vec<f64>,
    pub rho: f64,
    /// Maximal KKT violation at termination.
    pub gap: f64,
    pub iterations: usize,
}

/// `1/2 a'Qa - sum(a)` with `Q_ij = y_i y_j K_ij`.
pub fn dual_objective(k: &Array2<f64>, y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * k[[i, j]];
        }
    }
    0.5 * quad - alpha.iter().sum::<f64>()
}

/// SMO with second-order working-set selection.
pub fn solve_binary(k: &Array2<f64>, y: &[f64], c: f64, eps: f64) -> BinarySolution {
    let n = y.len();
    let mut alpha = vec![0.0; n];
    let mut g = vec![-1.0; n];
    let max_iter = (100 * n).max(10_000_000);
    let mut iterations = 0;
    let mut gap = f64::INFINITY;
    let q = |i: usize, j: usize| y[i] * y[j] * k[[i, j]];

    while iterations < max_iter {
        // i: maximal violating index in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut ii = usize::MAX;
        for t in 0..n {
            let up = if y[t] > 0.0 { alpha[t] < c } else { alpha[t] > 0.0 };
            if up && -y[t] * g[t] >= gmax {
                gmax = -y[t] * g[t];
                ii = t;
            }
        }
        let mut gmax2 = f64::NEG_INFINITY;
        let mut jj = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            let low = if y[t] > 0.0 { alpha[t] > 0.0 } else { alpha[t] < c };
            if !low {
                continue;
            }
            let v = y[t] * g[t];
            if v >= gmax2 {
                gmax2 = v;
            }
            if ii == usize::MAX {
                continue;
            }
            let diff = gmax + v;
            if diff > 0.0 {
                let quad = (k[[ii, ii]] + k[[t, t]] - 2.0 * k[[ii, t]]).max(TAU);
                let obj = -(diff * diff) / quad;
                if obj <= best {
                    best = obj;
                    jj = t;
                }
            }
        }
        gap = gmax + gmax2;
        if gap < eps || ii == usize::MAX || jj == usize::MAX {
            break;
        }
        iterations += 1;
        let (i, j) = (ii, jj);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (k[[i, i]] + k[[j, j]] + 2.0 * q(i, j)).max(TAU);
            let delta = (-g[i] - g[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (k[[i, i]] + k[[j, j]] - 2.0 * q(i, j)).max(TAU);
            let delta = (g[i] - g[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            g[t] += q(t, i) * di + q(t, j) * dj;
        }
    }

    // offset: mean over free vectors, else midpoint of the feasible range
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * g[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    let rho = if n_free > 0 { sum_free / n_free as f64 } else { (ub + lb) / 2.0 };
    BinarySolution {
        alpha,
        rho,
        gap,
        iterations,
    }
}
