use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use typedmood::svm::{cross_gram, dual_objective, gram, solve_binary, train_svm, Kernel, SvmSpec};

fn blobs(seed: u64, n: usize, d: usize, shift: f64) -> (Array2<f64>, Vec<f64>) {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let y: Vec<f64> = (0..n).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
    let x = Array2::from_shape_fn((n, d), |(i, _)| {
        let z: f64 = StandardNormal.sample(&mut r);
        z + shift * y[i]
    });
    (x, y)
}

/// Gaussian elimination with partial pivoting; `None` when singular.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Minimum of the dual over every assignment of each alpha to {0, C, free}.
fn brute_force_dual(k: &Array2<f64>, y: &[f64], c: f64) -> f64 {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * k[[i, j]];
    let mut best = f64::INFINITY;
    for code in 0..3usize.pow(n as u32) {
        let mut state = vec![0u8; n];
        let mut v = code;
        for s in state.iter_mut() {
            *s = (v % 3) as u8;
            v /= 3;
        }
        let free: Vec<usize> = (0..n).filter(|&i| state[i] == 2).collect();
        let mut alpha: Vec<f64> = state.iter().map(|&s| if s == 1 { c } else { 0.0 }).collect();
        if !free.is_empty() {
            // Q_FF a_F + b y_F = 1 - Q_FB a_B ; y_F . a_F = -y_B . a_B
            let m = free.len();
            let mut a = vec![vec![0.0; m + 1]; m + 1];
            let mut rhs = vec![0.0; m + 1];
            for (r, &i) in free.iter().enumerate() {
                for (cc, &j) in free.iter().enumerate() {
                    a[r][cc] = q(i, j);
                }
                a[r][m] = y[i];
                rhs[r] = 1.0 - (0..n).filter(|j| state[*j] == 1).map(|j| q(i, j) * c).sum::<f64>();
                a[m][r] = y[i];
            }
            rhs[m] = -(0..n).map(|j| y[j] * alpha[j]).sum::<f64>();
            let Some(sol) = solve(a, rhs) else { continue };
            for (r, &i) in free.iter().enumerate() {
                alpha[i] = sol[r];
            }
        }
        let eq: f64 = (0..n).map(|i| y[i] * alpha[i]).sum();
        if eq.abs() > 1e-9 || alpha.iter().any(|&a| a < -1e-12 || a > c + 1e-12) {
            continue;
        }
        best = best.min(dual_objective(k, y, &alpha));
    }
    best
}

#[test]
fn smo_matches_brute_force_on_six_points() {
    for seed in 0..10 {
        let (x, y) = blobs(seed, 6, 2, 0.7);
        for (kernel, gamma) in [(Kernel::Rbf { gamma: None }, 0.5), (Kernel::Poly { degree: 2 }, 0.0)] {
            for c in [0.1, 1.0, 10.0] {
                let k = gram(x.view(), kernel, gamma);
                let sol = solve_binary(&k, &y, c, 1e-8);
                let got = dual_objective(&k, &y, &sol.alpha);
                let want = brute_force_dual(&k, &y, c);
                assert!((got - want).abs() <= 1e-6 * want.abs().max(1.0), "seed {seed} {kernel} C={c}: {got} vs {want}");
            }
        }
    }
}

/// Projection onto {0 <= a <= C, y.a = 0} by bisection on the multiplier.
fn project(v: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |nu: f64| -> Vec<f64> { v.iter().zip(y).map(|(a, yi)| (a - nu * yi).clamp(0.0, c)).collect() };
    let h = |nu: f64| -> f64 { at(nu).iter().zip(y).map(|(a, yi)| a * yi).sum() };
    let (mut lo, mut hi) = (-1e6, 1e6);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi))
}

fn projected_gradient(k: &Array2<f64>, y: &[f64], c: f64) -> Vec<f64> {
    let n = y.len();
    let q = Array2::from_shape_fn((n, n), |(i, j)| y[i] * y[j] * k[[i, j]]);
    let lip: f64 = (0..n).map(|i| q[[i, i]]).sum();
    let mut a = vec![0.0; n];
    let mut z = a.clone();
    let mut t = 1.0f64;
    for _ in 0..20_000 {
        let g = q.dot(&Array1::from(z.clone())) - 1.0;
        let step: Vec<f64> = z.iter().zip(g.iter()).map(|(zi, gi)| zi - gi / lip).collect();
        let next = project(&step, y, c);
        let t2 = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        z = next.iter().zip(&a).map(|(n, o)| n + (t - 1.0) / t2 * (n - o)).collect();
        a = next;
        t = t2;
    }
    a
}

fn offset(k: &Array2<f64>, y: &[f64], alpha: &[f64], c: f64) -> f64 {
    let f = |i: usize| -> f64 { (0..y.len()).map(|j| alpha[j] * y[j] * k[[i, j]]).sum() };
    let free: Vec<f64> = (0..y.len()).filter(|&i| alpha[i] > 1e-6 && alpha[i] < c - 1e-6).map(|i| f(i) - y[i]).collect();
    if free.is_empty() {
        0.0
    } else {
        free.iter().sum::<f64>() / free.len() as f64
    }
}

#[test]
fn smo_agrees_with_projected_gradient_qp() {
    for seed in 0..5 {
        let (x, y) = blobs(100 + seed, 20, 3, 0.6);
        let (xt, _) = blobs(500 + seed, 60, 3, 0.6);
        let kernel = Kernel::Rbf { gamma: None };
        let gamma = 1.0 / 3.0;
        let c = 1.0;
        let k = gram(x.view(), kernel, gamma);
        let smo = solve_binary(&k, &y, c, 1e-6);
        let pg = projected_gradient(&k, &y, c);
        let (o1, o2) = (dual_objective(&k, &y, &smo.alpha), dual_objective(&k, &y, &pg));
        assert!((o1 - o2).abs() < 1e-4 * o2.abs().max(1.0), "objective {o1} vs {o2}");
        let kt = cross_gram(xt.view(), x.view(), kernel, gamma);
        let rho_pg = offset(&k, &y, &pg, c);
        let agree = (0..xt.nrows())
            .filter(|&r| {
                let d1: f64 = (0..20).map(|j| smo.alpha[j] * y[j] * kt[[r, j]]).sum::<f64>() - smo.rho;
                let d2: f64 = (0..20).map(|j| pg[j] * y[j] * kt[[r, j]]).sum::<f64>() - rho_pg;
                (d1 > 0.0) == (d2 > 0.0)
            })
            .count();
        assert!(agree as f64 >= 0.95 * xt.nrows() as f64, "seed {seed}: {agree}/60");
    }
}

#[test]
fn smo_solution_satisfies_kkt() {
    for seed in 0..10 {
        let (x, y) = blobs(seed, 40, 4, 0.4);
        let c = [0.1, 1.0, 10.0][seed as usize % 3];
        let eps = 1e-3;
        let k = gram(x.view(), Kernel::Rbf { gamma: None }, 0.25);
        let s = solve_binary(&k, &y, c, eps);
        let eq: f64 = s.alpha.iter().zip(&y).map(|(a, yi)| a * yi).sum();
        assert!(eq.abs() < 1e-9);
        assert!(s.alpha.iter().all(|&a| (0.0..=c).contains(&a)));
        let n = y.len();
        let g: Vec<f64> = (0..n).map(|i| (0..n).map(|j| y[i] * y[j] * k[[i, j]] * s.alpha[j]).sum::<f64>() - 1.0).collect();
        let mut m_up = f64::NEG_INFINITY;
        let mut m_low = f64::INFINITY;
        for i in 0..n {
            let up = if y[i] > 0.0 { s.alpha[i] < c } else { s.alpha[i] > 0.0 };
            let low = if y[i] > 0.0 { s.alpha[i] > 0.0 } else { s.alpha[i] < c };
            if up {
                m_up = m_up.max(-y[i] * g[i]);
            }
            if low {
                m_low = m_low.min(-y[i] * g[i]);
            }
        }
        assert!(m_up - m_low < eps + 1e-9, "violation {}", m_up - m_low);
    }
}

#[test]
fn gram_matrices_are_psd() {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    let (x, _) = blobs(3, 25, 5, 0.0);
    for kernel in [Kernel::Rbf { gamma: None }, Kernel::Poly { degree: 2 }, Kernel::Poly { degree: 3 }] {
        let k = gram(x.view(), kernel, 0.2);
        for i in 0..25 {
            for j in 0..25 {
                assert_eq!(k[[i, j]], k[[j, i]]);
            }
        }
        for _ in 0..200 {
            let v = Array1::from_shape_simple_fn(25, || r.random::<f64>() - 0.5);
            let quad = v.dot(&k.dot(&v));
            assert!(quad >= -1e-9 * k.iter().map(|a| a.abs()).fold(0.0, f64::max), "{kernel}: {quad}");
        }
    }
}

#[test]
fn dual_optimum_decreases_with_c() {
    let (x, y) = blobs(11, 30, 3, 0.3);
    let k = gram(x.view(), Kernel::Rbf { gamma: None }, 0.3);
    let mut prev = f64::INFINITY;
    for c in [0.1, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0] {
        let o = dual_objective(&k, &y, &solve_binary(&k, &y, c, 1e-6).alpha);
        assert!(o <= prev + 1e-6, "C={c}: {o} > {prev}");
        prev = o;
    }
}

#[test]
fn one_vs_rest_separates_clusters() {
    let mut r = ChaCha8Rng::seed_from_u64(5);
    let centers = [[0.0, 0.0], [5.0, 0.0], [0.0, 5.0]];
    let y: Vec<usize> = (0..60).map(|i| i % 3).collect();
    let x = Array2::from_shape_fn((60, 2), |(i, j)| centers[y[i]][j] + 0.3 * Distribution::<f64>::sample(&StandardNormal, &mut r));
    for spec in [SvmSpec { c: 1.0, kernel: Kernel::Rbf { gamma: None } }, SvmSpec { c: 1.0, kernel: Kernel::Poly { degree: 2 } }] {
        let m = train_svm(x.view(), &y, 3, &spec).unwrap();
        assert_eq!(m.predict(x.view()).unwrap(), y);
    }
}

#[test]
fn single_class_is_rejected() {
    let x = Array2::zeros((4, 2));
    let err = train_svm(x.view(), &[1, 1, 1, 1], 3, &SvmSpec { c: 1.0, kernel: Kernel::Rbf { gamma: None } });
    assert!(matches!(err, Err(typedmood::Error::SingleClass)));
}
