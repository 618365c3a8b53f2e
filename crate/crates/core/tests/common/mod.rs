#![allow(dead_code)]

use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use typedmood::analysis::{conditional_p, joint_p, kl_divergence, kl_gradient};
use typedmood::eval::TradeoffPoint;
use typedmood::nnet::{logreg_objective, Inputs, Mlp, Mode};

// ---- finite differences ----

pub const H: f64 = 1e-5;
pub const GRAD_TOL: f64 = 1e-4;

pub fn randn(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Array2<f64> {
    Array2::from_shape_simple_fn((rows, cols), || StandardNormal.sample(r))
}

fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1e-6)
}

fn max_rel_err(analytic: &[f64], mut f: impl FnMut(usize, f64) -> f64) -> f64 {
    analytic
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let n = (f(i, H) - f(i, -H)) / (2.0 * H);
            rel_err(a, n)
        })
        .fold(0.0, f64::max)
}

fn mlp_loss(net: &Mlp, inputs: &Inputs<'_>, y: &[usize], masks: Option<&[Array2<f64>]>) -> f64 {
    let idx: Vec<usize> = (0..y.len()).collect();
    let mut r = ChaCha8Rng::seed_from_u64(0);
    let c = net.forward_rows(inputs, &idx, Mode::Train, masks, &mut r);
    Mlp::loss(&c, y)
}

/// Max relative error of MLP backprop on a random 6-5-4-3 network.
pub fn mlp_grad_error(seed: u64, dropout: bool, sparse: bool) -> f64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let dims = [6, 5, 4, 3];
    let n = 7;
    let mut x = randn(&mut r, n, dims[0]);
    if sparse {
        x.mapv_inplace(|v| if v > 0.8 { v } else { 0.0 });
    }
    let y: Vec<usize> = (0..n).map(|_| r.random_range(0..3)).collect();
    let mut net = Mlp::new(&dims, 0.0, seed).unwrap();
    // random biases keep pre-activations off the ReLU kink at zero
    let theta: Vec<f64> = (0..net.flat().len()).map(|_| 0.5 * Distribution::<f64>::sample(&StandardNormal, &mut r)).collect();
    net.set_flat(&theta);
    let masks: Option<Vec<Array2<f64>>> = dropout.then(|| {
        dims[1..dims.len() - 1]
            .iter()
            .map(|&w| Array2::from_shape_simple_fn((n, w), || if r.random::<f64>() < 0.7 { 1.0 / 0.7 } else { 0.0 }))
            .collect()
    });
    let idx: Vec<usize> = (0..n).collect();
    let inputs = if sparse { Inputs::new(x.view()) } else { Inputs::dense_only(x.view()) };
    let mut rr = ChaCha8Rng::seed_from_u64(0);
    let cache = net.forward_rows(&inputs, &idx, Mode::Train, masks.as_deref(), &mut rr);
    let g = net.backward(&inputs, &idx, &y, &cache).flat();
    max_rel_err(&g, |i, h| {
        let mut t = theta.clone();
        t[i] += h;
        let mut m = net.clone();
        m.set_flat(&t);
        mlp_loss(&m, &inputs, &y, masks.as_deref())
    })
}

pub fn logreg_grad_error(seed: u64) -> f64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let (n, d, k) = (12, 4, 3);
    let x = randn(&mut r, n, d);
    let y: Vec<usize> = (0..n).map(|i| i % k).collect();
    let p: Vec<f64> = (0..d * k + k).map(|_| StandardNormal.sample(&mut r)).collect();
    let l2 = if seed % 2 == 0 { 0.0 } else { 0.3 };
    let mut g = vec![0.0; p.len()];
    logreg_objective(x.view(), &y, k, l2, &p, &mut g);
    let mut scratch = vec![0.0; p.len()];
    max_rel_err(&g, |i, h| {
        let mut q = p.clone();
        q[i] += h;
        logreg_objective(x.view(), &y, k, l2, &q, &mut scratch)
    })
}

pub fn tsne_grad_error(seed: u64) -> f64 {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let n = 10;
    let x = randn(&mut r, n, 5);
    let p = joint_p(&conditional_p(x.view(), 3.0).unwrap().0);
    let y = randn(&mut r, n, 2);
    let g: Vec<f64> = kl_gradient(&p, y.view()).iter().copied().collect();
    max_rel_err(&g, |i, h| {
        let mut z = y.clone();
        z[[i / 2, i % 2]] += h;
        kl_divergence(&p, ArrayView2::from(&z))
    })
}

// ---- exhaustive rank statistics ----

fn midranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let below = v.iter().filter(|y| *y < x).count() as f64;
            let equal = v.iter().filter(|y| *y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

fn tails(stats: &[f64], observed: f64) -> (f64, f64) {
    let n = stats.len() as f64;
    let le = stats.iter().filter(|s| **s <= observed + 1e-9).count() as f64;
    let ge = stats.iter().filter(|s| **s >= observed - 1e-9).count() as f64;
    (le / n, ge / n)
}

/// (W+, P(W+ <= obs), P(W+ >= obs)) over all 2^n sign assignments.
pub fn brute_signed_rank(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let ranks = midranks(&d.iter().map(|x| x.abs()).collect::<Vec<_>>());
    let observed: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let stats: Vec<f64> = (0..1u32 << d.len())
        .map(|mask| (0..d.len()).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum())
        .collect();
    let (l, g) = tails(&stats, observed);
    (observed, l, g)
}

/// (rank sum of `a`, lower tail, upper tail) over all relabelings.
pub fn brute_rank_sum(a: &[f64], b: &[f64]) -> (f64, f64, f64) {
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&all);
    let observed: f64 = ranks[..a.len()].iter().sum();
    let stats: Vec<f64> = (0..1u32 << all.len())
        .filter(|m| m.count_ones() as usize == a.len())
        .map(|mask| (0..all.len()).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum())
        .collect();
    let (l, g) = tails(&stats, observed);
    (observed, l, g)
}

/// Small integers when `ties`, otherwise continuous values.
pub fn sample(r: &mut ChaCha8Rng, n: usize, ties: bool) -> Vec<f64> {
    (0..n)
        .map(|_| if ties { r.random_range(-3..=3) as f64 } else { r.random::<f64>() * 10.0 - 5.0 })
        .collect()
}

// ---- Pareto ----

pub fn brute_front(points: &[TradeoffPoint]) -> Vec<bool> {
    points
        .iter()
        .map(|p| !points.iter().any(|q| q.t >= p.t && q.s <= p.s && (q.t > p.t || q.s < p.s)))
        .collect()
}

/// Every third set sits on a coarse grid so ties and duplicates occur.
pub fn random_points(r: &mut ChaCha8Rng, set: usize) -> Vec<TradeoffPoint> {
    let n = r.random_range(1..40);
    let coarse = set % 3 == 0;
    (0..n)
        .map(|i| {
            let (t, s) = if coarse {
                (r.random_range(0..5) as f64 / 4.0, r.random_range(0..5) as f64 / 4.0)
            } else {
                (r.random::<f64>(), r.random::<f64>())
            };
            TradeoffPoint { sigma: i as f64, lambda: 1.0, t, s }
        })
        .collect()
}

// ---- CLI ----

pub const SMALL_GRID: &str = r#"
[mlp]
hidden = [[32, 16]]
dropout = [0.0]
epochs = 30
[svm]
c = [1.0]
kernels = ["rbf"]
[nimlp]
lambda = [1.0]
sigma = [0.0, 5.0]
"#;

pub fn cli(out: &std::path::Path, args: &[&str]) -> i32 {
    let mut argv = vec!["typedmood".to_string(), "--out".into(), out.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    typedmood::cli::run(argv)
}

/// Every stage from `gen` to `report` on a four-user dataset. Returns the
/// first failing step.
pub fn small_pipeline(out: &std::path::Path, grid: &std::path::Path) -> Result<(), String> {
    let g = grid.to_str().unwrap();
    let model = out.join("train/model.json");
    let ni = out.join("nimlp/model.json");
    let (model, ni) = (model.to_str().unwrap(), ni.to_str().unwrap());
    let steps: [&[&str]; 8] = [
        &["--seed", "3", "gen", "--users", "4", "--days", "60", "--vocab-size", "200", "--apps", "40"],
        &["featurize", "--vocab-size", "200"],
        &["evaluate", "--sets", "tka,t", "--families", "majority,mlp,svm", "--grid-file", g],
        &["train", "--hidden", "32,16", "--epochs", "30", "--holdout-fold", "0"],
        &["nimlp", "--grid-file", g, "--hidden", "32,16", "--epochs", "30"],
        &["probe", "--grid-file", g, "--families", "mlp,svm", "--model", model, "--model", ni],
        &["analyze", "--model", ni, "--tsne-iterations", "300"],
        &["report"],
    ];
    for s in steps {
        let code = cli(out, s);
        if code != 0 {
            return Err(format!("{s:?} exited with {code}"));
        }
    }
    Ok(())
}

pub fn file_tree(root: &std::path::Path) -> std::collections::BTreeMap<std::path::PathBuf, Vec<u8>> {
    fn walk(root: &std::path::Path, dir: &std::path::Path, out: &mut std::collections::BTreeMap<std::path::PathBuf, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut m = std::collections::BTreeMap::new();
    walk(root, root, &mut m);
    m
}
