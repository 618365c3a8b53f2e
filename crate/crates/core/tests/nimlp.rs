use ndarray::{Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use typedmood::artifact::{Artifact, Model};
use typedmood::datamodel::Dataset;
use typedmood::eval::{scaled_split, TradeoffPoint};
use typedmood::features::Modalities;
use typedmood::nimlp::*;
use typedmood::nnet::{train_mlp, Mlp, TrainSpec};
use typedmood::synthgen::{generate, GenConfig};

fn small() -> Dataset {
    let cfg = GenConfig { n_users: 4, n_days_per_user: 40, total_days: None, vocab_size: 200, n_apps: 40, seed: 2, ..Default::default() };
    generate(&cfg).unwrap().1
}

fn spec() -> TrainSpec {
    TrainSpec { hidden: vec![32, 16], epochs: 30, seed: 11, ..Default::default() }
}

struct Setup {
    net: Mlp,
    z: Array2<f64>,
    labels: Vec<usize>,
    users: Vec<usize>,
    n_users: usize,
}

fn setup() -> Setup {
    let ds = small();
    let m = Modalities::ALL;
    let all: Vec<usize> = (0..ds.len()).collect();
    let (x, _) = scaled_split(&ds.matrix(m), &ds.config.active_blocks(m), &all, &all);
    let labels = ds.labels();
    let net = train_mlp(x.view(), &labels, 3, &spec()).unwrap();
    let z = net.forward(x.view()).unwrap().0;
    Setup { net, z, labels, users: ds.user_ids(), n_users: ds.n_users() }
}

#[test]
fn selection_solver_matches_soft_threshold() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for inst in 0..100 {
        let n_users = r.random_range(1..6);
        let dim = r.random_range(1..5);
        let mut users: Vec<usize> = (0..n_users).collect();
        for _ in 0..r.random_range(0..20) {
            users.push(r.random_range(0..n_users));
        }
        let z = Array2::from_shape_simple_fn((users.len(), dim), || r.random::<f64>() * 6.0 - 3.0);
        let want0 = select_identity_closed_form(z.view(), &users, n_users, 0.0).unwrap();
        let max_mean = want0.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        let lambda = match inst % 4 {
            0 => 0.0,
            1 => 2.0 * max_mean + r.random::<f64>(),
            _ => r.random::<f64>() * 2.0 * max_mean,
        };
        let got = select_identity(z.view(), &users, n_users, lambda).unwrap();
        let want = select_identity_closed_form(z.view(), &users, n_users, lambda).unwrap();
        for (g, w) in got.table.iter().zip(want.iter()) {
            assert!((g - w).abs() < 1e-6, "instance {inst}: {g} vs {w}");
        }
        if inst % 4 == 1 {
            assert_eq!(got.sparsity(), 1.0);
        }
    }
}

#[test]
fn sigma_zero_equals_plain_head() {
    let s = setup();
    let enc = select_identity(s.z.view(), &s.users, s.n_users, 1.0).unwrap();
    let ni = addition_train(&s.net, &enc, s.z.view(), &s.users, &s.labels, 0.0, NoiseMode::PerBatch, &spec()).unwrap();
    let plain = train_head(s.z.view(), &s.labels, None, 0.0, NoiseMode::PerBatch, 3, &spec()).unwrap();
    assert_eq!(ni.head, plain);
    assert_eq!(ni.infer_features(s.z.view()).unwrap(), plain.predict(s.z.view()).unwrap());
}

#[test]
fn zero_identity_makes_sigma_irrelevant() {
    let s = setup();
    let enc = select_identity(s.z.view(), &s.users, s.n_users, 1e9).unwrap();
    assert_eq!(enc.sparsity(), 1.0);
    let heads: Vec<Mlp> = [0.0, 1.0, 50.0]
        .iter()
        .map(|&sigma| addition_train(&s.net, &enc, s.z.view(), &s.users, &s.labels, sigma, NoiseMode::PerSample, &spec()).unwrap().head)
        .collect();
    assert_eq!(heads[0], heads[1]);
    assert_eq!(heads[0], heads[2]);
}

#[test]
fn noise_changes_the_head() {
    let s = setup();
    let enc = select_identity(s.z.view(), &s.users, s.n_users, 0.0).unwrap();
    let a = addition_train(&s.net, &enc, s.z.view(), &s.users, &s.labels, 0.0, NoiseMode::PerBatch, &spec()).unwrap();
    let b = addition_train(&s.net, &enc, s.z.view(), &s.users, &s.labels, 5.0, NoiseMode::PerBatch, &spec()).unwrap();
    assert_ne!(a.head, b.head);
}

#[test]
fn inference_is_deterministic_and_extractor_frozen() {
    let s = setup();
    let enc = select_identity(s.z.view(), &s.users, s.n_users, 1.0).unwrap();
    let m = addition_train(&s.net, &enc, s.z.view(), &s.users, &s.labels, 10.0, NoiseMode::PerBatch, &spec()).unwrap();
    assert_eq!(m.infer_features(s.z.view()).unwrap(), m.infer_features(s.z.view()).unwrap());
    assert_eq!(m.extractor, s.net);
    m.verify_frozen().unwrap();
    let mut tampered = m.clone();
    tampered.extractor.layers[0].b[0] += 1.0;
    assert!(tampered.verify_frozen().is_err());
    let art = Artifact::new(Model::Nimlp { spec: spec(), model: tampered }, 0, "mood", "tka", "fp", s.net.input_dim(), 3, None);
    let x = Array2::zeros((1, s.net.input_dim()));
    assert!(art.predict(x.view()).is_err());
}

#[test]
fn degenerate_grid_selects_plain_head() {
    let s = setup();
    let (tr, va): (Vec<usize>, Vec<usize>) = (0..s.labels.len()).partition(|i| i % 5 != 0);
    let pick = |v: &[usize], idx: &[usize]| -> Vec<usize> { idx.iter().map(|&i| v[i]).collect() };
    let (zt, zv) = (s.z.select(Axis(0), &tr), s.z.select(Axis(0), &va));
    let (yt, yv, ut, uv) = (pick(&s.labels, &tr), pick(&s.labels, &va), pick(&s.users, &tr), pick(&s.users, &va));
    let opts = SweepOptions {
        lambdas: vec![1.0],
        sigmas: vec![0.0],
        head: spec(),
        noise: NoiseMode::PerBatch,
        rule: SelectionRule::MaxRatio,
        probe_seed: 0,
    };
    let (model, rep) = sweep_sigma(
        &s.net,
        s.n_users,
        &SweepData { z_feat: zt.view(), labels: &yt, users: &ut },
        &SweepData { z_feat: zv.view(), labels: &yv, users: &uv },
        &opts,
    )
    .unwrap();
    assert_eq!(rep.points.len(), 1);
    assert_eq!(rep.selected, 0);
    let plain = train_head(zt.view(), &yt, None, 0.0, NoiseMode::PerBatch, 3, &spec()).unwrap();
    assert_eq!(model.head, plain);
    assert_eq!(rep.pareto.len(), 1);
    let sel = model.selection.unwrap();
    assert_eq!((sel.lambda, sel.sigma), (1.0, 0.0));
}

fn point(sigma: f64, t: f64, s: f64, r: f64) -> SweepPoint {
    SweepPoint { lambda: 1.0, sigma, t, s, r: Ratio { value: r, negative: r < 0.0 }, sparsity: 0.0 }
}

#[test]
fn infinite_ratio_ranks_first() {
    let pts = [point(1.0, 0.5, 0.6, 3.0), point(5.0, 0.6, 0.5, f64::INFINITY), point(10.0, 0.4, 0.2, 8.0)];
    assert_eq!(select_point(&pts, 0.6, SelectionRule::MaxRatio), (1, false));
}

#[test]
fn all_negative_falls_back_to_smallest_sigma() {
    let pts = [point(25.0, 0.5, 0.9, -1.0), point(5.0, 0.5, 0.9, -2.0), point(10.0, 0.5, 0.9, -0.5)];
    assert_eq!(select_point(&pts, 0.6, SelectionRule::MaxRatio), (1, true));
}

#[test]
fn privacy_rule_respects_tolerance() {
    let pts = [point(1.0, 0.58, 0.7, 1.0), point(5.0, 0.56, 0.5, 1.0), point(10.0, 0.40, 0.1, 1.0)];
    assert_eq!(select_point(&pts, 0.60, SelectionRule::PrivacyWithinTolerance), (1, false));
    assert_eq!(select_point(&pts, 0.90, SelectionRule::PrivacyWithinTolerance), (0, true));
}

#[test]
fn ratio_examples() {
    assert!((compute_r(0.8, 0.4, 0.60, 0.55).value - 8.0).abs() < 1e-9);
    assert_eq!(compute_r(0.7, 0.7, 0.6, 0.5).value, 0.0);
    let inf = compute_r(0.8, 0.4, 0.6, 0.6);
    assert!(inf.value.is_infinite() && !inf.negative);
    let pts = [TradeoffPoint { sigma: 0.0, lambda: 0.0, t: 0.6, s: 0.7 }, TradeoffPoint { sigma: 1.0, lambda: 0.0, t: 0.5, s: 0.8 }];
    assert_eq!(typedmood::eval::pareto_front(&pts), vec![pts[0]]);
}
