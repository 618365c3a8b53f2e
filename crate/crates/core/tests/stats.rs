mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use typedmood::eval::{
    constant_classifier_f1, dominates, macro_f1, pareto_front, pareto_mask, per_class_f1, wilcoxon_rank_sum,
    wilcoxon_signed_rank,
};
use typedmood::nnet::majority_baseline;

use common::{brute_front, brute_rank_sum, brute_signed_rank, random_points, sample};

#[test]
fn signed_rank_equals_enumeration() {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let mut checked = 0;
    for n in 1..=8 {
        for trial in 0..40 {
            let a = sample(&mut r, n, trial % 2 == 0);
            let b = sample(&mut r, n, trial % 2 == 0);
            if a.iter().zip(&b).all(|(x, y)| x == y) {
                continue;
            }
            let got = wilcoxon_signed_rank(&a, &b).unwrap();
            let (w, l, g) = brute_signed_rank(&a, &b);
            assert!(got.exact);
            assert!((got.w_plus - w).abs() < 1e-12);
            assert!((got.p_less - l).abs() < 1e-12, "{a:?} {b:?}: {} vs {l}", got.p_less);
            assert!((got.p_greater - g).abs() < 1e-12, "{a:?} {b:?}: {} vs {g}", got.p_greater);
            checked += 1;
        }
    }
    assert!(checked > 250);
}

#[test]
fn rank_sum_equals_enumeration() {
    let mut r = ChaCha8Rng::seed_from_u64(2);
    for total in 2..=8 {
        for na in 1..total {
            for trial in 0..10 {
                let a = sample(&mut r, na, trial % 2 == 0);
                let b = sample(&mut r, total - na, trial % 2 == 0);
                let got = wilcoxon_rank_sum(&a, &b).unwrap();
                let (w, l, g) = brute_rank_sum(&a, &b);
                assert!(got.exact);
                assert!((got.rank_sum - w).abs() < 1e-12);
                assert!((got.p_less - l).abs() < 1e-12, "{a:?} {b:?}");
                assert!((got.p_greater - g).abs() < 1e-12, "{a:?} {b:?}");
            }
        }
    }
}

#[test]
fn rank_sum_two_by_two_is_one_sixth() {
    let r = wilcoxon_rank_sum(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
    assert_eq!(r.p_less, 1.0 / 6.0);
    assert_eq!(r.u, 0.0);
}

#[test]
fn large_samples_use_normal_approximation() {
    let a: Vec<f64> = (0..20).map(|i| i as f64 + 0.5).collect();
    let b: Vec<f64> = (0..20).map(|i| i as f64).collect();
    let s = wilcoxon_signed_rank(&a, &b).unwrap();
    assert!(!s.exact);
    assert!(s.p_greater < 1e-4);
    let rs = wilcoxon_rank_sum(&a, &(0..20).map(|i| i as f64 + 100.0).collect::<Vec<_>>()).unwrap();
    assert!(!rs.exact);
    assert!(rs.p_less < 1e-6);
}

#[test]
fn pareto_matches_brute_force_dominance() {
    let mut r = ChaCha8Rng::seed_from_u64(3);
    for set in 0..100 {
        let pts = random_points(&mut r, set);
        let want = brute_front(&pts);
        assert_eq!(pareto_mask(&pts), want, "set {set}");
        let front = pareto_front(&pts);
        assert_eq!(front.len(), want.iter().filter(|w| **w).count());
        for f in &front {
            assert!(!pts.iter().any(|q| dominates(q, f)));
        }
    }
}

#[test]
fn macro_f1_known_confusion() {
    let y = [0, 0, 1, 1, 2, 2];
    let p = [0, 1, 1, 1, 2, 0];
    // class 0: tp 1 fp 1 fn 1 -> 0.5 ; class 1: tp 2 fp 1 -> 0.8 ; class 2: tp 1 fn 1 -> 2/3
    let f = per_class_f1(&p, &y, 3).unwrap();
    assert!((f[0] - 0.5).abs() < 1e-12 && (f[1] - 0.8).abs() < 1e-12 && (f[2] - 2.0 / 3.0).abs() < 1e-12);
    assert!((macro_f1(&p, &y, 3).unwrap() - (0.5 + 0.8 + 2.0 / 3.0) / 3.0).abs() < 1e-12);
}

#[test]
fn absent_class_counts_as_zero() {
    let y = [0, 0, 1];
    assert!((macro_f1(&y, &y, 3).unwrap() - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn constant_classifier_matches_counting() {
    let mix = [0.1243, 0.4363, 0.4394];
    let n = 10_000;
    let counts: Vec<usize> = mix.iter().map(|p| (p * n as f64).round() as usize).collect();
    let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &k)| std::iter::repeat_n(c, k)).collect();
    let maj = majority_baseline(&labels).unwrap();
    assert_eq!(maj.class, 2);
    let pred = maj.predict(labels.len());
    let counted = macro_f1(&pred, &labels, 3).unwrap();
    let closed = constant_classifier_f1(&mix, 2);
    assert!((counted - closed).abs() < 1e-3);
    assert!((closed - 0.2035).abs() < 1e-3);
}

#[test]
fn majority_ties_go_to_lowest_class() {
    assert_eq!(majority_baseline(&[2, 1, 1, 2]).unwrap().class, 1);
    assert!(majority_baseline(&[]).is_err());
}
