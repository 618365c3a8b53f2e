use chrono::NaiveDate;
use ndarray::Array2;
use proptest::prelude::*;

use typedmood::datamodel::bin_mood;
use typedmood::eval::{
    dominates, macro_f1, make_splits_keys, pareto_mask, wilcoxon_rank_sum, wilcoxon_signed_rank, SplitScheme,
    TradeoffPoint,
};
use typedmood::nimlp::{select_identity, select_identity_closed_form, soft_threshold};
use typedmood::nnet::softmax_rows;

fn day_keys() -> impl Strategy<Value = Vec<(usize, NaiveDate)>> {
    prop::collection::btree_set((0usize..6, 0i64..400), 10..120).prop_map(|s| {
        let d0 = NaiveDate::from_ymd_opt(2020, 3, 1).unwrap();
        s.into_iter().map(|(u, d)| (u, d0 + chrono::TimeDelta::days(d))).collect()
    })
}

fn scheme() -> impl Strategy<Value = SplitScheme> {
    prop_oneof![Just(SplitScheme::Interleaved), Just(SplitScheme::UserMajor), Just(SplitScheme::DateMajor)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn folds_partition_every_sample(keys in day_keys(), scheme in scheme()) {
        let plan = make_splits_keys(&keys, scheme).unwrap();
        let mut all: Vec<usize> = plan.folds.iter().flatten().copied().collect();
        all.sort();
        prop_assert_eq!(all, (0..keys.len()).collect::<Vec<_>>());
        let sizes: Vec<usize> = plan.folds.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn pareto_mask_is_exactly_the_undominated_set(pts in prop::collection::vec((0u8..6, 0u8..6), 1..40)) {
        let pts: Vec<TradeoffPoint> = pts
            .iter()
            .enumerate()
            .map(|(i, &(t, s))| TradeoffPoint { sigma: i as f64, lambda: 1.0, t: t as f64 / 5.0, s: s as f64 / 5.0 })
            .collect();
        let mask = pareto_mask(&pts);
        for (i, p) in pts.iter().enumerate() {
            prop_assert_eq!(mask[i], !pts.iter().any(|q| dominates(q, p)));
        }
        prop_assert!(mask.iter().any(|&m| m));
    }

    #[test]
    fn softmax_rows_are_distributions(v in prop::collection::vec(-700.0f64..700.0, 3..30)) {
        let cols = 3;
        let rows = v.len() / cols;
        let mut a = Array2::from_shape_vec((rows, cols), v[..rows * cols].to_vec()).unwrap();
        softmax_rows(&mut a);
        for r in a.rows() {
            prop_assert!(r.iter().all(|p| (0.0..=1.0).contains(p)));
            prop_assert!((r.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identity_selection_matches_soft_threshold(
        z in prop::collection::vec(-3.0f64..3.0, 24),
        lambda in 0.0f64..8.0,
    ) {
        let z = Array2::from_shape_vec((8, 3), z).unwrap();
        let users = [0, 1, 2, 0, 1, 2, 0, 0];
        let got = select_identity(z.view(), &users, 3, lambda).unwrap().table;
        let want = select_identity_closed_form(z.view(), &users, 3, lambda).unwrap();
        for (a, b) in got.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn soft_threshold_shrinks_toward_zero(m in -10.0f64..10.0, t in 0.0f64..10.0) {
        let s = soft_threshold(m, t);
        prop_assert!(s.abs() <= m.abs());
        prop_assert!(s == 0.0 || s.signum() == m.signum());
        prop_assert!((s.abs() - (m.abs() - t).max(0.0)).abs() < 1e-12);
    }

    #[test]
    fn macro_f1_is_bounded(pairs in prop::collection::vec((0usize..3, 0usize..3), 1..80)) {
        let (pred, labels): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let f = macro_f1(&pred, &labels, 3).unwrap();
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert_eq!(macro_f1(&labels, &labels, 3).unwrap() > 0.0, true);
    }

    #[test]
    fn bin_mood_is_monotone(a in 0i64..=100, b in 0i64..=100) {
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(bin_mood(lo).unwrap().index() <= bin_mood(hi).unwrap().index());
    }

    #[test]
    fn wilcoxon_p_values_are_probabilities(
        a in prop::collection::vec(0u8..10, 2..25),
        b in prop::collection::vec(0u8..10, 2..25),
    ) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let n = a.len().min(b.len());
        if let Ok(r) = wilcoxon_signed_rank(&a[..n], &b[..n]) {
            for p in [r.p_less, r.p_greater, r.p_value] {
                prop_assert!((0.0..=1.0).contains(&p));
            }
            prop_assert!(r.p_less + r.p_greater >= 1.0 - 1e-9);
        }
        let r = wilcoxon_rank_sum(&a, &b).unwrap();
        for p in [r.p_less, r.p_greater, r.p_value] {
            prop_assert!((0.0..=1.0).contains(&p));
        }
        prop_assert!(r.p_less + r.p_greater >= 1.0 - 1e-9);
    }
}
