use chrono::NaiveDate;
use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use typedmood::analysis::{
    conditional_p, histogram_modes, joint_p, keystroke_histograms, token_associations, tsne, word_timing_significance,
    Direction, KeyGroup, Polarity, TokenKind, TsneConfig,
};
use typedmood::datamodel::{EventLog, KeyClass, KeyEvent, MoodReport};
use typedmood::features::{day_start_seconds, Corpus, TimingBuckets};
use typedmood::synthgen::{generate_logs, plant_report, generate, GenConfig};

fn date(d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 3, d).unwrap()
}

/// Keystrokes typing `words` separated by spaces, one key every `dt` seconds,
/// starting an hour into the window of the report dated `day`.
fn typed(day: u32, words: &[&str], dt: f64, app: &str) -> Vec<KeyEvent> {
    let mut t = day_start_seconds(date(day)) - 86_400.0 + 3600.0;
    let mut out = Vec::new();
    for w in words {
        for ch in w.chars() {
            let k = if ch.is_ascii_alphanumeric() { KeyClass::Alphanumeric } else { KeyClass::Symbol };
            out.push(KeyEvent::new(t, k, Some(ch.to_string()), app).unwrap());
            t += dt;
        }
        out.push(KeyEvent::new(t, KeyClass::Spacebar, None, app).unwrap());
        t += dt;
    }
    out
}

fn log(user: &str, days: Vec<(u32, u8, Vec<KeyEvent>)>) -> EventLog {
    let mut events = Vec::new();
    let mut reports = Vec::new();
    for (d, score, ev) in days {
        events.extend(ev);
        reports.push(MoodReport { date: date(d), score });
    }
    EventLog::new(user, events, reports).unwrap()
}

#[test]
fn three_day_fixture_deltas() {
    let l = log(
        "u1",
        vec![
            (1, 10, typed(1, &["apple", "apple", "bread"], 0.2, "chat")),
            (2, 50, typed(2, &["bread"], 0.2, "chat")),
            (3, 90, typed(3, &["apple", "cocoa", "cocoa"], 0.2, "chat")),
        ],
    );
    let corpus = Corpus::from_logs(vec![l]).unwrap();
    let t = token_associations(&corpus, TokenKind::Words, 1);
    let rows = &t.per_user[0];
    let find = |w: &str| rows.iter().find(|a| a.token == w).unwrap();
    // overall shares: negative 3/7, positive 3/7
    let c = find("cocoa");
    assert_eq!(c.polarity, Polarity::Positive);
    assert!((c.delta - (1.0 - 3.0 / 7.0)).abs() < 1e-12);
    let a = find("apple");
    assert_eq!(a.polarity, Polarity::Negative);
    assert_eq!(a.counts, [2, 0, 1]);
    assert!((a.delta - (2.0 / 3.0 - 3.0 / 7.0)).abs() < 1e-12);
    let b = find("bread");
    assert_eq!(b.polarity, Polarity::Negative);
    assert!((b.delta - (0.5 - 3.0 / 7.0)).abs() < 1e-12);
    assert_eq!(rows[0].token, "cocoa");
    assert_eq!(t.cross_user["apple"], (0, 1));
}

#[test]
fn only_positive_token_has_maximal_delta() {
    let l = log(
        "u1",
        vec![
            (1, 10, typed(1, &["apple", "bread"], 0.2, "chat")),
            (2, 90, typed(2, &["cocoa", "bread"], 0.2, "chat")),
        ],
    );
    let corpus = Corpus::from_logs(vec![l]).unwrap();
    let t = token_associations(&corpus, TokenKind::Words, 1);
    let rows = &t.per_user[0];
    let c = rows.iter().find(|a| a.token == "cocoa").unwrap();
    assert_eq!(c.polarity, Polarity::Positive);
    // positive share is 1/2, so 1 - 1/2 is the largest possible delta
    assert!((c.delta - 0.5).abs() < 1e-12);
    assert!(rows.iter().all(|a| a.delta <= c.delta));
    assert!(t.per_user[0].iter().all(|a| a.token != "bread"));
}

#[test]
fn count_threshold_is_inclusive_at_forty() {
    let many = |n: usize, w: &'static str| -> Vec<&'static str> { vec![w; n] };
    let mut pos = many(40, "cocoa");
    pos.extend(many(39, "dates"));
    let l = log(
        "u1",
        vec![(1, 10, typed(1, &["apple"; 50], 0.05, "chat")), (2, 90, typed(2, &pos, 0.05, "chat"))],
    );
    let corpus = Corpus::from_logs(vec![l]).unwrap();
    let t = token_associations(&corpus, TokenKind::Words, 40);
    let toks: Vec<&str> = t.per_user[0].iter().map(|a| a.token.as_str()).collect();
    assert!(toks.contains(&"cocoa"));
    assert!(!toks.contains(&"dates"));
}

#[test]
fn emoji_and_app_tokens() {
    let mut neg = typed(1, &["😭", "apple"], 0.2, "mail");
    let mut pos = typed(2, &["😀", "apple"], 0.2, "game");
    neg.extend(typed(1, &["bread"], 0.2, "mail").into_iter().map(|mut e| {
        e.timestamp += 100.0;
        e
    }));
    pos.extend(typed(2, &["bread"], 0.2, "chat").into_iter().map(|mut e| {
        e.timestamp += 100.0;
        e
    }));
    let corpus = Corpus::from_logs(vec![log("u1", vec![(1, 5, neg), (2, 95, pos)])]).unwrap();
    let em = token_associations(&corpus, TokenKind::Emojis, 1);
    let pol: Vec<(&str, Polarity)> = em.per_user[0].iter().map(|a| (a.token.as_str(), a.polarity)).collect();
    assert!(pol.contains(&("😀", Polarity::Positive)));
    assert!(pol.contains(&("😭", Polarity::Negative)));
    let apps = token_associations(&corpus, TokenKind::Apps, 1);
    let pol: Vec<(&str, Polarity)> = apps.per_user[0].iter().map(|a| (a.token.as_str(), a.polarity)).collect();
    assert!(pol.contains(&("mail", Polarity::Negative)));
    assert!(pol.contains(&("game", Polarity::Positive)));
}

#[test]
fn planted_timing_shift_is_detected_as_faster_on_good_days() {
    let cfg = GenConfig { n_users: 4, n_days_per_user: 80, total_days: None, mood_strength: 2.0, seed: 3, ..Default::default() };
    let corpus = Corpus::from_logs(generate_logs(&cfg).unwrap()).unwrap();
    let found = word_timing_significance(&corpus, 50, TimingBuckets::default().min_timing);
    assert!(found.len() >= 10, "{} findings", found.len());
    let faster = found.iter().filter(|f| f.direction == Direction::Faster).count();
    assert!(faster as f64 >= 0.9 * found.len() as f64, "{faster}/{}", found.len());
    assert!(found.iter().all(|f| f.p < 0.05 && f.n_positive >= 3 && f.n_negative >= 3));
}

#[test]
fn identical_timing_is_not_reported() {
    let days: Vec<(u32, u8, Vec<KeyEvent>)> = (1..=10)
        .map(|d| (d, if d % 2 == 0 { 90 } else { 10 }, typed(d, &["apple", "bread"], 0.2, "chat")))
        .collect();
    let corpus = Corpus::from_logs(vec![log("u1", days)]).unwrap();
    assert!(word_timing_significance(&corpus, 500, 0.01).is_empty());
}

#[test]
fn user_without_enter_presses_has_empty_histogram() {
    let corpus = Corpus::from_logs(vec![log("u1", vec![(1, 50, typed(1, &["apple"], 0.2, "chat"))])]).unwrap();
    let h = keystroke_histograms(&corpus, &KeyGroup::Class(KeyClass::Enter), &TimingBuckets::default());
    assert!(h[0].is_empty());
    let all = keystroke_histograms(&corpus, &KeyGroup::All, &TimingBuckets::default());
    assert!(!all[0].is_empty());
    let s: f64 = all[0].by_mood[1].as_ref().unwrap().iter().sum();
    assert!((s - 1.0).abs() < 1e-12);
}

#[test]
fn planted_bimodal_users_show_two_modes() {
    let cfg = GenConfig { n_users: 8, n_days_per_user: 40, total_days: None, seed: 1, ..Default::default() };
    let (logs, ds) = generate(&cfg).unwrap();
    let manifest = plant_report(&cfg, &ds);
    let corpus = Corpus::from_logs(logs).unwrap();
    let hists = keystroke_histograms(&corpus, &KeyGroup::Class(KeyClass::Alphanumeric), &TimingBuckets::default());
    let mut n_bimodal = 0;
    for (h, p) in hists.iter().zip(&manifest.profiles) {
        let mut pooled = vec![0.0; 100];
        for v in h.by_mood.iter().flatten() {
            pooled.iter_mut().zip(v).for_each(|(a, b)| *a += b);
        }
        let modes = histogram_modes(&pooled, 3, 0.2);
        if let [a, b] = p.timing_modes.as_slice() {
            // a two-component mixture only has two peaks when the components
            // are well apart on the log scale
            if (b.median / a.median).ln() > 3.0 * a.sigma {
                n_bimodal += 1;
                assert!(modes.len() >= 2, "{}: {modes:?}", p.user_id);
            }
        } else {
            assert_eq!(modes.len(), 1, "{}: {modes:?}", p.user_id);
        }
    }
    assert!(n_bimodal > 0);
}

#[test]
fn affinities_are_normalized() {
    let mut r = ChaCha8Rng::seed_from_u64(4);
    let x = Array2::from_shape_simple_fn((30, 4), || Distribution::<f64>::sample(&StandardNormal, &mut r));
    let (cond, perp) = conditional_p(x.view(), 10.0).unwrap();
    for (i, row) in cond.rows().into_iter().enumerate() {
        assert!((row.sum() - 1.0).abs() < 1e-9);
        assert_eq!(row[i], 0.0);
        assert!((perp[i] - 10.0).abs() < 1e-3 * 10.0);
    }
    let p = joint_p(&cond);
    assert!((p.sum() - 1.0).abs() < 1e-9);
    for i in 0..30 {
        for j in 0..30 {
            assert!((p[[i, j]] - p[[j, i]]).abs() < 1e-15);
        }
    }
}

#[test]
fn infeasible_perplexity_is_an_error() {
    let x = Array2::from_shape_fn((10, 2), |(i, j)| (i * 2 + j) as f64);
    assert!(conditional_p(x.view(), 9.5).is_err());
    assert!(conditional_p(x.view(), 0.5).is_err());
    assert!(tsne(x.view(), &TsneConfig { perplexity: 20.0, ..Default::default() }).is_err());
}

#[test]
fn duplicated_points_coincide() {
    let mut r = ChaCha8Rng::seed_from_u64(9);
    // with few points the kernel normalizer is small enough that the pair's
    // own repulsion beats its affinity, so this needs a few hundred points
    let mut x = Array2::from_shape_simple_fn((300, 5), || Distribution::<f64>::sample(&StandardNormal, &mut r));
    let dup = x.row(3).to_owned();
    x.row_mut(17).assign(&dup);
    let res = tsne(x.view(), &TsneConfig::default()).unwrap();
    let d = ((res.coords[[3, 0]] - res.coords[[17, 0]]).powi(2) + (res.coords[[3, 1]] - res.coords[[17, 1]]).powi(2)).sqrt();
    assert!(d < 1e-3, "distance {d}");
    assert_eq!(res.kl_trace.len(), 1001);
    let last = *res.kl_trace.last().unwrap();
    assert!(last < res.kl_trace[0]);
    let mean = res.coords.mean_axis(ndarray::Axis(0)).unwrap();
    assert!(mean.iter().all(|m| m.abs() < 1e-9));
}

#[test]
fn tsne_is_deterministic() {
    let x = Array2::from_shape_fn((15, 3), |(i, j)| ((i * 7 + j * 3) % 11) as f64);
    let cfg = TsneConfig { perplexity: 4.0, iterations: 200, seed: 5, ..Default::default() };
    assert_eq!(tsne(x.view(), &cfg).unwrap(), tsne(x.view(), &cfg).unwrap());
}
