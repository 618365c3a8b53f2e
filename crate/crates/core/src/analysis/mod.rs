//! Qualitative analyses: mood associations of words, emojis and apps,
//! word-level timing tests, per-mood keystroke histograms and t-SNE.

mod tsne;

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use tsne::{conditional_p, joint_p, kl_divergence, kl_gradient, tsne, TsneConfig, TsneResult};

use crate::datamodel::{KeyClass, MoodClass};
use crate::eval::{wilcoxon_rank_sum, SIGNIFICANCE};
use crate::features::{app_sessions, durations, stopwords, words, Corpus, TimingBuckets};

pub const MIN_TOKEN_COUNT: usize = 40;
pub const TOP_WORDS: usize = 500;
pub const MIN_TIMING_SAMPLES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    Positive,
    Negative,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Association {
    pub token: String,
    pub polarity: Polarity,
    /// Relative frequency on days of the token's polarity minus the user's
    /// overall share of that polarity.
    pub delta: f64,
    /// Occurrences on negative, neutral and positive days.
    pub counts: [usize; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssociationTable {
    pub users: Vec<String>,
    /// Per user, sorted by decreasing delta.
    pub per_user: Vec<Vec<Association>>,
    /// Number of users for whom each token is (positive, negative).
    pub cross_user: BTreeMap<String, (usize, usize)>,
}

/// Token kind counted by [`token_associations`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenKind {
    Words,
    Emojis,
    Apps,
}

/// Per-user token counts split by the mood class of the day.
pub type MoodCounts = HashMap<String, [usize; 3]>;

pub fn mood_counts(corpus: &Corpus, kind: TokenKind) -> Vec<MoodCounts> {
    let stop = stopwords();
    let mut out = vec![MoodCounts::new(); corpus.n_users()];
    for (i, day) in corpus.days.iter().enumerate() {
        let ev = corpus.events(i);
        let c = day.label.index();
        let counts = &mut out[day.user];
        match kind {
            TokenKind::Apps => {
                for (app, n) in app_sessions(ev) {
                    counts.entry(app.to_string()).or_insert([0; 3])[c] += n;
                }
            }
            TokenKind::Words | TokenKind::Emojis => {
                for w in words(ev, 0.0) {
                    let emoji = crate::features::is_symbol_token(&w.text);
                    let keep = match kind {
                        TokenKind::Emojis => emoji,
                        _ => !emoji && !stop.contains(w.text.as_str()),
                    };
                    if keep {
                        counts.entry(w.text).or_insert([0; 3])[c] += 1;
                    }
                }
            }
        }
    }
    out
}

/// Associations for one user's counts.
pub fn associations_from_counts(counts: &MoodCounts, min_count: usize) -> Vec<Association> {
    let mut total = [0usize; 3];
    for c in counts.values() {
        for k in 0..3 {
            total[k] += c[k];
        }
    }
    let all: usize = total.iter().sum();
    if all == 0 {
        return Vec::new();
    }
    let share = |k: usize| total[k] as f64 / all as f64;
    let (neg, pos) = (MoodClass::Negative.index(), MoodClass::Positive.index());
    let mut out = Vec::new();
    for (tok, c) in counts {
        let n: usize = c.iter().sum();
        if n < min_count {
            continue;
        }
        let p = c[pos] as f64 / n as f64;
        let q = c[neg] as f64 / n as f64;
        if p > share(pos) && q < share(neg) {
            out.push(Association { token: tok.clone(), polarity: Polarity::Positive, delta: p - share(pos), counts: *c });
        } else if q > share(neg) && p < share(pos) {
            out.push(Association { token: tok.clone(), polarity: Polarity::Negative, delta: q - share(neg), counts: *c });
        }
    }
    out.sort_by(|a, b| b.delta.total_cmp(&a.delta).then_with(|| a.token.cmp(&b.token)));
    out
}

pub fn token_associations(corpus: &Corpus, kind: TokenKind, min_count: usize) -> AssociationTable {
    let per_user: Vec<Vec<Association>> = mood_counts(corpus, kind)
        .par_iter()
        .map(|c| associations_from_counts(c, min_count))
        .collect();
    let mut cross_user: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for list in &per_user {
        for a in list {
            let e = cross_user.entry(a.token.clone()).or_default();
            match a.polarity {
                Polarity::Positive => e.0 += 1,
                Polarity::Negative => e.1 += 1,
            }
        }
    }
    AssociationTable { users: corpus.users(), per_user, cross_user }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Faster typing on positive days.
    Faster,
    Slower,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingFinding {
    pub user: String,
    pub word: String,
    pub direction: Direction,
    pub p: f64,
    pub n_positive: usize,
    pub n_negative: usize,
}

/// Rank-sum tests of word durations on positive against negative days, for
/// each user's `top_k` most frequent words. Only significant rows are kept.
pub fn word_timing_significance(corpus: &Corpus, top_k: usize, min_timing: f64) -> Vec<TimingFinding> {
    let stop = stopwords();
    let mut samples: Vec<HashMap<String, [Vec<f64>; 2]>> = vec![HashMap::new(); corpus.n_users()];
    let mut freq: Vec<HashMap<String, usize>> = vec![HashMap::new(); corpus.n_users()];
    for (i, day) in corpus.days.iter().enumerate() {
        for w in words(corpus.events(i), min_timing) {
            if stop.contains(w.text.as_str()) {
                continue;
            }
            *freq[day.user].entry(w.text.clone()).or_insert(0) += 1;
            let side = match day.label {
                MoodClass::Positive => 0,
                MoodClass::Negative => 1,
                MoodClass::Neutral => continue,
            };
            samples[day.user].entry(w.text).or_insert_with(|| [Vec::new(), Vec::new()])[side].push(w.duration);
        }
    }
    let users = corpus.users();
    let rows: Vec<Vec<TimingFinding>> = (0..corpus.n_users())
        .into_par_iter()
        .map(|u| {
            let mut ranked: Vec<(&String, &usize)> = freq[u].iter().collect();
            ranked.sort_by(|a, b| b.1.cmp(a.1).then_with(|| a.0.cmp(b.0)));
            let mut found = Vec::new();
            for (word, _) in ranked.into_iter().take(top_k) {
                let Some([pos, neg]) = samples[u].get(word) else { continue };
                if pos.len() < MIN_TIMING_SAMPLES || neg.len() < MIN_TIMING_SAMPLES {
                    continue;
                }
                let Ok(t) = wilcoxon_rank_sum(pos, neg) else { continue };
                if t.p_value < SIGNIFICANCE {
                    found.push(TimingFinding {
                        user: users[u].clone(),
                        word: word.clone(),
                        direction: if t.p_less < t.p_greater { Direction::Faster } else { Direction::Slower },
                        p: t.p_value,
                        n_positive: pos.len(),
                        n_negative: neg.len(),
                    });
                }
            }
            found.sort_by(|a, b| a.word.cmp(&b.word));
            found
        })
        .collect();
    rows.into_iter().flatten().collect()
}

/// Keys grouped for histogram plots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum KeyGroup {
    All,
    Class(KeyClass),
}

impl KeyGroup {
    fn contains(&self, k: KeyClass) -> bool {
        match self {
            KeyGroup::All => true,
            KeyGroup::Class(c) => *c == k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoodHistograms {
    pub user: String,
    /// Normalized histogram per mood class; `None` when the user has no
    /// presses of the group on days of that class.
    pub by_mood: [Option<Vec<f64>>; 3],
}

impl MoodHistograms {
    pub fn is_empty(&self) -> bool {
        self.by_mood.iter().all(Option::is_none)
    }
}

pub fn keystroke_histograms(corpus: &Corpus, group: &KeyGroup, buckets: &TimingBuckets) -> Vec<MoodHistograms> {
    let mut raw = vec![[vec![0.0; buckets.n_buckets], vec![0.0; buckets.n_buckets], vec![0.0; buckets.n_buckets]]; corpus.n_users()];
    for (i, day) in corpus.days.iter().enumerate() {
        let ev = corpus.events(i);
        for (e, d) in ev.iter().zip(durations(ev)) {
            if !group.contains(e.key_class) {
                continue;
            }
            if let Some(b) = d.and_then(|d| buckets.bucket(d)) {
                raw[day.user][day.label.index()][b] += 1.0;
            }
        }
    }
    corpus
        .users()
        .into_iter()
        .zip(raw)
        .map(|(user, h)| MoodHistograms {
            user,
            by_mood: h.map(|v| {
                let s: f64 = v.iter().sum();
                (s > 0.0).then(|| v.iter().map(|x| x / s).collect())
            }),
        })
        .collect()
}

/// Local maxima of a moving-average smoothed histogram whose height exceeds
/// `min_height` times the global maximum.
pub fn histogram_modes(h: &[f64], window: usize, min_height: f64) -> Vec<usize> {
    let n = h.len();
    let sm: Vec<f64> = (0..n)
        .map(|i| {
            let lo = i.saturating_sub(window);
            let hi = (i + window + 1).min(n);
            h[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let top = sm.iter().copied().fold(0.0, f64::max);
    let mut modes = Vec::new();
    let mut i = 0;
    while i < n {
        // plateau [i, j)
        let mut j = i + 1;
        while j < n && sm[j] == sm[i] {
            j += 1;
        }
        let left = i == 0 || sm[i - 1] < sm[i];
        let right = j == n || sm[j] < sm[i];
        if left && right && sm[i] > 0.0 && sm[i] >= min_height * top {
            modes.push((i + j - 1) / 2);
        }
        i = j;
    }
    modes
}

/// Distinct tokens appearing anywhere in a table.
pub fn listed_tokens(t: &AssociationTable) -> HashSet<&str> {
    t.per_user.iter().flatten().map(|a| a.token.as_str()).collect()
}
