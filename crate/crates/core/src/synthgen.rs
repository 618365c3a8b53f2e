//! Synthetic keystroke logs with planted identity and mood signals.
//!
//! Population structure:
//! * tokens are a handful of stop words, `vocab_size` synthetic words and a
//!   small emoji set, ranked by a Zipf(1.1) base distribution;
//! * each user tilts a random 10% of content tokens by `exp(identity_strength * z)`
//!   (their lexical signature), tilts app preferences the same way and types
//!   with their own log-normal (sometimes bimodal) key-press timing mixture;
//! * a shared 5% of content tokens (and of apps) is mood-bearing, tilted by
//!   `exp(±mood_strength)` on positive/negative days; key-press medians shift
//!   by `mood_strength * 10%` (slower on negative days, faster on positive).
//!
//! All randomness comes from [`crate::rng`] streams keyed by the seed, the
//! stream purpose and the user index, so users can be generated in any order.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::datamodel::{Dataset, EventLog, KeyClass, KeyEvent, MoodClass, MoodReport};
use crate::error::{Error, Result};
use crate::features::{self, day_start_seconds, Corpus, Modalities, VocabOptions};
use crate::rng::{self, Stream};

pub const EMOJIS: [&str; 12] = ["😀", "😂", "😍", "🥺", "😭", "😡", "❤", "🔥", "💀", "🙄", "✨", "👍"];
const PUNCTUATION: [&str; 4] = [".", ",", "!", "?"];
/// Stop words typed by the generator; they top the frequency ranking and
/// must be removed by the stop-word list.
const GEN_STOPWORDS: [&str; 24] = [
    "the", "i", "to", "and", "you", "a", "it", "is", "my", "me", "that", "in", "so", "of", "for",
    "on", "but", "be", "was", "we", "just", "this", "with", "have",
];
const ZIPF_WORDS: f64 = 1.1;
const ZIPF_APPS: f64 = 1.0;
const IDENTITY_WORD_FRACTION: f64 = 0.10;
const MOOD_WORD_FRACTION: f64 = 0.05;
const MOOD_APP_FRACTION: f64 = 0.05;
/// Mood words are drawn from this leading fraction of the content ranking so
/// they occur often enough to matter.
const MOOD_WORD_RANK_POOL: f64 = 0.3;
const PRIVATE_APPS_PER_USER: usize = 2;
/// Private apps are as popular as the app at this base rank.
const PRIVATE_APP_RANK: usize = 5;
const APP_IDENTITY_TILT: f64 = 2.0;
const TIMING_IDENTITY_SPREAD: f64 = 0.45;
const KEY_IDENTITY_SPREAD: f64 = 0.5;
const SPREAD_IDENTITY: f64 = 0.3;
/// Relative key-press slowdown on negative days (speed-up on positive).
const MOOD_TIMING_SHIFT: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub n_users: usize,
    pub n_days_per_user: usize,
    /// When set, days are spread near-uniformly so the total equals this.
    pub total_days: Option<usize>,
    pub class_mix: [f64; 3],
    pub vocab_size: usize,
    pub n_apps: usize,
    pub identity_strength: f64,
    pub mood_strength: f64,
    pub sessions_per_day: f64,
    pub words_per_session: f64,
    pub seed: u64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            n_users: 17,
            n_days_per_user: 97,
            total_days: Some(1641),
            class_mix: [0.1243, 0.4363, 0.4394],
            vocab_size: 1000,
            n_apps: 137,
            identity_strength: 1.0,
            mood_strength: 1.0,
            sessions_per_day: 10.0,
            words_per_session: 8.0,
            seed: 0,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.class_mix.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.class_mix.iter().any(|p| !(*p >= 0.0)) {
            return Err(Error::validation(format!("class mix must sum to 1, got {sum}")));
        }
        if self.n_users == 0 || self.n_days_per_user == 0 || self.vocab_size == 0 || self.n_apps == 0 {
            return Err(Error::validation("user, day, vocabulary and app counts must be positive"));
        }
        if self.total_days == Some(0) {
            return Err(Error::validation("total_days must be positive"));
        }
        if !(self.identity_strength >= 0.0) || !(self.mood_strength >= 0.0) {
            return Err(Error::validation("signal strengths must be non-negative"));
        }
        if !(self.sessions_per_day >= 1.0) || !(self.words_per_session >= 1.0) {
            return Err(Error::validation("activity rates must be at least 1"));
        }
        Ok(())
    }

    pub fn days_for_user(&self, u: usize) -> usize {
        match self.total_days {
            Some(t) => t / self.n_users + usize::from(u < t % self.n_users),
            None => self.n_days_per_user,
        }
    }

    pub fn user_id(&self, u: usize) -> String {
        format!("p{:02}", u + 1)
    }
}

/// One log-normal timing component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingMode {
    /// Median press duration in seconds.
    pub median: f64,
    pub sigma: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserProfile {
    pub user_id: String,
    /// Normalized token preference (stop words, content words, emojis).
    pub word_preference: Vec<f64>,
    pub app_preference: Vec<f64>,
    pub timing_modes: Vec<TimingMode>,
    /// Per key-class duration multipliers in [`KeyClass::ALL`] order.
    pub key_multipliers: [f64; 6],
    /// Content tokens carrying the user's lexical signature, with multiplier.
    pub signature_words: Vec<(String, f64)>,
    /// Log-multiplier applied to each mood token per class.
    pub mood_word_shift: [f64; 3],
    /// Duration multiplier per class.
    pub mood_timing_shift: [f64; 3],
}

/// Shared population vocabulary and mood structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub tokens: Vec<String>,
    pub n_stopwords: usize,
    pub apps: Vec<String>,
    /// Mood-bearing tokens with polarity (+1 positive, -1 negative).
    pub mood_words: Vec<(String, i8)>,
    pub mood_apps: Vec<(String, i8)>,
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";

fn syllable(i: usize) -> [u8; 2] {
    [CONSONANTS[i % CONSONANTS.len()], VOWELS[(i / CONSONANTS.len()) % VOWELS.len()]]
}

/// Deterministic pronounceable word for an index (two or more syllables).
fn synth_word(mut i: usize) -> String {
    let n = CONSONANTS.len() * VOWELS.len();
    let mut bytes = Vec::new();
    bytes.extend(syllable(i % n));
    i /= n;
    bytes.extend(syllable(i % n));
    i /= n;
    while i > 0 {
        bytes.extend(syllable(i % n));
        i /= n;
    }
    String::from_utf8(bytes).expect("ascii")
}

fn zipf_weights(n: usize, s: f64) -> Vec<f64> {
    (1..=n).map(|r| (r as f64).powf(-s)).collect()
}

fn normalize(v: &mut [f64]) {
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
}

fn mood_sign(c: MoodClass) -> f64 {
    match c {
        MoodClass::Negative => -1.0,
        MoodClass::Neutral => 0.0,
        MoodClass::Positive => 1.0,
    }
}

pub fn population(config: &GenConfig) -> Population {
    let mut rng = rng::named(config.seed, "population");
    let stop = features::stopwords();
    let mut content = Vec::with_capacity(config.vocab_size + EMOJIS.len());
    let mut i = 0;
    while content.len() < config.vocab_size {
        let w = synth_word(i);
        if !stop.contains(w.as_str()) {
            content.push(w);
        }
        i += 1;
    }
    content.extend(EMOJIS.iter().map(|e| e.to_string()));
    content.shuffle(&mut rng);

    let pool = ((content.len() as f64 * MOOD_WORD_RANK_POOL) as usize).max(1);
    let n_mood = ((config.vocab_size as f64 * MOOD_WORD_FRACTION).round() as usize).clamp(1, pool);
    let mut idx: Vec<usize> = (0..pool).collect();
    idx.shuffle(&mut rng);
    let mood_words = idx[..n_mood]
        .iter()
        .enumerate()
        .map(|(j, &k)| (content[k].clone(), if j % 2 == 0 { 1 } else { -1 }))
        .collect();

    let apps: Vec<String> = (0..config.n_apps).map(|a| format!("app{a:03}")).collect();
    let n_mood_apps = ((config.n_apps as f64 * MOOD_APP_FRACTION).round() as usize).clamp(1, config.n_apps);
    let app_pool = ((config.n_apps as f64 * MOOD_WORD_RANK_POOL) as usize).max(n_mood_apps);
    let mut aidx: Vec<usize> = (0..app_pool).collect();
    aidx.shuffle(&mut rng);
    let mood_apps = aidx[..n_mood_apps]
        .iter()
        .enumerate()
        .map(|(j, &k)| (apps[k].clone(), if j % 2 == 0 { 1 } else { -1 }))
        .collect();

    let mut tokens: Vec<String> = GEN_STOPWORDS.iter().map(|s| s.to_string()).collect();
    let n_stopwords = tokens.len();
    tokens.extend(content);
    Population { tokens, n_stopwords, apps, mood_words, mood_apps }
}

pub fn user_profile(config: &GenConfig, pop: &Population, u: usize) -> UserProfile {
    let mut rng = rng::stream(config.seed, &[rng::label("profile"), u as u64]);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let id = config.identity_strength;

    let mut word_preference = zipf_weights(pop.tokens.len(), ZIPF_WORDS);
    let mood: std::collections::HashSet<&str> = pop.mood_words.iter().map(|(w, _)| w.as_str()).collect();
    let candidates: Vec<usize> = (pop.n_stopwords..pop.tokens.len())
        .filter(|&i| !mood.contains(pop.tokens[i].as_str()))
        .collect();
    let n_sig = ((config.vocab_size as f64 * IDENTITY_WORD_FRACTION).round() as usize).min(candidates.len());
    let chosen: Vec<usize> = candidates.choose_multiple(&mut rng, n_sig).copied().collect();
    let mut signature_words = Vec::with_capacity(n_sig);
    for i in chosen {
        let z: f64 = std.sample(&mut rng);
        // strong positive tilts make a signature recognisable
        let m = (id * (1.5 + z.abs())).exp();
        word_preference[i] *= m;
        signature_words.push((pop.tokens[i].clone(), m));
    }
    normalize(&mut word_preference);

    let mut app_preference = zipf_weights(pop.apps.len(), ZIPF_APPS);
    for w in app_preference.iter_mut() {
        let z: f64 = std.sample(&mut rng);
        *w *= (APP_IDENTITY_TILT * id * z).exp();
    }
    normalize(&mut app_preference);

    let z_med: f64 = std.sample(&mut rng);
    let z_sig: f64 = std.sample(&mut rng);
    let bimodal = rng.random::<f64>() < 0.5;
    let z_second: f64 = std.sample(&mut rng);
    let mut key_multipliers = [1.0, 1.6, 1.2, 2.5, 0.9, 1.4];
    for m in key_multipliers.iter_mut() {
        let z: f64 = std.sample(&mut rng);
        *m *= (KEY_IDENTITY_SPREAD * id * z).exp();
    }
    let median = 0.18 * (TIMING_IDENTITY_SPREAD * id * z_med).exp();
    let sigma = 0.45 * (SPREAD_IDENTITY * id * z_sig).exp();
    let timing_modes = if id > 0.0 && bimodal {
        vec![
            TimingMode { median, sigma: sigma * 0.8, weight: 0.65 },
            TimingMode { median: median * (3.0 + 0.5 * z_second).max(2.0), sigma: sigma * 0.8, weight: 0.35 },
        ]
    } else {
        vec![TimingMode { median, sigma, weight: 1.0 }]
    };

    let ms = config.mood_strength;
    UserProfile {
        user_id: config.user_id(u),
        word_preference,
        app_preference,
        timing_modes,
        key_multipliers,
        signature_words,
        mood_word_shift: [-ms, 0.0, ms],
        mood_timing_shift: MoodClass::ALL.map(|c| 1.0 - MOOD_TIMING_SHIFT * ms * mood_sign(c)),
    }
}

/// Per-class token and app samplers for one user.
struct UserSamplers {
    words: Vec<WeightedIndex<f64>>,
    apps: Vec<WeightedIndex<f64>>,
    app_names: Vec<String>,
}

fn samplers(config: &GenConfig, pop: &Population, p: &UserProfile, u: usize) -> UserSamplers {
    let word_pos: BTreeMap<&str, usize> =
        pop.tokens.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let mut app_names = pop.apps.clone();
    let mut app_base = p.app_preference.clone();
    if config.identity_strength > 0.0 {
        // a few apps only this participant uses
        let w = app_base[PRIVATE_APP_RANK.min(app_base.len() - 1)];
        for j in 0..PRIVATE_APPS_PER_USER {
            app_names.push(format!("{}.private{j}", p.user_id));
            app_base.push(w);
        }
    }
    let app_pos: BTreeMap<&str, usize> =
        pop.apps.iter().enumerate().map(|(i, a)| (a.as_str(), i)).collect();
    let _ = u;
    let mut words = Vec::new();
    let mut apps = Vec::new();
    for c in MoodClass::ALL {
        let sign = mood_sign(c);
        let mut wp = p.word_preference.clone();
        for (w, pol) in &pop.mood_words {
            wp[word_pos[w.as_str()]] *= (config.mood_strength * sign * *pol as f64).exp();
        }
        words.push(WeightedIndex::new(&wp).expect("positive weights"));
        let mut ap = app_base.clone();
        for (a, pol) in &pop.mood_apps {
            ap[app_pos[a.as_str()]] *= (config.mood_strength * sign * *pol as f64).exp();
        }
        apps.push(WeightedIndex::new(&ap).expect("positive weights"));
    }
    UserSamplers { words, apps, app_names }
}

fn first_report_date(u: usize) -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 1, 2).expect("valid date") + Duration::days(3 * u as i64)
}

fn draw_class(rng: &mut Stream, mix: &[f64; 3]) -> MoodClass {
    let r: f64 = rng.random();
    if r < mix[0] {
        MoodClass::Negative
    } else if r < mix[0] + mix[1] {
        MoodClass::Neutral
    } else {
        MoodClass::Positive
    }
}

fn score_for(rng: &mut Stream, c: MoodClass) -> u8 {
    match c {
        MoodClass::Negative => rng.random_range(0..=33),
        MoodClass::Neutral => rng.random_range(34..=66),
        MoodClass::Positive => rng.random_range(67..=100),
    }
}

struct Typist<'a> {
    profile: &'a UserProfile,
    class: MoodClass,
    mode_pick: WeightedIndex<f64>,
    normals: Vec<Normal<f64>>,
    t_ms: i64,
    events: Vec<KeyEvent>,
    app: String,
}

impl Typist<'_> {
    fn press(&mut self, rng: &mut Stream, key: KeyClass, token: Option<String>) {
        self.events.push(KeyEvent {
            timestamp: self.t_ms as f64 / 1000.0,
            key_class: key,
            char_token: token,
            app_id: self.app.clone(),
        });
        let m = self.mode_pick.sample(rng);
        let mode = &self.profile.timing_modes[m];
        let z = self.normals[m].sample(rng);
        let secs = mode.median
            * z.exp()
            * self.profile.key_multipliers[key.index()]
            * self.profile.mood_timing_shift[self.class.index()];
        self.t_ms += ((secs * 1000.0).round() as i64).clamp(1, 60_000);
    }
}

fn generate_user(config: &GenConfig, pop: &Population, u: usize) -> Result<EventLog> {
    let profile = user_profile(config, pop, u);
    let s = samplers(config, pop, &profile, u);
    let mut rng = rng::stream(config.seed, &[rng::label("days"), u as u64]);
    let sessions = Poisson::new(config.sessions_per_day - 1.0 + 1e-12).expect("rate");
    let words_dist = Poisson::new(config.words_per_session - 1.0 + 1e-12).expect("rate");
    let mode_pick =
        WeightedIndex::new(profile.timing_modes.iter().map(|m| m.weight)).expect("mode weights");
    let normals: Vec<Normal<f64>> = profile
        .timing_modes
        .iter()
        .map(|m| Normal::new(0.0, m.sigma).expect("sigma"))
        .collect();

    let mut events = Vec::new();
    let mut reports = Vec::new();
    let first = first_report_date(u);
    for d in 0..config.days_for_user(u) {
        let date = first + Duration::days(d as i64);
        let class = draw_class(&mut rng, &config.class_mix);
        reports.push(MoodReport { date, score: score_for(&mut rng, class) });

        let end_ms = (day_start_seconds(date) * 1000.0) as i64;
        // activity between 07:00 and 02:00 inside the 05:00-05:00 window
        let lo = end_ms - 22 * 3_600_000;
        let hi = end_ms - 3 * 3_600_000;
        let n_sessions = 1 + sessions.sample(&mut rng) as usize;
        let mut starts: Vec<i64> = (0..n_sessions).map(|_| rng.random_range(lo..hi)).collect();
        starts.sort_unstable();

        let mut typist = Typist {
            profile: &profile,
            class,
            mode_pick: mode_pick.clone(),
            normals: normals.clone(),
            t_ms: lo,
            events: Vec::new(),
            app: String::new(),
        };
        for start in starts {
            typist.t_ms = typist.t_ms.max(start);
            typist.app = s.app_names[s.apps[class.index()].sample(&mut rng)].clone();
            let n_words = 1 + words_dist.sample(&mut rng) as usize;
            for _ in 0..n_words {
                if typist.t_ms >= end_ms - 60_000 {
                    break;
                }
                let tok = &pop.tokens[s.words[class.index()].sample(&mut rng)];
                if !tok.is_ascii() {
                    typist.press(&mut rng, KeyClass::Symbol, Some(tok.clone()));
                } else {
                    let typo_at = (rng.random::<f64>() < 0.04).then(|| rng.random_range(0..tok.len()));
                    for (i, ch) in tok.chars().enumerate() {
                        if typo_at == Some(i) {
                            let wrong = CONSONANTS[rng.random_range(0..CONSONANTS.len())] as char;
                            typist.press(&mut rng, KeyClass::Alphanumeric, Some(wrong.to_string()));
                            typist.press(&mut rng, KeyClass::Delete, None);
                        }
                        typist.press(&mut rng, KeyClass::Alphanumeric, Some(ch.to_string()));
                    }
                }
                let r: f64 = rng.random();
                if r < 0.08 {
                    let p = PUNCTUATION[rng.random_range(0..PUNCTUATION.len())];
                    typist.press(&mut rng, KeyClass::Symbol, Some(p.to_string()));
                    typist.press(&mut rng, KeyClass::Spacebar, None);
                } else if r < 0.12 {
                    typist.press(&mut rng, KeyClass::Autocorrect, None);
                    typist.press(&mut rng, KeyClass::Spacebar, None);
                } else {
                    typist.press(&mut rng, KeyClass::Spacebar, None);
                }
            }
            typist.press(&mut rng, KeyClass::Enter, None);
        }
        events.extend(typist.events.into_iter().filter(|e| e.timestamp * 1000.0 < end_ms as f64));
    }
    EventLog::new(profile.user_id, events, reports)
}

/// Event logs for every synthetic participant.
pub fn generate_logs(config: &GenConfig) -> Result<Vec<EventLog>> {
    config.validate()?;
    let pop = population(config);
    (0..config.n_users)
        .into_par_iter()
        .map(|u| generate_user(config, &pop, u))
        .collect()
}

/// Logs plus a dataset featurized with a vocabulary fitted on all days.
pub fn generate(config: &GenConfig) -> Result<(Vec<EventLog>, Dataset)> {
    let logs = generate_logs(config)?;
    let corpus = Corpus::from_logs(logs.clone())?;
    let rows: Vec<usize> = (0..corpus.days.len()).collect();
    let opts = VocabOptions { size: config.vocab_size, ..Default::default() };
    let fc = features::fit_on_days(&corpus, &rows, &opts, "all")?;
    let ds = features::featurize_corpus(&corpus, &fc, Modalities::ALL)?;
    Ok((logs, ds))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileSummary {
    pub user_id: String,
    pub n_days: usize,
    pub timing_modes: Vec<TimingMode>,
    pub key_multipliers: [f64; 6],
    pub signature_words: Vec<(String, f64)>,
    pub mood_word_shift: [f64; 3],
    pub mood_timing_shift: [f64; 3],
}

/// Ground truth of what was planted, for oracle checks downstream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenManifest {
    pub config: GenConfig,
    pub mood_words: Vec<(String, i8)>,
    pub mood_apps: Vec<(String, i8)>,
    pub profiles: Vec<ProfileSummary>,
    pub label_counts: [usize; 3],
    pub n_samples: usize,
}

pub fn plant_report(config: &GenConfig, dataset: &Dataset) -> GenManifest {
    let pop = population(config);
    let profiles = (0..config.n_users)
        .map(|u| {
            let p = user_profile(config, &pop, u);
            ProfileSummary {
                user_id: p.user_id,
                n_days: config.days_for_user(u),
                timing_modes: p.timing_modes,
                key_multipliers: p.key_multipliers,
                signature_words: p.signature_words,
                mood_word_shift: p.mood_word_shift,
                mood_timing_shift: p.mood_timing_shift,
            }
        })
        .collect();
    let mut label_counts = [0; 3];
    for s in &dataset.samples {
        label_counts[s.y.index()] += 1;
    }
    GenManifest {
        config: config.clone(),
        mood_words: pop.mood_words,
        mood_apps: pop.mood_apps,
        profiles,
        label_counts,
        n_samples: dataset.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> GenConfig {
        GenConfig {
            n_users: 3,
            n_days_per_user: 6,
            total_days: None,
            vocab_size: 120,
            n_apps: 20,
            seed: 11,
            ..GenConfig::default()
        }
    }

    #[test]
    fn synth_words_are_unique() {
        let words: std::collections::HashSet<String> = (0..5000).map(synth_word).collect();
        assert_eq!(words.len(), 5000);
    }

    #[test]
    fn invalid_mix_rejected() {
        let c = GenConfig { class_mix: [0.5, 0.5, 0.1], ..small() };
        assert!(c.validate().is_err());
    }

    #[test]
    fn default_day_split_totals_1641() {
        let c = GenConfig::default();
        let total: usize = (0..17).map(|u| c.days_for_user(u)).sum();
        assert_eq!(total, 1641);
        assert!((0..17).all(|u| (96..=97).contains(&c.days_for_user(u))));
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate_logs(&small()).unwrap();
        let b = generate_logs(&small()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert!(a.iter().all(|l| l.mood_reports.len() == 6 && !l.events.is_empty()));
    }

    #[test]
    fn profiles_are_normalized() {
        let c = small();
        let pop = population(&c);
        for u in 0..c.n_users {
            let p = user_profile(&c, &pop, u);
            assert!((p.word_preference.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!((p.app_preference.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!((p.timing_modes.iter().map(|m| m.weight).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn events_stay_inside_their_windows() {
        let logs = generate_logs(&small()).unwrap();
        for log in &logs {
            let corpus_dates: Vec<_> = log.mood_reports.iter().map(|r| r.date).collect();
            for ev in &log.events {
                assert!(corpus_dates.contains(&features::window_date_of(ev.timestamp)));
            }
        }
    }
}
