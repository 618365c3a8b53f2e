//! Daily featurization of keystroke logs: bag-of-words, bag-of-timings and
//! bag-of-apps blocks, and their early fusion.
//!
//! Text and app blocks are the concatenation of an L1-normalized count vector
//! and its binarized (count > 0) indicator. Keystroke blocks are duration
//! histograms over log-spaced buckets.

mod buckets;
mod corpus;
mod tokenize;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use buckets::TimingBuckets;
pub use corpus::{day_start_seconds, window_date_of, window_day, window_range, Corpus, DayRecord};
pub use tokenize::{app_sessions, durations, is_symbol_token, words, TypedWord};

use crate::datamodel::{DailySample, Dataset, KeyClass, KeyEvent};
use crate::error::{Error, Result};

pub const DEFAULT_VOCAB_SIZE: usize = 1000;
/// Fraction of participants that must use an app for it to be kept.
pub const APP_USER_FRACTION: f64 = 0.10;
pub const NULL_TOKEN_PREFIX: &str = "<null:";

static STOPWORDS_TXT: &str = include_str!("../../data/stopwords.txt");

pub fn stopwords() -> HashSet<&'static str> {
    STOPWORDS_TXT.lines().map(str::trim).filter(|l| !l.is_empty()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KeystrokeVariant {
    /// One histogram over all key presses.
    #[default]
    Char,
    /// One histogram per key class, concatenated in [`KeyClass::ALL`] order.
    SplitChar,
    /// Mean typing duration of each vocabulary word.
    Word,
}

impl FromStr for KeystrokeVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "char" => Ok(Self::Char),
            "split" | "split_char" => Ok(Self::SplitChar),
            "word" => Ok(Self::Word),
            _ => Err(Error::validation(format!("unknown keystroke variant `{s}`"))),
        }
    }
}

impl fmt::Display for KeystrokeVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Char => "char",
            Self::SplitChar => "split",
            Self::Word => "word",
        })
    }
}

/// Subset of modalities fed to a model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Modalities {
    pub text: bool,
    pub keys: bool,
    pub apps: bool,
}

impl Modalities {
    pub const ALL: Modalities = Modalities { text: true, keys: true, apps: true };
    pub const TEXT: Modalities = Modalities { text: true, keys: false, apps: false };
    pub const KEYS: Modalities = Modalities { text: false, keys: true, apps: false };
    pub const APPS: Modalities = Modalities { text: false, keys: false, apps: true };

    /// Rows of the modality comparison table, fused first.
    pub const TABLE_ROWS: [Modalities; 6] = [
        Modalities::ALL,
        Modalities { text: true, keys: true, apps: false },
        Modalities { text: true, keys: false, apps: true },
        Modalities::TEXT,
        Modalities::KEYS,
        Modalities::APPS,
    ];

    pub fn is_empty(&self) -> bool {
        !(self.text || self.keys || self.apps)
    }

    pub fn is_unimodal(&self) -> bool {
        [self.text, self.keys, self.apps].iter().filter(|b| **b).count() == 1
    }

    pub fn code(&self) -> String {
        let mut s = String::new();
        if self.text {
            s.push('t');
        }
        if self.keys {
            s.push('k');
        }
        if self.apps {
            s.push('a');
        }
        s
    }
}

impl fmt::Display for Modalities {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<&str> = [(self.text, "T"), (self.keys, "K"), (self.apps, "A")]
            .iter()
            .filter(|(b, _)| *b)
            .map(|(_, n)| *n)
            .collect();
        f.write_str(&parts.join("+"))
    }
}

impl FromStr for Modalities {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut m = Modalities { text: false, keys: false, apps: false };
        for c in s.chars().filter(|c| !matches!(c, '+' | ',' | ' ')) {
            match c.to_ascii_lowercase() {
                't' => m.text = true,
                'k' => m.keys = true,
                'a' => m.apps = true,
                _ => return Err(Error::validation(format!("unknown modality `{c}` in `{s}`"))),
            }
        }
        if m.is_empty() {
            return Err(Error::validation("no modality selected"));
        }
        Ok(m)
    }
}

/// Identifies the samples a configuration was fitted on, so evaluation can
/// assert that no test day leaked into vocabulary selection.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct FitScope {
    pub tag: String,
    pub keys: BTreeSet<(String, NaiveDate)>,
}

impl FitScope {
    pub fn contains(&self, user: &str, date: NaiveDate) -> bool {
        self.keys.contains(&(user.to_string(), date))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub word_vocab: Vec<String>,
    /// Number of trailing reserved null tokens padding `word_vocab` to size.
    pub n_padding: usize,
    pub app_vocab: Vec<String>,
    pub buckets: TimingBuckets,
    pub variant: KeystrokeVariant,
    pub fit_scope: FitScope,
    #[serde(skip)]
    word_index: HashMap<String, usize>,
    #[serde(skip)]
    app_index: HashMap<String, usize>,
    #[serde(skip)]
    fingerprint: String,
}

impl PartialEq for FeatureConfig {
    fn eq(&self, other: &Self) -> bool {
        self.word_vocab == other.word_vocab
            && self.n_padding == other.n_padding
            && self.app_vocab == other.app_vocab
            && self.buckets == other.buckets
            && self.variant == other.variant
            && self.fit_scope == other.fit_scope
    }
}

impl FeatureConfig {
    pub fn new(
        word_vocab: Vec<String>,
        n_padding: usize,
        app_vocab: Vec<String>,
        buckets: TimingBuckets,
        variant: KeystrokeVariant,
        fit_scope: FitScope,
    ) -> Result<Self> {
        let mut c = FeatureConfig {
            word_vocab,
            n_padding,
            app_vocab,
            buckets,
            variant,
            fit_scope,
            word_index: HashMap::new(),
            app_index: HashMap::new(),
            fingerprint: String::new(),
        };
        c.rebuild_index();
        if c.word_index.len() != c.word_vocab.len() || c.app_index.len() != c.app_vocab.len() {
            return Err(Error::validation("vocabulary entries must be unique"));
        }
        if !(c.buckets.min_timing > 0.0) || c.buckets.n_buckets < 2 {
            return Err(Error::validation("invalid timing buckets"));
        }
        Ok(c)
    }

    /// Restore the lookup tables after deserialization.
    pub fn rebuild_index(&mut self) {
        self.word_index = self
            .word_vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        self.app_index = self
            .app_vocab
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let mut h = Sha256::new();
        for w in &self.word_vocab {
            h.update(w.as_bytes());
            h.update([0]);
        }
        h.update([1]);
        for a in &self.app_vocab {
            h.update(a.as_bytes());
            h.update([0]);
        }
        h.update(serde_json::to_vec(&(&self.buckets, self.variant)).unwrap_or_default());
        self.fingerprint = hex::encode(&h.finalize()[..8]);
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn word_index(&self, w: &str) -> Option<usize> {
        self.word_index.get(w).copied()
    }

    pub fn app_index(&self, a: &str) -> Option<usize> {
        self.app_index.get(a).copied()
    }

    pub fn keystroke_len(&self) -> usize {
        match self.variant {
            KeystrokeVariant::Char => self.buckets.n_buckets,
            KeystrokeVariant::SplitChar => self.buckets.n_buckets * KeyClass::ALL.len(),
            KeystrokeVariant::Word => self.word_vocab.len(),
        }
    }

    /// Full lengths of the (text, keystroke, app) blocks.
    pub fn block_lengths(&self) -> (usize, usize, usize) {
        (2 * self.word_vocab.len(), self.keystroke_len(), 2 * self.app_vocab.len())
    }

    /// Lengths of the blocks present in `m`, in fusion order.
    pub fn active_blocks(&self, m: Modalities) -> Vec<usize> {
        let (t, k, a) = self.block_lengths();
        [(m.text, t), (m.keys, k), (m.apps, a)]
            .iter()
            .filter(|(on, _)| *on)
            .map(|(_, l)| *l)
            .collect()
    }

    pub fn input_dim(&self, m: Modalities) -> usize {
        let (t, k, a) = self.block_lengths();
        m.text as usize * t + m.keys as usize * k + m.apps as usize * a
    }

    pub fn column_names(&self, m: Modalities) -> Vec<String> {
        let mut cols = Vec::new();
        if m.text {
            cols.extend(self.word_vocab.iter().map(|w| format!("t:n:{w}")));
            cols.extend(self.word_vocab.iter().map(|w| format!("t:b:{w}")));
        }
        if m.keys {
            match self.variant {
                KeystrokeVariant::Char => {
                    cols.extend((0..self.buckets.n_buckets).map(|i| format!("k:{i}")))
                }
                KeystrokeVariant::SplitChar => {
                    for k in KeyClass::ALL {
                        cols.extend((0..self.buckets.n_buckets).map(|i| format!("k:{k}:{i}")));
                    }
                }
                KeystrokeVariant::Word => {
                    cols.extend(self.word_vocab.iter().map(|w| format!("k:w:{w}")))
                }
            }
        }
        if m.apps {
            cols.extend(self.app_vocab.iter().map(|a| format!("a:n:{a}")));
            cols.extend(self.app_vocab.iter().map(|a| format!("a:b:{a}")));
        }
        cols
    }

    /// Work out which blocks a dataset file's feature columns carry.
    pub fn blocks_from_columns(&self, cols: &[String]) -> Option<Modalities> {
        let m = Modalities {
            text: cols.iter().any(|c| c.starts_with("t:")),
            keys: cols.iter().any(|c| c.starts_with("k:")),
            apps: cols.iter().any(|c| c.starts_with("a:")),
        };
        (self.column_names(m) == cols).then_some(m)
    }
}

#[derive(Debug, Clone)]
pub struct VocabOptions {
    pub size: usize,
    pub stopwords: HashSet<String>,
    pub app_user_fraction: f64,
    pub buckets: TimingBuckets,
    pub variant: KeystrokeVariant,
}

impl Default for VocabOptions {
    fn default() -> Self {
        VocabOptions {
            size: DEFAULT_VOCAB_SIZE,
            stopwords: stopwords().into_iter().map(str::to_string).collect(),
            app_user_fraction: APP_USER_FRACTION,
            buckets: TimingBuckets::default(),
            variant: KeystrokeVariant::Char,
        }
    }
}

/// A training day handed to [`fit_vocab`].
#[derive(Debug, Clone, Copy)]
pub struct TrainDay<'a> {
    pub user: &'a str,
    pub date: NaiveDate,
    pub events: &'a [KeyEvent],
}

/// Fit the word and app vocabularies on training days only.
///
/// Words: stop words removed, then the `size` most frequent (ties broken
/// lexicographically); short vocabularies are padded with reserved null
/// tokens. Apps: kept when used by at least `ceil(fraction * n_users)` of the
/// training users, in lexicographic order.
pub fn fit_vocab(days: &[TrainDay<'_>], opts: &VocabOptions, tag: &str) -> Result<FeatureConfig> {
    if days.is_empty() {
        return Err(Error::validation("cannot fit a vocabulary on zero days"));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut app_users: HashMap<&str, BTreeSet<&str>> = HashMap::new();
    let mut users: BTreeSet<&str> = BTreeSet::new();
    let mut keys = BTreeSet::new();
    for d in days {
        users.insert(d.user);
        keys.insert((d.user.to_string(), d.date));
        for w in words(d.events, opts.buckets.min_timing) {
            if !opts.stopwords.contains(&w.text) {
                *counts.entry(w.text).or_insert(0) += 1;
            }
        }
        for ev in d.events {
            app_users.entry(ev.app_id.as_str()).or_default().insert(d.user);
        }
    }
    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let mut vocab: Vec<String> = ranked.into_iter().take(opts.size).map(|(w, _)| w).collect();
    let n_padding = opts.size - vocab.len();
    if n_padding > 0 {
        log::warn!("only {} distinct words; padding vocabulary with {n_padding} null tokens", vocab.len());
        vocab.extend((0..n_padding).map(|i| format!("{NULL_TOKEN_PREFIX}{i}>")));
    }

    let min_users = (opts.app_user_fraction * users.len() as f64 - 1e-9).ceil().max(1.0) as usize;
    let mut apps: Vec<String> = app_users
        .into_iter()
        .filter(|(_, u)| u.len() >= min_users)
        .map(|(a, _)| a.to_string())
        .collect();
    apps.sort();

    FeatureConfig::new(
        vocab,
        n_padding,
        apps,
        opts.buckets.clone(),
        opts.variant,
        FitScope { tag: tag.to_string(), keys },
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BlockKind {
    Text,
    Keystrokes,
    Apps,
}

/// A featurized modality block tagged with the config that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub kind: BlockKind,
    pub values: Vec<f64>,
    pub config: String,
}

fn normalized_and_binary(counts: &[f64]) -> Vec<f64> {
    let total: f64 = counts.iter().sum();
    let mut out = Vec::with_capacity(2 * counts.len());
    if total > 0.0 {
        out.extend(counts.iter().map(|c| c / total));
    } else {
        out.extend(std::iter::repeat_n(0.0, counts.len()));
    }
    out.extend(counts.iter().map(|c| if *c > 0.0 { 1.0 } else { 0.0 }));
    out
}

pub fn featurize_text(events: &[KeyEvent], config: &FeatureConfig) -> Block {
    let mut counts = vec![0.0; config.word_vocab.len()];
    for w in words(events, config.buckets.min_timing) {
        if let Some(i) = config.word_index(&w.text) {
            counts[i] += 1.0;
        }
    }
    Block {
        kind: BlockKind::Text,
        values: normalized_and_binary(&counts),
        config: config.fingerprint.clone(),
    }
}

/// Keystroke block as raw counts (or mean word durations for the word
/// variant).
pub fn featurize_keystrokes(events: &[KeyEvent], config: &FeatureConfig) -> Block {
    let b = &config.buckets;
    let values = match config.variant {
        KeystrokeVariant::Char => b.histogram(durations(events).into_iter().flatten()),
        KeystrokeVariant::SplitChar => {
            let n = b.n_buckets;
            let mut h = vec![0.0; n * KeyClass::ALL.len()];
            for (ev, d) in events.iter().zip(durations(events)) {
                if let Some(bucket) = d.and_then(|d| b.bucket(d)) {
                    h[ev.key_class.index() * n + bucket] += 1.0;
                }
            }
            h
        }
        KeystrokeVariant::Word => {
            let k = config.word_vocab.len();
            let mut total = vec![0.0; k];
            let mut n = vec![0usize; k];
            for w in words(events, b.min_timing) {
                if let Some(i) = config.word_index(&w.text) {
                    total[i] += w.duration;
                    n[i] += 1;
                }
            }
            total
                .iter()
                .zip(&n)
                .map(|(t, c)| if *c > 0 { t / *c as f64 } else { 0.0 })
                .collect()
        }
    };
    Block {
        kind: BlockKind::Keystrokes,
        values,
        config: config.fingerprint.clone(),
    }
}

pub fn featurize_apps(events: &[KeyEvent], config: &FeatureConfig) -> Block {
    let mut counts = vec![0.0; config.app_vocab.len()];
    for (app, n) in app_sessions(events) {
        if let Some(i) = config.app_index(app) {
            counts[i] += n as f64;
        }
    }
    Block {
        kind: BlockKind::Apps,
        values: normalized_and_binary(&counts),
        config: config.fingerprint.clone(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusedVector {
    pub values: Vec<f64>,
    pub offsets: Vec<(BlockKind, std::ops::Range<usize>)>,
}

impl FusedVector {
    pub fn block(&self, kind: BlockKind) -> Option<&[f64]> {
        self.offsets
            .iter()
            .find(|(k, _)| *k == kind)
            .map(|(_, r)| &self.values[r.clone()])
    }
}

/// Early fusion: concatenate blocks in text, keystroke, app order.
pub fn fuse(blocks: &[&Block]) -> Result<FusedVector> {
    if blocks.is_empty() {
        return Err(Error::validation("nothing to fuse"));
    }
    if blocks.iter().any(|b| b.config != blocks[0].config) {
        return Err(Error::validation("blocks come from different feature configs"));
    }
    let mut sorted: Vec<&Block> = blocks.to_vec();
    let rank = |k: BlockKind| k as usize;
    sorted.sort_by_key(|b| rank(b.kind));
    if sorted.windows(2).any(|w| w[0].kind == w[1].kind) {
        return Err(Error::validation("duplicate modality in fusion"));
    }
    let mut values = Vec::new();
    let mut offsets = Vec::new();
    for b in sorted {
        let start = values.len();
        values.extend_from_slice(&b.values);
        offsets.push((b.kind, start..values.len()));
    }
    Ok(FusedVector { values, offsets })
}

/// Featurize every day of `corpus` with `config`, producing a dataset whose
/// users follow corpus log order.
pub fn featurize_corpus(corpus: &Corpus, config: &FeatureConfig, modalities: Modalities) -> Result<Dataset> {
    let samples: Vec<DailySample> = (0..corpus.days.len())
        .into_par_iter()
        .map(|i| {
            let d = &corpus.days[i];
            let ev = corpus.events(i);
            DailySample {
                x_t: if modalities.text { featurize_text(ev, config).values } else { Vec::new() },
                x_k: if modalities.keys { featurize_keystrokes(ev, config).values } else { Vec::new() },
                x_a: if modalities.apps { featurize_apps(ev, config).values } else { Vec::new() },
                y: d.label,
                user: d.user,
                date: d.date,
            }
        })
        .collect();
    Dataset::new(samples, corpus.users(), config.clone())
}

/// Fit a vocabulary on the given corpus days.
pub fn fit_on_days(corpus: &Corpus, rows: &[usize], opts: &VocabOptions, tag: &str) -> Result<FeatureConfig> {
    let days: Vec<TrainDay<'_>> = rows
        .iter()
        .map(|&i| TrainDay {
            user: corpus.user_of(i),
            date: corpus.days[i].date,
            events: corpus.events(i),
        })
        .collect();
    fit_vocab(&days, opts, tag)
}
