//! Domain types shared by the whole pipeline plus their on-disk formats.
//!
//! Event logs are tab-separated, one keystroke per line:
//! `timestamp \t user_id \t key_class \t char_token \t app_id`, with an empty
//! `char_token` field for keys that carry no character. Mood reports live in
//! a sibling file of `date \t score` lines.
//!
//! Datasets are a tab-separated table: `#`-prefixed metadata lines (the
//! feature configuration as JSON), a header row naming every feature column,
//! then one daily sample per row.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{FeatureConfig, KeystrokeVariant, Modalities};

/// Minimum number of daily self-reports a participant needs to be kept.
pub const MIN_REPORTS_PER_USER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyClass {
    Alphanumeric,
    Symbol,
    Spacebar,
    Enter,
    Delete,
    Autocorrect,
}

impl KeyClass {
    /// Order used by the split-character keystroke histograms.
    pub const ALL: [KeyClass; 6] = [
        KeyClass::Alphanumeric,
        KeyClass::Symbol,
        KeyClass::Spacebar,
        KeyClass::Enter,
        KeyClass::Delete,
        KeyClass::Autocorrect,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KeyClass::Alphanumeric => "alphanumeric",
            KeyClass::Symbol => "symbol",
            KeyClass::Spacebar => "spacebar",
            KeyClass::Enter => "enter",
            KeyClass::Delete => "delete",
            KeyClass::Autocorrect => "autocorrect",
        }
    }
}

impl fmt::Display for KeyClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for KeyClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        KeyClass::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::validation(format!("unknown key class `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyEvent {
    /// Seconds since the epoch, in the single implicit local timezone.
    pub timestamp: f64,
    pub key_class: KeyClass,
    pub char_token: Option<String>,
    pub app_id: String,
}

fn is_field_safe(s: &str) -> bool {
    !s.contains(['\t', '\n', '\r'])
}

impl KeyEvent {
    pub fn new(
        timestamp: f64,
        key_class: KeyClass,
        char_token: Option<String>,
        app_id: impl Into<String>,
    ) -> Result<Self> {
        let ev = KeyEvent {
            timestamp,
            key_class,
            char_token,
            app_id: app_id.into(),
        };
        ev.validate()?;
        Ok(ev)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.timestamp.is_finite() || self.timestamp < 0.0 {
            return Err(Error::validation(format!(
                "timestamp {} must be finite and non-negative",
                self.timestamp
            )));
        }
        if self.app_id.is_empty() || !is_field_safe(&self.app_id) {
            return Err(Error::validation(format!("invalid app id {:?}", self.app_id)));
        }
        let Some(tok) = self.char_token.as_deref() else {
            return Ok(());
        };
        if tok.is_empty() || !is_field_safe(tok) {
            return Err(Error::validation(format!("invalid char token {tok:?}")));
        }
        let single_alnum = {
            let mut it = tok.chars();
            matches!((it.next(), it.next()), (Some(c), None) if c.is_alphanumeric())
        };
        let consistent = match self.key_class {
            KeyClass::Alphanumeric => single_alnum,
            KeyClass::Symbol => !tok.chars().any(char::is_alphanumeric),
            KeyClass::Autocorrect => true,
            KeyClass::Spacebar | KeyClass::Enter | KeyClass::Delete => false,
        };
        if consistent {
            Ok(())
        } else {
            Err(Error::validation(format!(
                "char token {tok:?} inconsistent with key class {}",
                self.key_class
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MoodReport {
    pub date: NaiveDate,
    pub score: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventLog {
    pub user_id: String,
    pub events: Vec<KeyEvent>,
    pub mood_reports: Vec<MoodReport>,
}

impl EventLog {
    pub fn new(
        user_id: impl Into<String>,
        events: Vec<KeyEvent>,
        mood_reports: Vec<MoodReport>,
    ) -> Result<Self> {
        let log = EventLog {
            user_id: user_id.into(),
            events,
            mood_reports,
        };
        log.validate()?;
        Ok(log)
    }

    pub fn validate(&self) -> Result<()> {
        if self.user_id.is_empty() || !is_field_safe(&self.user_id) {
            return Err(Error::validation(format!("invalid user id {:?}", self.user_id)));
        }
        for ev in &self.events {
            ev.validate()?;
        }
        if self
            .events
            .windows(2)
            .any(|w| w[1].timestamp < w[0].timestamp)
        {
            return Err(Error::validation("events are not sorted by timestamp"));
        }
        if let Some(r) = self.mood_reports.iter().find(|r| r.score > 100) {
            return Err(Error::validation(format!("mood score {} out of range", r.score)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MoodClass {
    Negative = 0,
    Neutral = 1,
    Positive = 2,
}

impl MoodClass {
    pub const ALL: [MoodClass; 3] = [MoodClass::Negative, MoodClass::Neutral, MoodClass::Positive];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MoodClass::Negative => "negative",
            MoodClass::Neutral => "neutral",
            MoodClass::Positive => "positive",
        }
    }
}

impl fmt::Display for MoodClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MoodClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MoodClass::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::validation(format!("unknown mood class `{s}`")))
    }
}

/// Discretize a 0-100 self-report into negative (0-33), neutral (34-66) or
/// positive (67-100).
pub fn bin_mood(score: i64) -> Result<MoodClass> {
    match score {
        0..=33 => Ok(MoodClass::Negative),
        34..=66 => Ok(MoodClass::Neutral),
        67..=100 => Ok(MoodClass::Positive),
        _ => Err(Error::validation(format!("mood score {score} outside 0..=100"))),
    }
}

/// One day of features for one participant.
///
/// A modality left out of featurization has an empty block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DailySample {
    pub x_t: Vec<f64>,
    pub x_k: Vec<f64>,
    pub x_a: Vec<f64>,
    pub y: MoodClass,
    /// Index into [`Dataset::users`]; the one-hot identity is derived from it.
    pub user: usize,
    pub date: NaiveDate,
}

impl DailySample {
    pub fn x_id(&self, n_users: usize) -> Vec<f64> {
        let mut v = vec![0.0; n_users];
        v[self.user] = 1.0;
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub samples: Vec<DailySample>,
    pub users: Vec<String>,
    pub config: FeatureConfig,
}

impl Dataset {
    pub fn new(samples: Vec<DailySample>, users: Vec<String>, config: FeatureConfig) -> Result<Self> {
        if let Some(s) = samples.iter().find(|s| s.user >= users.len()) {
            return Err(Error::validation(format!(
                "sample user index {} outside user list of {}",
                s.user,
                users.len()
            )));
        }
        let (kt, kk, ka) = config.block_lengths();
        for s in &samples {
            for (blk, want) in [(&s.x_t, kt), (&s.x_k, kk), (&s.x_a, ka)] {
                if !blk.is_empty() && blk.len() != want {
                    return Err(Error::DimensionMismatch {
                        expected: want,
                        actual: blk.len(),
                    });
                }
                if blk.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(Error::validation("feature values must be finite and non-negative"));
                }
            }
        }
        Ok(Dataset {
            samples,
            users,
            config,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.y.index()).collect()
    }

    pub fn user_ids(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.user).collect()
    }

    pub fn per_user_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.users.len()];
        for s in &self.samples {
            counts[s.user] += 1;
        }
        counts
    }

    /// Model input matrix for the chosen modalities (early fusion order: text,
    /// keystrokes, apps). Keystroke histograms are L1-normalized per day so
    /// that their scale matches the other blocks.
    pub fn matrix(&self, modalities: Modalities) -> Array2<f64> {
        self.matrix_rows(modalities, &(0..self.len()).collect::<Vec<_>>())
    }

    pub fn matrix_rows(&self, modalities: Modalities, rows: &[usize]) -> Array2<f64> {
        let dim = self.config.input_dim(modalities);
        let mut m = Array2::zeros((rows.len(), dim));
        for (r, &i) in rows.iter().enumerate() {
            let s = &self.samples[i];
            let mut row = m.row_mut(r);
            let mut off = 0;
            if modalities.text {
                for (j, v) in s.x_t.iter().enumerate() {
                    row[off + j] = *v;
                }
                off += self.config.block_lengths().0;
            }
            if modalities.keys {
                let total: f64 = match self.config.variant {
                    KeystrokeVariant::Word => 1.0,
                    _ => s.x_k.iter().sum(),
                };
                if total > 0.0 {
                    for (j, v) in s.x_k.iter().enumerate() {
                        row[off + j] = *v / total;
                    }
                }
                off += self.config.block_lengths().1;
            }
            if modalities.apps {
                for (j, v) in s.x_a.iter().enumerate() {
                    row[off + j] = *v;
                }
            }
        }
        m
    }

    pub fn subset(&self, rows: &[usize]) -> Dataset {
        Dataset {
            samples: rows.iter().map(|&i| self.samples[i].clone()).collect(),
            users: self.users.clone(),
            config: self.config.clone(),
        }
    }
}

/// Drop participants with fewer than [`MIN_REPORTS_PER_USER`] samples,
/// preserving sample order and re-indexing the surviving users.
pub fn filter_participants(dataset: &Dataset) -> Result<Dataset> {
    filter_participants_min(dataset, MIN_REPORTS_PER_USER)
}

pub fn filter_participants_min(dataset: &Dataset, min_samples: usize) -> Result<Dataset> {
    let counts = dataset.per_user_counts();
    let mut remap = vec![None; dataset.users.len()];
    let mut users = Vec::new();
    for (u, name) in dataset.users.iter().enumerate() {
        if counts[u] >= min_samples {
            remap[u] = Some(users.len());
            users.push(name.clone());
        }
    }
    let samples: Vec<DailySample> = dataset
        .samples
        .iter()
        .filter_map(|s| {
            remap[s.user].map(|nu| DailySample {
                user: nu,
                ..s.clone()
            })
        })
        .collect();
    if samples.is_empty() {
        return Err(Error::EmptyDataset);
    }
    Ok(Dataset {
        samples,
        users,
        config: dataset.config.clone(),
    })
}

// ---------------------------------------------------------------------------
// Event-log files

pub fn events_path(dir: &Path, user_id: &str) -> std::path::PathBuf {
    dir.join(format!("{user_id}.events.tsv"))
}

pub fn mood_path(dir: &Path, user_id: &str) -> std::path::PathBuf {
    dir.join(format!("{user_id}.mood.tsv"))
}

pub fn write_event_log(log: &EventLog, events: &Path, moods: &Path) -> Result<()> {
    let f = fs::File::create(events).map_err(|e| Error::io(events, e))?;
    let mut w = BufWriter::new(f);
    for ev in &log.events {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            ev.timestamp,
            log.user_id,
            ev.key_class,
            ev.char_token.as_deref().unwrap_or(""),
            ev.app_id
        )
        .map_err(|e| Error::io(events, e))?;
    }
    w.flush().map_err(|e| Error::io(events, e))?;

    let f = fs::File::create(moods).map_err(|e| Error::io(moods, e))?;
    let mut w = BufWriter::new(f);
    for r in &log.mood_reports {
        writeln!(w, "{}\t{}", r.date, r.score).map_err(|e| Error::io(moods, e))?;
    }
    w.flush().map_err(|e| Error::io(moods, e))
}

/// Read an event log. The user id comes from the records; for a log with no
/// events it falls back to `default_user`.
pub fn read_event_log(events: &Path, moods: &Path, default_user: &str) -> Result<EventLog> {
    let parse_err = |path: &Path, line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };

    let f = fs::File::open(events).map_err(|e| Error::io(events, e))?;
    let mut user_id: Option<String> = None;
    let mut evs = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(events, e))?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 5 {
            return Err(parse_err(
                events,
                lineno,
                format!("expected 5 tab-separated fields, found {}", fields.len()),
            ));
        }
        let timestamp: f64 = fields[0]
            .parse()
            .map_err(|_| parse_err(events, lineno, format!("bad timestamp `{}`", fields[0])))?;
        match &user_id {
            None => user_id = Some(fields[1].to_string()),
            Some(u) if u != fields[1] => {
                return Err(parse_err(
                    events,
                    lineno,
                    format!("user id `{}` differs from `{u}`", fields[1]),
                ))
            }
            _ => {}
        }
        let key_class: KeyClass = fields[2]
            .parse()
            .map_err(|e: Error| parse_err(events, lineno, e.to_string()))?;
        let token = (!fields[3].is_empty()).then(|| fields[3].to_string());
        let ev = KeyEvent::new(timestamp, key_class, token, fields[4])
            .map_err(|e| parse_err(events, lineno, e.to_string()))?;
        evs.push(ev);
    }

    let f = fs::File::open(moods).map_err(|e| Error::io(moods, e))?;
    let mut reports = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(moods, e))?;
        if line.is_empty() {
            continue;
        }
        let (d, s) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(moods, lineno, "expected `date\\tscore`".into()))?;
        let date = NaiveDate::parse_from_str(d, "%Y-%m-%d")
            .map_err(|e| parse_err(moods, lineno, format!("bad date `{d}`: {e}")))?;
        let score: u8 = s
            .parse()
            .ok()
            .filter(|v| *v <= 100)
            .ok_or_else(|| parse_err(moods, lineno, format!("bad score `{s}`")))?;
        reports.push(MoodReport { date, score });
    }

    let log = EventLog {
        user_id: user_id.unwrap_or_else(|| default_user.to_string()),
        events: evs,
        mood_reports: reports,
    };
    log.validate()?;
    Ok(log)
}

/// Load every `<user>.events.tsv` / `<user>.mood.tsv` pair in `dir`, sorted by
/// user id.
pub fn read_log_dir(dir: &Path) -> Result<Vec<EventLog>> {
    let mut users = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(u) = name.strip_suffix(".mood.tsv") {
            users.push(u.to_string());
        }
    }
    users.sort();
    users
        .iter()
        .map(|u| read_event_log(&events_path(dir, u), &mood_path(dir, u), u))
        .collect()
}

pub fn write_log_dir(dir: &Path, logs: &[EventLog]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for log in logs {
        write_event_log(log, &events_path(dir, &log.user_id), &mood_path(dir, &log.user_id))?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Dataset files

const DATASET_MAGIC: &str = "# typedmood-dataset v1";

pub fn write_dataset(ds: &Dataset, path: &Path) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    let io = |e| Error::io(path, e);
    writeln!(w, "{DATASET_MAGIC}").map_err(io)?;
    writeln!(w, "# users {}", serde_json::to_string(&ds.users)?).map_err(io)?;
    writeln!(w, "# config {}", serde_json::to_string(&ds.config)?).map_err(io)?;
    let blocks = present_blocks(ds);
    let mut header = vec!["user".to_string(), "date".into(), "label".into()];
    header.extend(ds.config.column_names(blocks));
    writeln!(w, "{}", header.join("\t")).map_err(io)?;
    for s in &ds.samples {
        write!(w, "{}\t{}\t{}", ds.users[s.user], s.date, s.y).map_err(io)?;
        for v in s.x_t.iter().chain(&s.x_k).chain(&s.x_a) {
            write!(w, "\t{v}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

fn present_blocks(ds: &Dataset) -> Modalities {
    match ds.samples.first() {
        Some(s) => Modalities {
            text: !s.x_t.is_empty(),
            keys: !s.x_k.is_empty(),
            apps: !s.x_a.is_empty(),
        },
        None => Modalities::ALL,
    }
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let perr = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, l)) if l == DATASET_MAGIC => {}
        _ => return Err(perr(1, "missing dataset header".into())),
    }
    let mut users: Option<Vec<String>> = None;
    let mut config: Option<FeatureConfig> = None;
    let mut header: Option<Vec<String>> = None;
    let mut samples = Vec::new();
    let mut user_index: HashMap<String, usize> = HashMap::new();
    let mut blocks = Modalities::ALL;
    for (i, line) in lines {
        let lineno = i + 1;
        if let Some(rest) = line.strip_prefix("# users ") {
            let u: Vec<String> =
                serde_json::from_str(rest).map_err(|e| perr(lineno, e.to_string()))?;
            user_index = u.iter().enumerate().map(|(i, n)| (n.clone(), i)).collect();
            users = Some(u);
            continue;
        }
        if let Some(rest) = line.strip_prefix("# config ") {
            let mut c: FeatureConfig =
                serde_json::from_str(rest).map_err(|e| perr(lineno, e.to_string()))?;
            c.rebuild_index();
            config = Some(c);
            continue;
        }
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        let cfg = config
            .as_ref()
            .ok_or_else(|| perr(lineno, "config metadata missing".into()))?;
        if header.is_none() {
            let h: Vec<String> = line.split('\t').map(str::to_string).collect();
            blocks = cfg
                .blocks_from_columns(&h[3.min(h.len())..])
                .ok_or_else(|| perr(lineno, "header does not match config".into()))?;
            header = Some(h);
            continue;
        }
        let ncols = header.as_ref().map_or(0, Vec::len);
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != ncols {
            return Err(perr(
                lineno,
                format!("expected {ncols} columns, found {}", fields.len()),
            ));
        }
        let user = *user_index
            .get(fields[0])
            .ok_or_else(|| perr(lineno, format!("unknown user `{}`", fields[0])))?;
        let date = NaiveDate::parse_from_str(fields[1], "%Y-%m-%d")
            .map_err(|e| perr(lineno, format!("bad date: {e}")))?;
        let y: MoodClass = fields[2]
            .parse()
            .map_err(|e: Error| perr(lineno, e.to_string()))?;
        let vals = fields[3..]
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| perr(lineno, format!("bad value: {e}")))?;
        let (kt, kk, _) = cfg.block_lengths();
        let kt = if blocks.text { kt } else { 0 };
        let kk = if blocks.keys { kk } else { 0 };
        samples.push(DailySample {
            x_t: vals[..kt].to_vec(),
            x_k: vals[kt..kt + kk].to_vec(),
            x_a: vals[kt + kk..].to_vec(),
            y,
            user,
            date,
        });
    }
    let users = users.ok_or_else(|| perr(1, "users metadata missing".into()))?;
    let config = config.ok_or_else(|| perr(1, "config metadata missing".into()))?;
    Dataset::new(samples, users, config)
}

/// Per-user label counts, keyed by user name (used in run manifests).
pub fn label_summary(ds: &Dataset) -> BTreeMap<String, [usize; 3]> {
    let mut out: BTreeMap<String, [usize; 3]> = BTreeMap::new();
    for s in &ds.samples {
        out.entry(ds.users[s.user].clone()).or_default()[s.y.index()] += 1;
    }
    out
}
