use std::ops::Range;

use chrono::{NaiveDate, NaiveTime};

use crate::datamodel::{bin_mood, EventLog, KeyEvent, MoodClass};
use crate::error::Result;

/// Hour of day at which daily windows start and end.
pub const WINDOW_BOUNDARY_HOUR: u32 = 5;

pub fn day_start_seconds(date: NaiveDate) -> f64 {
    let t = NaiveTime::from_hms_opt(WINDOW_BOUNDARY_HOUR, 0, 0).expect("valid time");
    date.and_time(t).and_utc().timestamp() as f64
}

/// Index range of the events in `[date - 1 05:00, date 05:00)`.
pub fn window_range(events: &[KeyEvent], date: NaiveDate) -> Range<usize> {
    let end_t = day_start_seconds(date);
    let start_t = end_t - 86_400.0;
    let lo = events.partition_point(|e| e.timestamp < start_t);
    let hi = events.partition_point(|e| e.timestamp < end_t);
    lo..hi.max(lo)
}

/// Events summarizing the day whose mood is reported on `date`.
pub fn window_day(log: &EventLog, date: NaiveDate) -> &[KeyEvent] {
    &log.events[window_range(&log.events, date)]
}

/// The window date a timestamp belongs to.
pub fn window_date_of(timestamp: f64) -> NaiveDate {
    let days = ((timestamp - WINDOW_BOUNDARY_HOUR as f64 * 3600.0) / 86_400.0).floor() as i64 + 1;
    NaiveDate::from_ymd_opt(1970, 1, 1).expect("epoch") + chrono::TimeDelta::days(days)
}

/// One mood-reported day: who, when, the label and where its events sit in
/// the user's log.
#[derive(Debug, Clone, PartialEq)]
pub struct DayRecord {
    pub user: usize,
    pub date: NaiveDate,
    pub label: MoodClass,
    pub events: Range<usize>,
}

/// Event logs plus the per-day windows derived from their mood reports.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub logs: Vec<EventLog>,
    pub days: Vec<DayRecord>,
}

impl Corpus {
    /// Days follow log order, then report date. Days with a report but no
    /// typing keep an empty window.
    pub fn from_logs(logs: Vec<EventLog>) -> Result<Self> {
        let mut days = Vec::new();
        for (u, log) in logs.iter().enumerate() {
            log.validate()?;
            let mut reports = log.mood_reports.clone();
            reports.sort();
            reports.dedup_by_key(|r| r.date);
            for r in reports {
                days.push(DayRecord {
                    user: u,
                    date: r.date,
                    label: bin_mood(r.score as i64)?,
                    events: window_range(&log.events, r.date),
                });
            }
        }
        Ok(Corpus { logs, days })
    }

    pub fn users(&self) -> Vec<String> {
        self.logs.iter().map(|l| l.user_id.clone()).collect()
    }

    pub fn n_users(&self) -> usize {
        self.logs.len()
    }

    pub fn events(&self, day: usize) -> &[KeyEvent] {
        let d = &self.days[day];
        &self.logs[d.user].events[d.events.clone()]
    }

    pub fn user_of(&self, day: usize) -> &str {
        &self.logs[self.days[day].user].user_id
    }

    /// Keep only users with at least `min_days` reported days.
    pub fn filter_users(self, min_days: usize) -> Result<Corpus> {
        let mut counts = vec![0usize; self.logs.len()];
        for d in &self.days {
            counts[d.user] += 1;
        }
        let logs: Vec<EventLog> = self
            .logs
            .into_iter()
            .zip(&counts)
            .filter(|(_, c)| **c >= min_days)
            .map(|(l, _)| l)
            .collect();
        if logs.is_empty() {
            return Err(crate::error::Error::EmptyDataset);
        }
        Corpus::from_logs(logs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datamodel::KeyClass;

    fn at(date: NaiveDate, h: u32, m: u32, s: u32) -> f64 {
        date.and_hms_opt(h, m, s).unwrap().and_utc().timestamp() as f64
    }

    #[test]
    fn window_boundaries_are_half_open() {
        let d = NaiveDate::from_ymd_opt(2020, 3, 10).unwrap();
        let before = at(d, 4, 59, 59);
        let exactly = at(d, 5, 0, 0);
        assert_eq!(window_date_of(before), d);
        assert_eq!(window_date_of(exactly), d.succ_opt().unwrap());

        let events: Vec<KeyEvent> = [before, exactly]
            .iter()
            .map(|t| KeyEvent::new(*t, KeyClass::Spacebar, None, "a").unwrap())
            .collect();
        let log = EventLog::new("u", events, vec![]).unwrap();
        assert_eq!(window_day(&log, d).len(), 1);
        assert_eq!(window_day(&log, d)[0].timestamp, before);
        assert_eq!(window_day(&log, d.succ_opt().unwrap())[0].timestamp, exactly);
    }
}
