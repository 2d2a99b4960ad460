//! Bulk media and feed files.
//!
//! Media: `media_id,name,url,start_date`. Feeds: `feeds_id,media_id,url,active,type`.
//! A blank id on import means "assign the next one".

use super::{FeedType, MediaSource, Store, StoreError};
use chrono::{DateTime, NaiveDate, Utc};
use mediacloud_core::PollSchedule;
use std::collections::BTreeSet;
use std::io::{Read, Write};

pub const MEDIA_HEADER: [&str; 4] = ["media_id", "name", "url", "start_date"];
pub const FEEDS_HEADER: [&str; 5] = ["feeds_id", "media_id", "url", "active", "type"];

#[derive(Debug, Default, Clone, PartialEq, Eq)]
pub struct CsvSummary {
    pub inserted: usize,
    /// One diagnostic per skipped row.
    pub skipped: Vec<String>,
}

fn check_header(reader: &mut csv::Reader<impl Read>, want: &[&str]) -> Result<(), StoreError> {
    let got: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if got != want {
        return Err(StoreError::Invalid(format!("csv header {got:?}, expected {want:?}")));
    }
    Ok(())
}

fn parse_id(s: &str) -> Result<Option<u64>, String> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|_| format!("bad id {s:?}"))
}

/// Imports media rows. Rows whose name already exists are skipped.
pub fn import_media(store: &mut Store, input: impl Read, default_start: NaiveDate) -> Result<CsvSummary, StoreError> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &MEDIA_HEADER)?;
    let mut summary = CsvSummary::default();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                summary.skipped.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let result = (|| -> Result<(), String> {
            let id = parse_id(&row[0])?;
            let start = match row[3].trim() {
                "" => default_start,
                s => NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|_| format!("bad start_date {s:?}"))?,
            };
            match id {
                Some(media_id) => store.insert_media(MediaSource {
                    media_id,
                    name: row[1].trim().to_string(),
                    url: row[2].trim().to_string(),
                    start_date: start,
                    tags: BTreeSet::new(),
                }),
                None => store.add_media(&row[1], &row[2], start).map(|_| ()),
            }
            .map_err(|e| e.to_string())
        })();
        match result {
            Ok(()) => summary.inserted += 1,
            Err(e) => summary.skipped.push(format!("line {line}: {e}")),
        }
    }
    Ok(summary)
}

pub fn export_media(store: &Store, out: impl Write) -> Result<(), StoreError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(MEDIA_HEADER)?;
    for m in store.media_list() {
        w.write_record([m.media_id.to_string(), m.name.clone(), m.url.clone(), m.start_date.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "" | "true" | "t" | "1" | "yes" => Ok(true),
        "false" | "f" | "0" | "no" => Ok(false),
        other => Err(format!("bad active flag {other:?}")),
    }
}

/// Imports feed rows. New feeds get a fresh five-minute schedule from `now`.
pub fn import_feeds(store: &mut Store, input: impl Read, now: DateTime<Utc>) -> Result<CsvSummary, StoreError> {
    let mut reader = csv::Reader::from_reader(input);
    check_header(&mut reader, &FEEDS_HEADER)?;
    let mut summary = CsvSummary::default();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                summary.skipped.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let result = (|| -> Result<(), String> {
            let id = parse_id(&row[0])?;
            let media_id = parse_id(&row[1])?.ok_or("missing media_id")?;
            let active = parse_bool(&row[3])?;
            let feed_type = FeedType::parse(&row[4]).ok_or_else(|| format!("bad feed type {:?}", &row[4]))?;
            let schedule = PollSchedule::new(now);
            let feed = super::Feed {
                feeds_id: id.unwrap_or_else(|| store.feeds().map(|f| f.feeds_id).max().unwrap_or(0) + 1),
                media_id,
                url: row[2].trim().to_string(),
                active,
                feed_type,
                poll_interval: schedule.interval.minutes(),
                next_poll_at: schedule.next_poll_at,
            };
            store.insert_feed(feed).map_err(|e| e.to_string())
        })();
        match result {
            Ok(()) => summary.inserted += 1,
            Err(e) => summary.skipped.push(format!("line {line}: {e}")),
        }
    }
    Ok(summary)
}

pub fn export_feeds(store: &Store, out: impl Write) -> Result<(), StoreError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FEEDS_HEADER)?;
    for f in store.feeds() {
        w.write_record([
            f.feeds_id.to_string(),
            f.media_id.to_string(),
            f.url.clone(),
            f.active.to_string(),
            f.feed_type.as_str().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
