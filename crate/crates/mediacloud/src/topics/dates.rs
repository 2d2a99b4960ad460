//! Publication-date guessing for spidered pages.

use crate::ingest::parse_date;
use chrono::{DateTime, NaiveDate, TimeDelta, Utc};
use regex::Regex;
use scraper::{Html, Selector};
use std::sync::OnceLock;

/// Meta keys (`property`, `name` or `itemprop`) checked first, in priority order.
pub const META_KEYS: [&str; 8] = [
    "article:published_time",
    "datepublished",
    "date",
    "og:published_time",
    "pubdate",
    "publishdate",
    "dc.date.issued",
    "dc.date",
];

fn plausible(d: DateTime<Utc>, now: DateTime<Utc>) -> bool {
    let floor = NaiveDate::from_ymd_opt(1995, 1, 1).expect("valid date").and_hms_opt(0, 0, 0).expect("midnight");
    d.naive_utc() >= floor && d <= now + TimeDelta::days(1)
}

fn url_date(url: &str) -> Option<DateTime<Utc>> {
    static R: OnceLock<Regex> = OnceLock::new();
    let re = R.get_or_init(|| {
        Regex::new(r"/((?:19|20)\d{2})(?:/(\d{1,2})/(\d{1,2})|-(\d{2})-(\d{2}))(?:/|$)").expect("url date regex")
    });
    let path = url::Url::parse(url).map(|u| u.path().to_string()).unwrap_or_else(|_| url.to_string());
    re.captures_iter(&path).find_map(|c| {
        let y = c[1].parse().ok()?;
        let (m, d) = match (c.get(2), c.get(3)) {
            (Some(m), Some(d)) => (m.as_str(), d.as_str()),
            _ => (c.get(4)?.as_str(), c.get(5)?.as_str()),
        };
        NaiveDate::from_ymd_opt(y, m.parse().ok()?, d.parse().ok()?)
            .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc())
    })
}

/// Guesses when a page was published.
///
/// Tried in order: meta tags ([`META_KEYS`]), `<time datetime>`, a
/// `/YYYY/MM/DD/` or `/YYYY-MM-DD/` URL path segment, then `fallback`.
/// Dates before 1995 or more than a day after `now` are skipped.
pub fn guess_date(html: &[u8], url: &str, fallback: DateTime<Utc>, now: DateTime<Utc>) -> DateTime<Utc> {
    let doc = Html::parse_document(&String::from_utf8_lossy(html));
    let ok = |s: &str| parse_date(s).filter(|d| plausible(*d, now));

    let meta = Selector::parse("meta[content], [itemprop][datetime], [itemprop][content]").expect("static selector");
    let mut found: Vec<(usize, DateTime<Utc>)> = Vec::new();
    for el in doc.select(&meta) {
        let v = el.value();
        let key = v.attr("property").or(v.attr("name")).or(v.attr("itemprop")).unwrap_or("").to_ascii_lowercase();
        if let Some(rank) = META_KEYS.iter().position(|k| *k == key) {
            if let Some(d) = v.attr("content").or(v.attr("datetime")).and_then(ok) {
                found.push((rank, d));
            }
        }
    }
    if let Some((_, d)) = found.into_iter().min_by_key(|(rank, _)| *rank) {
        return d;
    }
    let time = Selector::parse("time[datetime]").expect("static selector");
    if let Some(d) = doc.select(&time).find_map(|el| el.value().attr("datetime").and_then(ok)) {
        return d;
    }
    if let Some(d) = url_date(url).filter(|d| plausible(*d, now)) {
        return d;
    }
    fallback
}
