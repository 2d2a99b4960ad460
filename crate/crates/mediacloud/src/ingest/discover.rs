//! Feed discovery by crawling a media source's home page two levels deep.

use super::feed::parse_feed;
use crate::fetch::{FetchRecord, Fetcher};
use crate::urlnorm::{absolutize, normalize_or_raw, parse_lenient, registrable_domain};
use chrono::{DateTime, Utc};
use scraper::{Html, Selector};
use std::collections::{BTreeMap, BTreeSet};

/// Link substrings that suggest a feed.
pub const FEED_HINTS: [&str; 5] = ["rss", "xml", "atom", "feed", "rdf"];

/// Upper bound on second-level pages fetched per discovery.
pub const MAX_PAGES: usize = 200;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Discovery {
    /// Absolute feed URLs, sorted, one per normalized URL.
    pub feeds: Vec<String>,
    pub diagnostics: Vec<String>,
}

fn looks_like_feed(url: &url::Url, text: &str) -> bool {
    let mut hay = url.path().to_ascii_lowercase();
    if let Some(q) = url.query() {
        hay.push('?');
        hay.push_str(&q.to_ascii_lowercase());
    }
    let text = text.to_lowercase();
    FEED_HINTS.iter().any(|h| hay.contains(h) || text.contains(h))
}

/// Same-domain links of a page, split into feed candidates and other pages.
fn scan(body: &[u8], page_url: &str, domain: &str) -> (Vec<String>, Vec<String>) {
    let Ok(base) = parse_lenient(page_url) else {
        return (Vec::new(), Vec::new());
    };
    let doc = Html::parse_document(&String::from_utf8_lossy(body));
    let sel = Selector::parse("a[href], link[href]").expect("static selector");
    let (mut candidates, mut pages) = (Vec::new(), Vec::new());
    for el in doc.select(&sel) {
        let v = el.value();
        let text = if v.name() == "link" {
            let rel = v.attr("rel").unwrap_or("").to_ascii_lowercase();
            if !rel.split_whitespace().any(|r| r == "alternate") {
                continue;
            }
            format!("{} {}", v.attr("type").unwrap_or(""), v.attr("title").unwrap_or(""))
        } else {
            el.text().collect::<String>()
        };
        let Some(url) = absolutize(&base, v.attr("href").unwrap_or("")) else { continue };
        if registrable_domain(url.as_str()).ok().as_deref() != Some(domain) {
            continue;
        }
        if looks_like_feed(&url, &text) {
            candidates.push(url.to_string());
        } else if v.name() == "a" {
            pages.push(url.to_string());
        }
    }
    (candidates, pages)
}

/// Finds feeds linked from `home_url` or from the same-domain pages it links to.
///
/// Candidates are links whose path, query or anchor text contains one of
/// [`FEED_HINTS`]. A candidate is kept only if it fetches and parses as a feed
/// with at least one item.
pub fn discover_feeds(home_url: &str, fetcher: &dyn Fetcher, now: DateTime<Utc>) -> Discovery {
    let mut out = Discovery::default();
    let Ok(domain) = registrable_domain(home_url) else {
        out.diagnostics.push(format!("home url {home_url:?} is not a valid URL"));
        return out;
    };
    let mut cache: BTreeMap<String, FetchRecord> = BTreeMap::new();
    let mut get = |url: &str| -> FetchRecord {
        cache.entry(normalize_or_raw(url)).or_insert_with(|| fetcher.fetch(url, now)).clone()
    };

    let home = get(home_url);
    if !home.is_success() {
        out.diagnostics.push(format!("home page {home_url}: {}", home.describe_failure()));
        return out;
    }
    let (mut candidates, pages) = scan(&home.body, home_url, &domain);
    let home_key = normalize_or_raw(home_url);
    let pages: BTreeSet<String> = pages.into_iter().filter(|p| normalize_or_raw(p) != home_key).collect();
    if pages.len() > MAX_PAGES {
        out.diagnostics.push(format!("{} second-level pages, only the first {MAX_PAGES} crawled", pages.len()));
    }
    for page in pages.iter().take(MAX_PAGES) {
        let rec = get(page);
        if !rec.is_success() || parse_feed(&rec.body).is_ok() {
            continue;
        }
        candidates.extend(scan(&rec.body, page, &domain).0);
    }

    let mut kept: BTreeMap<String, String> = BTreeMap::new();
    let mut tried = BTreeSet::new();
    for c in candidates {
        let key = normalize_or_raw(&c);
        if !tried.insert(key.clone()) {
            continue;
        }
        let rec = get(&c);
        if !rec.is_success() {
            out.diagnostics.push(format!("candidate {c}: {}", rec.describe_failure()));
            continue;
        }
        match parse_feed(&rec.body) {
            Ok(f) if !f.items.is_empty() => {
                kept.insert(key, c);
            }
            Ok(_) => out.diagnostics.push(format!("candidate {c}: feed has no items")),
            Err(e) => out.diagnostics.push(format!("candidate {c}: {e}")),
        }
    }
    let mut feeds: Vec<String> = kept.into_values().collect();
    feeds.sort();
    out.feeds = feeds;
    out
}
