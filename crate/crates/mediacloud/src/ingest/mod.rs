//! Feed discovery, feed parsing and scheduled polling.

pub mod crawl;
pub mod discover;
pub mod feed;

pub use crawl::{crawl_tick, due_feeds, next_due, run_until, Clock, FeedPoll, Pipeline, RunSummary, TickReport};
pub use discover::{discover_feeds, Discovery, FEED_HINTS};
pub use feed::{parse_date, parse_feed, Dialect, FeedError, ParsedFeed};

use crate::fetch::Fetcher;
use crate::store::{FeedType, Store, StoreError};
use crate::urlnorm::normalize_or_raw;
use chrono::{DateTime, Utc};

/// Discovers feeds for a medium and adds the ones it does not have yet.
/// Returns the discovery and the ids of the added feeds.
pub fn discover_and_add(
    store: &mut Store,
    media_id: u64,
    fetcher: &dyn Fetcher,
    now: DateTime<Utc>,
) -> Result<(Discovery, Vec<u64>), StoreError> {
    let home = store.media(media_id).ok_or(StoreError::UnknownMedia(media_id))?.url.clone();
    let discovery = discover_feeds(&home, fetcher, now);
    let existing: std::collections::BTreeSet<String> =
        store.feeds_for_media(media_id).map(|f| normalize_or_raw(&f.url)).collect();
    let mut added = Vec::new();
    for url in &discovery.feeds {
        if !existing.contains(&normalize_or_raw(url)) {
            added.push(store.add_feed(media_id, url, FeedType::Syndicated, now)?);
        }
    }
    store.sync()?;
    Ok((discovery, added))
}
