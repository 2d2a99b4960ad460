//! Platform posts uploaded as CSV: seed URLs, per-URL share stats and the
//! author co-share network.

use super::spider::{enqueue, media_for_hostname};
use crate::store::{PlatformPost, SpiderStatus, Store, StoreError, TopicState, UrlShareStats, Via};
use crate::urlnorm::normalize_url;
use chrono::{DateTime, Utc};
use mediacloud_core::links::coshare_edges;
use std::collections::{BTreeMap, BTreeSet};
use std::io::Read;

pub const POSTS_HEADER: [&str; 5] = ["post_id", "author", "channel", "content", "urls"];

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PostsSummary {
    pub posts: usize,
    /// Normalized URLs newly added to the topic's seed URLs.
    pub urls_added: Vec<String>,
    pub skipped: Vec<String>,
}

/// Distinct post, author and channel counts per normalized URL.
pub fn url_share_stats(posts: &[PlatformPost]) -> BTreeMap<String, UrlShareStats> {
    let mut sets: BTreeMap<String, [BTreeSet<&str>; 3]> = BTreeMap::new();
    for p in posts {
        for url in &p.urls {
            let e = sets.entry(url.clone()).or_default();
            e[0].insert(&p.post_id);
            e[1].insert(&p.author);
            e[2].insert(&p.channel);
        }
    }
    sets.into_iter()
        .map(|(url, [posts, authors, channels])| {
            (
                url,
                UrlShareStats {
                    post_count: posts.len() as u64,
                    author_count: authors.len() as u64,
                    channel_count: channels.len() as u64,
                },
            )
        })
        .collect()
}

/// Reads posts, appends their URLs to the topic's seeds, and recomputes
/// share stats and the co-share network over all of the topic's posts.
///
/// A missing or wrong header is an error. Malformed rows and already seen
/// post ids are skipped with a diagnostic.
pub fn ingest_platform_posts(
    store: &mut Store,
    topics_id: u64,
    input: impl Read,
    now: DateTime<Utc>,
) -> Result<PostsSummary, StoreError> {
    let mut state = store.topic(topics_id).ok_or(StoreError::UnknownTopic(topics_id))?.clone();
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != POSTS_HEADER {
        return Err(StoreError::Invalid(format!("posts header {header:?}, expected {POSTS_HEADER:?}")));
    }
    let mut summary = PostsSummary::default();
    let mut known: BTreeSet<String> = state.posts.iter().map(|p| p.post_id.clone()).collect();
    let mut seeds: BTreeSet<String> = state.topic.seed_urls.iter().filter_map(|u| normalize_url(u).ok()).collect();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = match row {
            Ok(r) if r.len() == POSTS_HEADER.len() => r,
            Ok(r) => {
                summary.skipped.push(format!("line {line}: {} fields, expected {}", r.len(), POSTS_HEADER.len()));
                continue;
            }
            Err(e) => {
                summary.skipped.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let post_id = row[0].trim().to_string();
        if post_id.is_empty() {
            summary.skipped.push(format!("line {line}: empty post_id"));
            continue;
        }
        if !known.insert(post_id.clone()) {
            summary.skipped.push(format!("line {line}: duplicate post_id {post_id:?}"));
            continue;
        }
        let mut urls = Vec::new();
        for raw in row[4].split_whitespace() {
            match normalize_url(raw) {
                Ok(u) => {
                    if !urls.contains(&u) {
                        urls.push(u);
                    }
                }
                Err(e) => summary.skipped.push(format!("line {line}: url {raw:?}: {e}")),
            }
        }
        for u in &urls {
            if seeds.insert(u.clone()) {
                state.topic.seed_urls.push(u.clone());
                summary.urls_added.push(u.clone());
                if state.status != SpiderStatus::Created {
                    enqueue(&mut state, u, false, Via::UrlSeed, None);
                }
            }
        }
        state.posts.push(PlatformPost {
            post_id,
            author: row[1].trim().to_string(),
            channel: row[2].trim().to_string(),
            content: row[3].to_string(),
            urls,
        });
        summary.posts += 1;
    }
    if summary.posts > 0 {
        state.url_stats = url_share_stats(&state.posts);
        state.coshare = coshare(store, &state, now)?;
        store.put_topic(state)?;
        store.sync()?;
    }
    Ok(summary)
}

/// Co-share weights between media of shared URLs, with authors as the unit.
fn coshare(store: &mut Store, state: &TopicState, now: DateTime<Utc>) -> Result<BTreeMap<(u64, u64), u64>, StoreError> {
    let mut incidences = Vec::new();
    for p in &state.posts {
        for url in &p.urls {
            let media = match store.story_by_normalized_url(url).and_then(|id| store.story(id)) {
                Some(s) => s.media_id,
                None => media_for_hostname(store, url, now)?,
            };
            incidences.push((p.author.clone(), media));
        }
    }
    Ok(coshare_edges(incidences))
}
