//! Seeding and round-by-round hyperlink spidering.
//!
//! Each round runs in three phases: plan under a read lock, fetch with no
//! lock held, then apply under the write lock in sorted URL order, so the
//! outcome does not depend on fetch timing.

use super::dates::guess_date;
use super::metrics::{assign_timespans, compute_shares, ShareProvider};
use crate::fetch::{fetch_all, FetchRecord, Fetcher};
use crate::store::{FeedItem, QueuedUrl, SpiderStatus, Store, StoreError, TopicState, TopicStory, Via};
use crate::textproc::{extract_text, TextProcessor, TextSource};
use crate::urlnorm::{normalize_url, registrable_domain};
use chrono::{DateTime, Utc};
use mediacloud_core::query::{parse_query, PostingsIndex, Query};
use std::collections::BTreeSet;
use std::sync::{PoisonError, RwLock};

/// The medium a URL belongs to: an existing medium whose home URL has the same
/// registrable domain, else a new placeholder named after the domain.
pub fn media_for_hostname(store: &mut Store, url: &str, now: DateTime<Utc>) -> Result<u64, StoreError> {
    let domain = registrable_domain(url).map_err(|e| StoreError::Invalid(e.to_string()))?;
    if domain.is_empty() {
        return Err(StoreError::Invalid(format!("url {url:?} has no host")));
    }
    if let Some(m) = store.media_list().find(|m| registrable_domain(&m.url).ok().as_deref() == Some(&domain)) {
        return Ok(m.media_id);
    }
    if let Some(m) = store.media_by_name(&domain) {
        return Ok(m.media_id);
    }
    store.add_media(&domain, &format!("http://{domain}/"), now.date_naive())
}

/// Whether a story's stored text and fields match `query` on their own,
/// evaluated over a one-story index.
pub fn matches_standalone(store: &Store, stories_id: u64, query: &Query) -> bool {
    let Some(fields) = store.index().fields(stories_id).cloned() else { return false };
    let text = store.story_text(stories_id).map_or("", |t| t.extracted_text.as_str());
    let mut scratch = PostingsIndex::new();
    scratch.index_story(fields, text);
    scratch.matches(stories_id, query)
}

fn in_range(store: &Store, state: &TopicState, stories_id: u64) -> bool {
    store.story(stories_id).is_some_and(|s| {
        let day = s.publish_date.date_naive();
        state.topic.start_date <= day && day <= state.topic.end_date
    })
}

fn media_allowed(store: &Store, state: &TopicState, media_id: u64) -> bool {
    let t = &state.topic;
    if t.seed_media.is_empty() && t.seed_collections.is_empty() {
        return true;
    }
    t.seed_media.contains(&media_id)
        || store.media(media_id).is_some_and(|m| !m.tags.is_disjoint(&t.seed_collections))
}

/// Adds a URL to the next round's queue unless it was already attempted.
pub fn enqueue(state: &mut TopicState, url: &str, from_in_range: bool, via: Via, linked_from: Option<u64>) {
    let Ok(key) = normalize_url(url) else { return };
    if state.attempted.contains(&key) {
        return;
    }
    let entry = state.queue.entry(key).or_insert_with(|| QueuedUrl {
        url: url.trim().to_string(),
        from_in_range,
        via,
        linked_from,
    });
    entry.from_in_range |= from_in_range;
    entry.via = entry.via.min(via);
    entry.linked_from = match (entry.linked_from, linked_from) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, b) => a.or(b),
    };
}

fn enqueue_outlinks(store: &Store, state: &mut TopicState, member: u64) {
    let from_in_range = in_range(store, state, member);
    let links = store.story_text(member).map(|t| t.links.clone()).unwrap_or_default();
    for link in links {
        enqueue(state, &link, from_in_range, Via::Spidered, Some(member));
    }
}

/// Round-0 membership: stories matching the seed query in the allowed media
/// and date range. The queue gets the seed URLs plus the members' outlinks.
pub fn seed_topic(store: &Store, state: &mut TopicState) -> Result<Vec<u64>, StoreError> {
    let query = parse_query(&state.topic.seed_query)?;
    let topics_id = state.topic.topics_id;
    let seeds: Vec<u64> = store
        .search(&query)
        .into_iter()
        .filter(|&id| {
            let s = store.story(id).expect("indexed story");
            media_allowed(store, state, s.media_id) && in_range(store, state, id)
        })
        .collect();
    for &id in &seeds {
        state.members.insert(id, TopicStory { topics_id, stories_id: id, discovered_round: 0, via: Via::IndexSeed });
        let s = store.story(id).expect("seed story");
        state.attempted.insert(s.normalized_url.clone());
        state.resolved.insert(s.normalized_url.clone(), id);
    }
    for url in state.topic.seed_urls.clone() {
        enqueue(state, &url, false, Via::UrlSeed, None);
    }
    for &id in &seeds {
        enqueue_outlinks(store, state, id);
    }
    Ok(seeds)
}

/// Recomputes member-to-member link edges from stored outlinks.
pub fn recompute_links(store: &Store, state: &mut TopicState) {
    let mut links = BTreeSet::new();
    for &source in state.members.keys() {
        let Some(text) = store.story_text(source) else { continue };
        for link in &text.links {
            let Ok(key) = normalize_url(link) else { continue };
            let target = state.resolved.get(&key).copied().or_else(|| store.story_by_normalized_url(&key));
            if let Some(target) = target {
                if target != source && state.members.contains_key(&target) {
                    links.insert((source, target));
                }
            }
        }
    }
    state.links = links;
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RoundReport {
    pub round: u32,
    pub attempted: usize,
    pub fetched: usize,
    pub failures: usize,
    pub added: Vec<u64>,
    /// URLs left queued because the fetch budget ran out.
    pub deferred: usize,
}

enum Plan {
    Existing(u64),
    Fetch(usize),
}

/// What goes into resolving fetched pages.
pub struct RoundContext<'a> {
    pub fetcher: &'a dyn Fetcher,
    pub text: &'a TextProcessor,
    pub workers: usize,
    pub now: DateTime<Utc>,
}

fn lock_read(store: &RwLock<Store>) -> std::sync::RwLockReadGuard<'_, Store> {
    store.read().unwrap_or_else(PoisonError::into_inner)
}

fn lock_write(store: &RwLock<Store>) -> std::sync::RwLockWriteGuard<'_, Store> {
    store.write().unwrap_or_else(PoisonError::into_inner)
}

/// Creates (or title-matches) the story for a fetched page and processes its text.
fn story_for_page(
    store: &mut Store,
    ctx: &RoundContext,
    q: &QueuedUrl,
    record: &FetchRecord,
) -> Result<u64, StoreError> {
    let extraction = extract_text(&record.body, &q.url);
    let media_id = media_for_hostname(store, &q.url, ctx.now)?;
    let fallback = q.linked_from.and_then(|id| store.story(id)).map_or(ctx.now, |s| s.publish_date);
    let item = FeedItem {
        url: Some(q.url.clone()),
        guid: None,
        title: Some(extraction.title_guess).filter(|t| !t.is_empty()),
        pub_date: Some(guess_date(&record.body, &q.url, fallback, ctx.now)),
        description: None,
    };
    let (id, created) = store.match_or_insert_story(&item, media_id, ctx.now)?;
    if created {
        ctx.text.process_story(store, id, TextSource::Html(&record.body))?;
    }
    Ok(id)
}

/// Runs spider round `round` on a topic and persists the new state.
pub fn spider_round(
    store: &RwLock<Store>,
    topics_id: u64,
    round: u32,
    ctx: &RoundContext,
) -> Result<RoundReport, StoreError> {
    let mut report = RoundReport { round, ..Default::default() };

    let (mut state, work, query) = {
        let store = lock_read(store);
        let mut state = store.topic(topics_id).ok_or(StoreError::UnknownTopic(topics_id))?.clone();
        let query = parse_query(&state.topic.seed_query)?;
        let queue = std::mem::take(&mut state.queue);
        let mut work = Vec::new();
        let mut fetch_urls = Vec::new();
        for (key, q) in queue {
            if state.attempted.contains(&key) {
                continue;
            }
            let plan = match store.story_by_normalized_url(&key) {
                Some(id) => Plan::Existing(id),
                None if state.fetches + fetch_urls.len() >= state.topic.fetch_budget => {
                    report.deferred += 1;
                    state.queue.insert(key, q);
                    continue;
                }
                None => {
                    fetch_urls.push(q.url.clone());
                    Plan::Fetch(fetch_urls.len() - 1)
                }
            };
            state.attempted.insert(key.clone());
            work.push((key, q, plan));
        }
        report.attempted = work.len();
        report.fetched = fetch_urls.len();
        (state, (work, fetch_urls), query)
    };

    let (work, fetch_urls) = work;
    let records = fetch_all(ctx.fetcher, &fetch_urls, ctx.now, ctx.workers);

    let mut store = lock_write(store);
    state.fetches += records.len();
    for (key, q, plan) in work {
        let id = match plan {
            Plan::Existing(id) => id,
            Plan::Fetch(i) => {
                let record = &records[i];
                if !record.is_success() {
                    state.failures.insert(key, record.describe_failure());
                    report.failures += 1;
                    continue;
                }
                match story_for_page(&mut store, ctx, &q, record) {
                    Ok(id) => id,
                    Err(e @ StoreError::Io(_)) => return Err(e),
                    Err(e) => {
                        state.failures.insert(key, e.to_string());
                        report.failures += 1;
                        continue;
                    }
                }
            }
        };
        state.resolved.insert(key, id);
        if state.is_member(id) {
            continue;
        }
        if matches_standalone(&store, id, &query) && (q.from_in_range || in_range(&store, &state, id)) {
            state
                .members
                .insert(id, TopicStory { topics_id, stories_id: id, discovered_round: round, via: q.via });
            report.added.push(id);
        }
    }
    for &id in &report.added {
        enqueue_outlinks(&store, &mut state, id);
    }
    recompute_links(&store, &mut state);
    state.rounds_completed = round;
    store.put_topic(state)?;
    store.sync()?;
    Ok(report)
}

pub struct SpiderOptions<'a> {
    pub fetcher: &'a dyn Fetcher,
    pub text: &'a TextProcessor,
    pub workers: usize,
    pub now: DateTime<Utc>,
    pub shares: Option<&'a dyn ShareProvider>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SpiderReport {
    pub seeded: Vec<u64>,
    pub rounds: Vec<RoundReport>,
    pub members: usize,
    pub links: usize,
}

/// Seeds (if new), spiders the remaining rounds, then rebuilds timespans and
/// share counts.
///
/// A topic that already completed is not spidered again; its metrics are
/// rebuilt. An interrupted run resumes after its last completed round.
pub fn run_spider(
    store: &RwLock<Store>,
    topics_id: u64,
    opts: &SpiderOptions,
    mut progress: impl FnMut(&RoundReport),
) -> Result<SpiderReport, StoreError> {
    let mut report = SpiderReport::default();
    let (start_round, max_rounds) = {
        let mut store = lock_write(store);
        let mut state = store.topic(topics_id).ok_or(StoreError::UnknownTopic(topics_id))?.clone();
        if state.status == SpiderStatus::Created {
            report.seeded = seed_topic(&store, &mut state)?;
            recompute_links(&store, &mut state);
            state.status = SpiderStatus::Running;
            store.put_topic(state.clone())?;
        }
        let start = if state.status == SpiderStatus::Completed { state.topic.max_rounds + 1 } else { state.rounds_completed + 1 };
        (start, state.topic.max_rounds)
    };
    let ctx = RoundContext { fetcher: opts.fetcher, text: opts.text, workers: opts.workers.max(1), now: opts.now };
    for round in start_round..=max_rounds {
        let queue_empty = lock_read(store).topic(topics_id).is_some_and(|t| t.queue.is_empty());
        if queue_empty {
            break;
        }
        let r = spider_round(store, topics_id, round, &ctx)?;
        progress(&r);
        report.rounds.push(r);
    }

    let mut store = lock_write(store);
    let mut state = store.topic(topics_id).ok_or(StoreError::UnknownTopic(topics_id))?.clone();
    recompute_links(&store, &mut state);
    state.rounds_completed = state.rounds_completed.max(max_rounds);
    state.status = SpiderStatus::Completed;
    assign_timespans(&mut store, &mut state);
    if let Some(provider) = opts.shares {
        state.shares = compute_shares(&store, &state, provider);
    }
    report.members = state.members.len();
    report.links = state.links.len();
    store.put_topic(state)?;
    store.sync()?;
    Ok(report)
}
