//! Polling due feeds and the ingest run loop.

use super::feed::parse_feed;
use crate::fetch::{fetch_all, Fetcher};
use crate::store::{FeedType, Store, StoreError};
use crate::textproc::{TextProcessor, TextSource};
use chrono::{DateTime, Utc};

/// What one poll cycle needs besides the store.
#[derive(Clone, Copy)]
pub struct Pipeline<'a> {
    pub fetcher: &'a dyn Fetcher,
    pub text: &'a TextProcessor,
    /// Concurrent fetches. Results are applied in a fixed order regardless.
    pub workers: usize,
}

impl<'a> Pipeline<'a> {
    pub fn new(fetcher: &'a dyn Fetcher) -> Self {
        Pipeline { fetcher, text: TextProcessor::shared(), workers: 1 }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers.max(1);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeedPoll {
    pub feeds_id: u64,
    pub new_stories: usize,
    pub status: u16,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TickReport {
    pub polls: Vec<FeedPoll>,
    pub diagnostics: Vec<String>,
}

impl TickReport {
    /// `(feeds_id, new_story_count)` per polled feed.
    pub fn counts(&self) -> Vec<(u64, usize)> {
        self.polls.iter().map(|p| (p.feeds_id, p.new_stories)).collect()
    }
}

/// Active syndicated feeds due at `now`, by id.
pub fn due_feeds(store: &Store, now: DateTime<Utc>) -> Vec<u64> {
    store
        .feeds()
        .filter(|f| f.active && f.feed_type == FeedType::Syndicated && f.next_poll_at <= now)
        .map(|f| f.feeds_id)
        .collect()
}

/// Earliest upcoming poll among active syndicated feeds.
pub fn next_due(store: &Store) -> Option<DateTime<Utc>> {
    store
        .feeds()
        .filter(|f| f.active && f.feed_type == FeedType::Syndicated)
        .map(|f| f.next_poll_at)
        .min()
}

/// Polls every due feed once.
///
/// Items are matched against the store in feed-id then document order. Each
/// new story's page is fetched and processed; if that fetch fails, the feed
/// description stands in. A failed or unparseable feed counts as "no new
/// story" for its backoff.
pub fn crawl_tick(store: &mut Store, pipeline: &Pipeline, now: DateTime<Utc>) -> Result<TickReport, StoreError> {
    let mut report = TickReport::default();
    let due = due_feeds(store, now);
    let urls: Vec<String> = due.iter().map(|id| store.feed(*id).expect("due feed").url.clone()).collect();
    let records = fetch_all(pipeline.fetcher, &urls, now, pipeline.workers);

    let mut created: Vec<(u64, String)> = Vec::new();
    for (&feeds_id, record) in due.iter().zip(&records) {
        let feed = store.feed(feeds_id).expect("due feed").clone();
        let mut new_stories = 0;
        if !record.is_success() {
            report.diagnostics.push(format!("feed {feeds_id} {}: {}", feed.url, record.describe_failure()));
        } else {
            match parse_feed(&record.body) {
                Err(e) => report.diagnostics.push(format!("feed {feeds_id} {}: {e}", feed.url)),
                Ok(parsed) => {
                    for d in parsed.dropped {
                        report.diagnostics.push(format!("feed {feeds_id}: {d}"));
                    }
                    for item in parsed.items {
                        match store.match_or_insert_story(&item, feed.media_id, now) {
                            Ok((id, true)) => {
                                new_stories += 1;
                                let fallback = item.description.or(item.title).unwrap_or_default();
                                created.push((id, fallback));
                            }
                            Ok((_, false)) => {}
                            Err(StoreError::RejectedItem(why)) => {
                                report.diagnostics.push(format!("feed {feeds_id}: item rejected: {why}"));
                            }
                            Err(e) => return Err(e),
                        }
                    }
                }
            }
        }
        let schedule = feed.schedule().after_poll(new_stories > 0, now);
        store.set_feed_schedule(feeds_id, schedule)?;
        report.polls.push(FeedPoll { feeds_id, new_stories, status: record.status });
    }

    let pages: Vec<String> = created.iter().map(|(id, _)| store.story(*id).expect("new story").url.clone()).collect();
    let records = fetch_all(pipeline.fetcher, &pages, now, pipeline.workers);
    for ((id, fallback), record) in created.iter().zip(&records) {
        let source = if record.is_success() {
            TextSource::Html(&record.body)
        } else {
            report.diagnostics.push(format!("story {id} {}: {}", record.url, record.describe_failure()));
            TextSource::Fragment(fallback)
        };
        pipeline.text.process_story(store, *id, source)?;
    }
    store.sync()?;
    Ok(report)
}

/// How the run loop advances time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clock {
    /// Jump straight to the next due poll. Deterministic.
    Simulated,
    /// Sleep until the next due poll.
    Wall,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub ticks: usize,
    pub polls: usize,
    pub new_stories: usize,
    pub diagnostics: Vec<String>,
}

/// Runs crawl ticks from `start` until no poll is due before `until`.
pub fn run_until(
    store: &mut Store,
    pipeline: &Pipeline,
    start: DateTime<Utc>,
    until: DateTime<Utc>,
    clock: Clock,
    mut on_tick: impl FnMut(DateTime<Utc>, &TickReport),
) -> Result<RunSummary, StoreError> {
    let mut summary = RunSummary::default();
    let mut now = start;
    loop {
        let report = crawl_tick(store, pipeline, now)?;
        if !report.polls.is_empty() {
            summary.ticks += 1;
            summary.polls += report.polls.len();
            summary.new_stories += report.polls.iter().map(|p| p.new_stories).sum::<usize>();
            on_tick(now, &report);
        }
        summary.diagnostics.extend(report.diagnostics);
        let Some(next) = next_due(store) else { break };
        if next > until {
            break;
        }
        now = match clock {
            Clock::Simulated => next.max(now),
            Clock::Wall => {
                if let Ok(wait) = (next - Utc::now()).to_std() {
                    std::thread::sleep(wait);
                }
                Utc::now()
            }
        };
    }
    Ok(summary)
}
