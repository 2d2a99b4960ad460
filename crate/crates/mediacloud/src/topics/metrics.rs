//! Link-economy metrics, share counts, timespans and subtopics.

use crate::store::{Period, Store, Timespan, TopicState};
use crate::urlnorm::normalize_or_raw;
use chrono::NaiveDate;
use mediacloud_core::calendar::{month_end, month_start, week_start};
use mediacloud_core::links::{self, InlinkCounts, StoryEdge};
use mediacloud_core::query::{parse_query, ParseError};
use std::collections::{BTreeMap, BTreeSet};

pub fn edges(state: &TopicState) -> Vec<StoryEdge> {
    state.links.iter().map(|&(source, target)| StoryEdge { source, target }).collect()
}

/// Member story → its medium.
pub fn media_of(store: &Store, state: &TopicState) -> BTreeMap<u64, u64> {
    state.members.keys().filter_map(|&id| store.story(id).map(|s| (id, s.media_id))).collect()
}

pub fn inlink_counts(store: &Store, state: &TopicState) -> InlinkCounts {
    links::inlink_counts(&edges(state), &media_of(store, state))
}

/// `(source media, ref media) → number of story links`.
pub fn medium_links(store: &Store, state: &TopicState) -> BTreeMap<(u64, u64), u64> {
    links::medium_links(&edges(state), &media_of(store, state))
}

/// Source of per-URL share counts.
pub trait ShareProvider: Send + Sync {
    /// Shares of a URL. A URL the provider does not know has zero shares.
    fn share_count(&self, url: &str) -> Result<u64, String>;
}

/// Share counts from a fixed table keyed by normalized URL.
#[derive(Debug, Clone, Default)]
pub struct TableShares {
    counts: BTreeMap<String, u64>,
}

impl TableShares {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, url: &str, count: u64) {
        self.counts.insert(normalize_or_raw(url), count);
    }

    /// Reads `url<TAB>count` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut t = TableShares::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (url, count) = line.split_once('\t').ok_or_else(|| format!("line {}: expected url<TAB>count", i + 1))?;
            let count = count.trim().parse().map_err(|_| format!("line {}: bad count {count:?}", i + 1))?;
            t.insert(url, count);
        }
        Ok(t)
    }
}

impl ShareProvider for TableShares {
    fn share_count(&self, url: &str) -> Result<u64, String> {
        Ok(self.counts.get(&normalize_or_raw(url)).copied().unwrap_or(0))
    }
}

/// Share count per member; `None` where the provider failed.
pub fn compute_shares(store: &Store, state: &TopicState, provider: &dyn ShareProvider) -> BTreeMap<u64, Option<u64>> {
    state
        .members
        .keys()
        .filter_map(|&id| store.story(id).map(|s| (id, provider.share_count(&s.url).ok())))
        .collect()
}

/// Sum of story share counts per medium. A medium is `None` only when
/// every one of its stories is; stories without a count add nothing.
pub fn media_shares(store: &Store, state: &TopicState) -> BTreeMap<u64, Option<u64>> {
    let mut out: BTreeMap<u64, Option<u64>> = BTreeMap::new();
    for (&id, &count) in &state.shares {
        let Some(s) = store.story(id) else { continue };
        let slot = out.entry(s.media_id).or_insert(None);
        if let Some(c) = count {
            *slot = Some(slot.unwrap_or(0) + c);
        }
    }
    out
}

/// A timespan before ids are assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpanMembers {
    pub period: Period,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub story_ids: BTreeSet<u64>,
}

/// The overall span, then every Sunday-to-Saturday week and every calendar
/// month overlapping the topic range.
///
/// A member belongs to a span if it was published inside it, or if a member
/// published inside it links to it.
pub fn build_timespans(store: &Store, state: &TopicState) -> Vec<SpanMembers> {
    let (start, end) = (state.topic.start_date, state.topic.end_date);
    let mut bounds = vec![(Period::Overall, start, end)];
    let mut w = week_start(start);
    while w <= end {
        bounds.push((Period::Weekly, w, w + chrono::TimeDelta::days(6)));
        w += chrono::TimeDelta::days(7);
    }
    let mut m = month_start(start);
    while m <= end {
        let last = month_end(m);
        bounds.push((Period::Monthly, m, last));
        m = last.succ_opt().expect("date in range");
    }
    let day: BTreeMap<u64, NaiveDate> = state
        .members
        .keys()
        .filter_map(|&id| store.story(id).map(|s| (id, s.publish_date.date_naive())))
        .collect();
    bounds
        .into_iter()
        .map(|(period, start, end)| {
            let inside = |id: &u64| day.get(id).is_some_and(|d| start <= *d && *d <= end);
            let mut story_ids: BTreeSet<u64> = day.keys().copied().filter(inside).collect();
            for (source, target) in &state.links {
                if inside(source) && day.contains_key(target) {
                    story_ids.insert(*target);
                }
            }
            SpanMembers { period, start, end, story_ids }
        })
        .collect()
}

/// Rebuilds a topic's timespans, keeping the ids of spans that already exist.
pub fn assign_timespans(store: &mut Store, state: &mut TopicState) {
    let spans = build_timespans(store, state);
    let existing: BTreeMap<(Period, NaiveDate), u64> =
        state.timespans.iter().map(|t| ((t.period, t.start), t.timespans_id)).collect();
    let missing = spans.iter().filter(|s| !existing.contains_key(&(s.period, s.start))).count() as u64;
    let mut next = if missing > 0 { store.reserve_timespan_ids(missing) } else { 0 };
    state.timespans = spans
        .into_iter()
        .map(|s| {
            let timespans_id = existing.get(&(s.period, s.start)).copied().unwrap_or_else(|| {
                next += 1;
                next - 1
            });
            Timespan {
                timespans_id,
                topics_id: state.topic.topics_id,
                period: s.period,
                start: s.start,
                end: s.end,
                story_ids: s.story_ids,
            }
        })
        .collect();
}

/// Members matching `filter_query`.
pub fn subtopic(store: &Store, state: &TopicState, filter_query: &str) -> Result<BTreeSet<u64>, ParseError> {
    let q = parse_query(filter_query)?;
    Ok(store.search(&q).into_iter().filter(|id| state.is_member(*id)).collect())
}
