//! Positional inverted index with per-story metadata, and set evaluation of
//! [`Query`] trees over it.

use super::ast::{FieldFilter, PublishDate, Query};
use super::tokenize::tokenize;
use crate::calendar::{month_start, week_start};
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use chrono::{Datelike, NaiveDateTime};
use core::ops::Bound;

/// Metadata a story exposes to field filters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoryFields {
    pub stories_id: u64,
    pub media_id: u64,
    pub publish_date: NaiveDateTime,
    pub language: String,
    pub story_tags: BTreeSet<u64>,
    pub media_tags: BTreeSet<u64>,
    pub timespans: BTreeSet<u64>,
}

impl StoryFields {
    pub fn new(stories_id: u64, media_id: u64, publish_date: NaiveDateTime) -> Self {
        StoryFields {
            stories_id,
            media_id,
            publish_date,
            language: String::from("und"),
            story_tags: BTreeSet::new(),
            media_tags: BTreeSet::new(),
            timespans: BTreeSet::new(),
        }
    }

    /// Whether this story satisfies a field filter.
    pub fn matches(&self, filter: &FieldFilter) -> bool {
        let day = self.publish_date.date();
        match filter {
            FieldFilter::StoryId(id) => self.stories_id == *id,
            FieldFilter::MediaId(id) => self.media_id == *id,
            FieldFilter::PublishDate(PublishDate::Instant(t)) => self.publish_date == *t,
            FieldFilter::PublishDate(PublishDate::Day(d)) | FieldFilter::PublishDay(d) => day == *d,
            FieldFilter::PublishWeek(start) => week_start(day) == *start,
            FieldFilter::PublishMonth(start) => month_start(day) == *start,
            FieldFilter::PublishYear(y) => day.year() == *y,
            FieldFilter::TagsIdStories(t) => self.story_tags.contains(t),
            FieldFilter::TagsIdMedia(t) => self.media_tags.contains(t),
            FieldFilter::TimespansId(t) => self.timespans.contains(t),
            FieldFilter::Language(l) => self.language == *l,
        }
    }
}

#[derive(Debug, Clone)]
struct IndexedStory {
    fields: StoryFields,
    positions: BTreeMap<String, Vec<u32>>,
}

/// Token → sorted story ids, plus positions and fields per story.
#[derive(Debug, Clone, Default)]
pub struct PostingsIndex {
    postings: BTreeMap<String, Vec<u64>>,
    stories: BTreeMap<u64, IndexedStory>,
}

impl PostingsIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.stories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stories.is_empty()
    }

    pub fn contains(&self, stories_id: u64) -> bool {
        self.stories.contains_key(&stories_id)
    }

    /// Adds a story. Returns `false`, leaving the index untouched, if the
    /// story id is already indexed.
    pub fn index_story(&mut self, fields: StoryFields, text: &str) -> bool {
        let id = fields.stories_id;
        if self.stories.contains_key(&id) {
            return false;
        }
        let mut positions: BTreeMap<String, Vec<u32>> = BTreeMap::new();
        for (pos, token) in tokenize(text).into_iter().enumerate() {
            positions.entry(token).or_default().push(pos as u32);
        }
        for token in positions.keys() {
            let list = self.postings.entry(token.clone()).or_default();
            // Ids usually arrive in ascending order; fall back to an insert otherwise.
            match list.last() {
                Some(&last) if last > id => {
                    if let Err(at) = list.binary_search(&id) {
                        list.insert(at, id);
                    }
                }
                _ => list.push(id),
            }
        }
        self.stories.insert(id, IndexedStory { fields, positions });
        true
    }

    /// Removes a story and its postings. Returns its fields if it was indexed.
    pub fn remove_story(&mut self, stories_id: u64) -> Option<StoryFields> {
        let story = self.stories.remove(&stories_id)?;
        for token in story.positions.keys() {
            if let Some(list) = self.postings.get_mut(token) {
                if let Ok(at) = list.binary_search(&stories_id) {
                    list.remove(at);
                }
                if list.is_empty() {
                    self.postings.remove(token);
                }
            }
        }
        Some(story.fields)
    }

    /// Replaces a story's text, keeping or replacing its fields.
    pub fn reindex_story(&mut self, fields: StoryFields, text: &str) {
        self.remove_story(fields.stories_id);
        self.index_story(fields, text);
    }

    pub fn fields(&self, stories_id: u64) -> Option<&StoryFields> {
        self.stories.get(&stories_id).map(|s| &s.fields)
    }

    /// Mutable access to the field values of an indexed story (tags and
    /// timespans change after indexing).
    pub fn fields_mut(&mut self, stories_id: u64) -> Option<&mut StoryFields> {
        self.stories.get_mut(&stories_id).map(|s| &mut s.fields)
    }

    /// Distinct tokens of a story with their occurrence counts.
    pub fn token_counts(&self, stories_id: u64) -> impl Iterator<Item = (&str, usize)> {
        self.stories
            .get(&stories_id)
            .into_iter()
            .flat_map(|s| s.positions.iter().map(|(t, p)| (t.as_str(), p.len())))
    }

    pub fn story_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.stories.keys().copied()
    }

    /// Ids of the stories containing `token`, ascending.
    pub fn postings(&self, token: &str) -> &[u64] {
        self.postings.get(token).map_or(&[], Vec::as_slice)
    }

    /// Evaluates a query with set semantics. The result is ascending and
    /// duplicate-free. Negation complements against all indexed stories.
    pub fn search(&self, query: &Query) -> Vec<u64> {
        match query {
            Query::Term(t) => self.postings(t).to_vec(),
            Query::Prefix(stem) => {
                let mut ids = BTreeSet::new();
                for (_, list) in self
                    .postings
                    .range::<str, _>((Bound::Included(stem.as_str()), Bound::Unbounded))
                    .take_while(|(token, _)| token.starts_with(stem.as_str()))
                {
                    ids.extend(list.iter().copied());
                }
                ids.into_iter().collect()
            }
            Query::Phrase { tokens, proximity } => self.phrase(tokens, *proximity),
            Query::And(children) => {
                let (negative, positive): (Vec<&Query>, Vec<&Query>) =
                    children.iter().partition(|c| matches!(c, Query::Not(_)));
                let mut acc: Option<Vec<u64>> = None;
                for child in positive {
                    let ids = self.search(child);
                    acc = Some(match acc {
                        None => ids,
                        Some(prev) => intersect(&prev, &ids),
                    });
                    if acc.as_ref().is_some_and(Vec::is_empty) {
                        return Vec::new();
                    }
                }
                let mut acc = acc.unwrap_or_else(|| self.story_ids().collect());
                for child in negative {
                    if let Query::Not(inner) = child {
                        acc = difference(&acc, &self.search(inner));
                    }
                }
                acc
            }
            Query::Or(children) => {
                let mut ids = BTreeSet::new();
                for child in children {
                    ids.extend(self.search(child));
                }
                ids.into_iter().collect()
            }
            Query::Not(inner) => {
                let all: Vec<u64> = self.story_ids().collect();
                difference(&all, &self.search(inner))
            }
            Query::Field(filter) => self
                .stories
                .iter()
                .filter(|(_, s)| s.fields.matches(filter))
                .map(|(id, _)| *id)
                .collect(),
        }
    }

    /// Whether a single indexed story satisfies `query`.
    pub fn matches(&self, stories_id: u64, query: &Query) -> bool {
        self.contains(stories_id) && self.search(query).binary_search(&stories_id).is_ok()
    }

    fn phrase(&self, tokens: &[String], proximity: Option<u32>) -> Vec<u64> {
        let Some(first) = tokens.first() else {
            return Vec::new();
        };
        let mut candidates = self.postings(first).to_vec();
        for t in &tokens[1..] {
            candidates = intersect(&candidates, self.postings(t));
        }
        candidates.retain(|id| {
            let story = &self.stories[id];
            match proximity {
                None => adjacent(story, tokens),
                Some(slop) => within_window(story, tokens, tokens.len() + slop as usize),
            }
        });
        candidates
    }
}

fn adjacent(story: &IndexedStory, tokens: &[String]) -> bool {
    let lists: Vec<&Vec<u32>> = tokens.iter().map(|t| &story.positions[t]).collect();
    lists[0].iter().any(|&start| {
        lists
            .iter()
            .enumerate()
            .skip(1)
            .all(|(offset, list)| list.binary_search(&(start + offset as u32)).is_ok())
    })
}

/// True if some run of at most `window` consecutive positions holds every
/// phrase token (with multiplicity), in any order.
fn within_window(story: &IndexedStory, tokens: &[String], window: usize) -> bool {
    let mut distinct: Vec<(&str, usize)> = Vec::new();
    for t in tokens {
        match distinct.iter_mut().find(|(d, _)| *d == t.as_str()) {
            Some((_, need)) => *need += 1,
            None => distinct.push((t.as_str(), 1)),
        }
    }
    let mut hits: Vec<(u32, usize)> = Vec::new();
    for (slot, (t, _)) in distinct.iter().enumerate() {
        hits.extend(story.positions[*t].iter().map(|&p| (p, slot)));
    }
    hits.sort_unstable();

    let mut have = alloc::vec![0usize; distinct.len()];
    let mut satisfied = 0usize;
    let mut left = 0usize;
    for right in 0..hits.len() {
        let slot = hits[right].1;
        have[slot] += 1;
        if have[slot] == distinct[slot].1 {
            satisfied += 1;
        }
        while satisfied == distinct.len() {
            let span = (hits[right].0 - hits[left].0) as usize + 1;
            if span <= window {
                return true;
            }
            let drop = hits[left].1;
            if have[drop] == distinct[drop].1 {
                satisfied -= 1;
            }
            have[drop] -= 1;
            left += 1;
        }
    }
    false
}

pub(crate) fn intersect(a: &[u64], b: &[u64]) -> Vec<u64> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            core::cmp::Ordering::Less => i += 1,
            core::cmp::Ordering::Greater => j += 1,
            core::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

pub(crate) fn difference(a: &[u64], b: &[u64]) -> Vec<u64> {
    let mut j = 0;
    let mut out = Vec::with_capacity(a.len());
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j >= b.len() || b[j] != x {
            out.push(x);
        }
    }
    out
}
