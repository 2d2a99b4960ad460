//! The data model and all deduplication logic.
//!
//! State lives in memory. When opened on a file, every mutation is first
//! appended to a JSON-lines journal, then applied; opening replays the
//! journal. Derived structures (URL and title lookups, the sentence
//! registry, the search index) are rebuilt during replay.

mod csvio;
mod journal;
mod model;

pub use csvio::{export_feeds, export_media, import_feeds, import_media, CsvSummary};
pub use model::*;

use crate::urlnorm::normalize_or_raw;
use chrono::{DateTime, NaiveDate, TimeDelta, Utc};
use journal::{Event, Journal};
use mediacloud_core::query::{parse_query, ParseError, PostingsIndex, Query, StoryFields};
use mediacloud_core::{normalize_title, PollSchedule};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

/// Title matches only join stories published this close together.
pub const TITLE_MATCH_WINDOW: TimeDelta = TimeDelta::days(7);

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("journal line {line}: {message}")]
    Journal { line: usize, message: String },
    #[error("unknown media id {0}")]
    UnknownMedia(u64),
    #[error("unknown story id {0}")]
    UnknownStory(u64),
    #[error("unknown topic id {0}")]
    UnknownTopic(u64),
    #[error("unknown tag id {0}")]
    UnknownTag(u64),
    #[error("unknown tag target {0:?}")]
    UnknownTarget(TagTarget),
    #[error("{kind} name {name:?} already exists")]
    DuplicateName { kind: &'static str, name: String },
    #[error("{kind} id {id} already exists")]
    DuplicateId { kind: &'static str, id: u64 },
    #[error("rejected feed item: {0}")]
    RejectedItem(&'static str),
    #[error("invalid {0}")]
    Invalid(String),
    #[error("query: {0}")]
    Query(#[from] ParseError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Topic definition as submitted, before an id is assigned.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicSpec {
    pub name: String,
    pub seed_query: String,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    pub seed_media: BTreeSet<u64>,
    pub seed_collections: BTreeSet<u64>,
    pub seed_urls: Vec<String>,
    pub max_rounds: u32,
    pub fetch_budget: usize,
}

impl TopicSpec {
    pub fn new(name: &str, seed_query: &str, start_date: NaiveDate, end_date: NaiveDate) -> Self {
        TopicSpec {
            name: name.to_string(),
            seed_query: seed_query.to_string(),
            start_date,
            end_date,
            seed_media: BTreeSet::new(),
            seed_collections: BTreeSet::new(),
            seed_urls: Vec::new(),
            max_rounds: 15,
            fetch_budget: 10_000,
        }
    }
}

#[derive(Debug, Default)]
struct Ids {
    media: u64,
    feeds: u64,
    stories: u64,
    tag_sets: u64,
    tags: u64,
    topics: u64,
    timespans: u64,
}

#[derive(Debug, Default)]
pub struct Store {
    media: BTreeMap<u64, MediaSource>,
    feeds: BTreeMap<u64, Feed>,
    stories: BTreeMap<u64, Story>,
    texts: BTreeMap<u64, StoryText>,
    tag_sets: BTreeMap<u64, TagSet>,
    tags: BTreeMap<u64, Tag>,
    topics: BTreeMap<u64, TopicState>,
    ids: Ids,
    media_by_name: HashMap<String, u64>,
    stories_by_media: BTreeMap<u64, BTreeSet<u64>>,
    by_url: HashMap<String, u64>,
    by_title: HashMap<(u64, String), Vec<u64>>,
    sentence_owner: HashMap<(u64, NaiveDate, String), u64>,
    tag_by_name: HashMap<(u64, String), u64>,
    tag_set_by_name: HashMap<String, u64>,
    index: PostingsIndex,
    journal: Option<Journal>,
}

impl Store {
    /// A store without a backing file.
    pub fn in_memory() -> Self {
        Store::default()
    }

    /// Opens (creating if needed) a journal file and replays it.
    pub fn open(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let (journal, events) = Journal::open(path.as_ref())?;
        let mut store = Store::default();
        for event in events {
            store.apply(event);
        }
        store.journal = Some(journal);
        Ok(store)
    }

    /// Forces journal contents to disk.
    pub fn sync(&mut self) -> Result<(), StoreError> {
        if let Some(j) = &mut self.journal {
            j.sync()?;
        }
        Ok(())
    }

    fn commit(&mut self, event: Event) -> Result<(), StoreError> {
        if let Some(j) = &mut self.journal {
            j.append(&event)?;
        }
        self.apply(event);
        Ok(())
    }

    fn apply(&mut self, event: Event) {
        match event {
            Event::Media(m) => self.apply_media(m),
            Event::Feed(f) => {
                self.ids.feeds = self.ids.feeds.max(f.feeds_id);
                self.feeds.insert(f.feeds_id, f);
            }
            Event::Story(s) => self.apply_story(s),
            Event::Text { text, language } => self.apply_text(text, language),
            Event::TagSet(ts) => {
                self.ids.tag_sets = self.ids.tag_sets.max(ts.tag_sets_id);
                self.tag_set_by_name.insert(ts.name.clone(), ts.tag_sets_id);
                self.tag_sets.insert(ts.tag_sets_id, ts);
            }
            Event::Tag(t) => {
                self.ids.tags = self.ids.tags.max(t.tags_id);
                self.tag_by_name.insert((t.tag_sets_id, t.tag.clone()), t.tags_id);
                self.tags.insert(t.tags_id, t);
            }
            Event::Topic(state) => self.apply_topic(*state),
        }
    }

    fn apply_media(&mut self, m: MediaSource) {
        self.ids.media = self.ids.media.max(m.media_id);
        if let Some(old) = self.media.get(&m.media_id) {
            self.media_by_name.remove(&old.name);
        }
        self.media_by_name.insert(m.name.clone(), m.media_id);
        for id in self.stories_by_media.get(&m.media_id).into_iter().flatten() {
            if let Some(f) = self.index.fields_mut(*id) {
                f.media_tags = m.tags.clone();
            }
        }
        self.media.insert(m.media_id, m);
    }

    fn apply_story(&mut self, s: Story) {
        let id = s.stories_id;
        self.ids.stories = self.ids.stories.max(id);
        self.stories_by_media.entry(s.media_id).or_default().insert(id);
        self.by_url.entry(s.normalized_url.clone()).or_insert(id);
        if !s.guid.is_empty() {
            self.by_url.entry(normalize_or_raw(&s.guid)).or_insert(id);
        }
        if !s.normalized_title.is_empty() {
            let list = self.by_title.entry((s.media_id, s.normalized_title.clone())).or_default();
            if !list.contains(&id) {
                list.push(id);
            }
        }
        let fields = self.fields_for(&s);
        match self.index.fields_mut(id) {
            Some(f) => *f = fields,
            None => {
                self.index.index_story(fields, "");
            }
        }
        self.stories.insert(id, s);
    }

    fn fields_for(&self, s: &Story) -> StoryFields {
        let mut f = StoryFields::new(s.stories_id, s.media_id, s.publish_date.naive_utc());
        f.language = s.language.clone();
        f.story_tags = s.tags.clone();
        f.media_tags = self.media.get(&s.media_id).map(|m| m.tags.clone()).unwrap_or_default();
        if let Some(old) = self.index.fields(s.stories_id) {
            f.timespans = old.timespans.clone();
        }
        f
    }

    fn apply_text(&mut self, text: StoryText, language: String) {
        let id = text.stories_id;
        let Some(story) = self.stories.get_mut(&id) else { return };
        story.language = language;
        let story = story.clone();
        let day = story.publish_date.date_naive();
        for s in &text.sentences {
            self.sentence_owner.entry((story.media_id, day, s.clone())).or_insert(id);
        }
        let fields = self.fields_for(&story);
        self.index.reindex_story(fields, &text.extracted_text);
        self.stories.insert(id, story);
        self.texts.insert(id, text);
    }

    fn apply_topic(&mut self, state: TopicState) {
        let id = state.topic.topics_id;
        self.ids.topics = self.ids.topics.max(id);
        if let Some(old) = self.topics.get(&id) {
            for span in &old.timespans {
                for s in &span.story_ids {
                    if let Some(f) = self.index.fields_mut(*s) {
                        f.timespans.remove(&span.timespans_id);
                    }
                }
            }
        }
        for span in &state.timespans {
            self.ids.timespans = self.ids.timespans.max(span.timespans_id);
            for s in &span.story_ids {
                if let Some(f) = self.index.fields_mut(*s) {
                    f.timespans.insert(span.timespans_id);
                }
            }
        }
        self.topics.insert(id, state);
    }

    // ---- media and feeds ----

    pub fn add_media(&mut self, name: &str, url: &str, start_date: NaiveDate) -> Result<u64, StoreError> {
        let id = self.ids.media + 1;
        self.insert_media(MediaSource {
            media_id: id,
            name: name.trim().to_string(),
            url: url.trim().to_string(),
            start_date,
            tags: BTreeSet::new(),
        })?;
        Ok(id)
    }

    /// Inserts a medium with a caller-chosen id.
    pub fn insert_media(&mut self, m: MediaSource) -> Result<(), StoreError> {
        if m.media_id == 0 {
            return Err(StoreError::Invalid("media_id 0".into()));
        }
        if m.name.is_empty() {
            return Err(StoreError::Invalid("empty media name".into()));
        }
        if m.url.is_empty() {
            return Err(StoreError::Invalid("empty media url".into()));
        }
        if self.media.contains_key(&m.media_id) {
            return Err(StoreError::DuplicateId { kind: "media", id: m.media_id });
        }
        if self.media_by_name.contains_key(&m.name) {
            return Err(StoreError::DuplicateName { kind: "media", name: m.name });
        }
        self.commit(Event::Media(m))
    }

    pub fn media(&self, id: u64) -> Option<&MediaSource> {
        self.media.get(&id)
    }

    pub fn media_list(&self) -> impl Iterator<Item = &MediaSource> {
        self.media.values()
    }

    pub fn media_by_name(&self, name: &str) -> Option<&MediaSource> {
        self.media_by_name.get(name).and_then(|id| self.media.get(id))
    }

    /// A new syndicated or virtual feed whose first poll is five minutes after `now`.
    pub fn add_feed(
        &mut self,
        media_id: u64,
        url: &str,
        feed_type: FeedType,
        now: DateTime<Utc>,
    ) -> Result<u64, StoreError> {
        let schedule = PollSchedule::new(now);
        let feed = Feed {
            feeds_id: self.ids.feeds + 1,
            media_id,
            url: url.trim().to_string(),
            active: true,
            feed_type,
            poll_interval: schedule.interval.minutes(),
            next_poll_at: schedule.next_poll_at,
        };
        let id = feed.feeds_id;
        self.insert_feed(feed)?;
        Ok(id)
    }

    pub fn insert_feed(&mut self, feed: Feed) -> Result<(), StoreError> {
        if !self.media.contains_key(&feed.media_id) {
            return Err(StoreError::UnknownMedia(feed.media_id));
        }
        if feed.feeds_id == 0 || self.feeds.contains_key(&feed.feeds_id) {
            return Err(StoreError::DuplicateId { kind: "feed", id: feed.feeds_id });
        }
        if feed.url.is_empty() {
            return Err(StoreError::Invalid("empty feed url".into()));
        }
        self.commit(Event::Feed(feed))
    }

    pub fn feed(&self, id: u64) -> Option<&Feed> {
        self.feeds.get(&id)
    }

    pub fn feeds(&self) -> impl Iterator<Item = &Feed> {
        self.feeds.values()
    }

    pub fn feeds_for_media(&self, media_id: u64) -> impl Iterator<Item = &Feed> {
        self.feeds.values().filter(move |f| f.media_id == media_id)
    }

    pub fn set_feed_schedule(&mut self, feeds_id: u64, schedule: PollSchedule) -> Result<(), StoreError> {
        let mut feed = self.feeds.get(&feeds_id).cloned().ok_or(StoreError::Invalid(format!("feed {feeds_id}")))?;
        feed.set_schedule(schedule);
        self.commit(Event::Feed(feed))
    }

    // ---- stories ----

    /// Finds the stored story an item refers to, or inserts it.
    ///
    /// Matching tries, in order: the item URL and GUID (normalized) against
    /// stored story URLs and GUIDs, then the normalized title among stories
    /// of the same medium published within seven days.
    pub fn match_or_insert_story(
        &mut self,
        item: &FeedItem,
        media_id: u64,
        collect_date: DateTime<Utc>,
    ) -> Result<(u64, bool), StoreError> {
        if !self.media.contains_key(&media_id) {
            return Err(StoreError::UnknownMedia(media_id));
        }
        let clean = |s: &Option<String>| s.as_deref().map(str::trim).filter(|s| !s.is_empty()).map(str::to_string);
        let (url, guid, title) = (clean(&item.url), clean(&item.guid), clean(&item.title));
        if url.is_none() && guid.is_none() && title.is_none() {
            return Err(StoreError::RejectedItem("no url, guid or title"));
        }
        let publish_date = item.pub_date.unwrap_or(collect_date);
        if let Some(id) = self.find_story(url.as_deref(), guid.as_deref(), title.as_deref(), media_id, publish_date) {
            return Ok((id, false));
        }
        let Some(link) = url.clone().or_else(|| guid.clone()) else {
            return Err(StoreError::RejectedItem("unmatched item has no url or guid"));
        };
        let title = title.unwrap_or_default();
        let story = Story {
            stories_id: self.ids.stories + 1,
            media_id,
            normalized_title: normalize_title(&title),
            title,
            publish_date,
            collect_date,
            normalized_url: normalize_or_raw(&link),
            url: link.clone(),
            guid: guid.unwrap_or(link),
            language: mediacloud_core::text::UNDETERMINED.to_string(),
            tags: BTreeSet::new(),
        };
        let id = story.stories_id;
        self.commit(Event::Story(story))?;
        Ok((id, true))
    }

    /// The matching rule of [`match_or_insert_story`](Self::match_or_insert_story) without the insert.
    pub fn find_story(
        &self,
        url: Option<&str>,
        guid: Option<&str>,
        title: Option<&str>,
        media_id: u64,
        publish_date: DateTime<Utc>,
    ) -> Option<u64> {
        for key in [url, guid].into_iter().flatten() {
            if let Some(&id) = self.by_url.get(&normalize_or_raw(key)) {
                return Some(id);
            }
        }
        let normalized = normalize_title(title?);
        if normalized.is_empty() {
            return None;
        }
        self.by_title.get(&(media_id, normalized))?.iter().copied().find(|id| {
            let other = self.stories[id].publish_date;
            (other - publish_date).abs() <= TITLE_MATCH_WINDOW
        })
    }

    /// Story id whose URL or GUID normalizes to `normalized`.
    pub fn story_by_normalized_url(&self, normalized: &str) -> Option<u64> {
        self.by_url.get(normalized).copied()
    }

    pub fn story(&self, id: u64) -> Option<&Story> {
        self.stories.get(&id)
    }

    pub fn stories(&self) -> impl Iterator<Item = &Story> {
        self.stories.values()
    }

    pub fn story_count(&self) -> usize {
        self.stories.len()
    }

    pub fn stories_of_media(&self, media_id: u64) -> impl Iterator<Item = u64> + '_ {
        self.stories_by_media.get(&media_id).into_iter().flatten().copied()
    }

    pub fn story_text(&self, id: u64) -> Option<&StoryText> {
        self.texts.get(&id)
    }

    /// Owner of a sentence already stored for (medium, day).
    pub fn sentence_owner(&self, media_id: u64, day: NaiveDate, sentence: &str) -> Option<u64> {
        self.sentence_owner.get(&(media_id, day, sentence.to_string())).copied()
    }

    /// Stores processed text and the detected language, and reindexes the story.
    pub fn set_story_text(&mut self, text: StoryText, language: &str) -> Result<(), StoreError> {
        if !self.stories.contains_key(&text.stories_id) {
            return Err(StoreError::UnknownStory(text.stories_id));
        }
        if self.texts.get(&text.stories_id) == Some(&text)
            && self.stories[&text.stories_id].language == language
        {
            return Ok(());
        }
        self.commit(Event::Text { text, language: language.to_string() })
    }

    // ---- tags ----

    pub fn upsert_tag_set(&mut self, name: &str, label: &str, description: &str) -> Result<u64, StoreError> {
        let name = name.trim();
        if name.is_empty() {
            return Err(StoreError::Invalid("empty tag set name".into()));
        }
        if let Some(&id) = self.tag_set_by_name.get(name) {
            return Ok(id);
        }
        let ts = TagSet {
            tag_sets_id: self.ids.tag_sets + 1,
            name: name.to_string(),
            label: label.to_string(),
            description: description.to_string(),
        };
        let id = ts.tag_sets_id;
        self.commit(Event::TagSet(ts))?;
        Ok(id)
    }

    /// Returns the id of tag `tag_name` in set `tag_set_name`, creating
    /// either if missing. Existing tags keep their labels.
    pub fn upsert_tag(
        &mut self,
        tag_set_name: &str,
        tag_name: &str,
        label: &str,
        description: &str,
    ) -> Result<u64, StoreError> {
        let tag_name = tag_name.trim();
        if tag_name.is_empty() {
            return Err(StoreError::Invalid("empty tag name".into()));
        }
        let set = self.upsert_tag_set(tag_set_name, tag_set_name, "")?;
        if let Some(&id) = self.tag_by_name.get(&(set, tag_name.to_string())) {
            return Ok(id);
        }
        let tag = Tag {
            tags_id: self.ids.tags + 1,
            tag_sets_id: set,
            tag: tag_name.to_string(),
            label: if label.is_empty() { tag_name.to_string() } else { label.to_string() },
            description: description.to_string(),
        };
        let id = tag.tags_id;
        self.commit(Event::Tag(tag))?;
        Ok(id)
    }

    /// Attaches a tag. Attaching it again is a no-op.
    pub fn attach_tag(&mut self, target: TagTarget, tags_id: u64) -> Result<(), StoreError> {
        if !self.tags.contains_key(&tags_id) {
            return Err(StoreError::UnknownTag(tags_id));
        }
        match target {
            TagTarget::Story(id) => {
                let mut s = self.stories.get(&id).cloned().ok_or(StoreError::UnknownTarget(target))?;
                if s.tags.insert(tags_id) {
                    self.commit(Event::Story(s))?;
                }
            }
            TagTarget::Media(id) => {
                let mut m = self.media.get(&id).cloned().ok_or(StoreError::UnknownTarget(target))?;
                if m.tags.insert(tags_id) {
                    self.commit(Event::Media(m))?;
                }
            }
        }
        Ok(())
    }

    pub fn tag(&self, id: u64) -> Option<&Tag> {
        self.tags.get(&id)
    }

    pub fn tags(&self) -> impl Iterator<Item = &Tag> {
        self.tags.values()
    }

    pub fn tag_sets(&self) -> impl Iterator<Item = &TagSet> {
        self.tag_sets.values()
    }

    // ---- topics ----

    pub fn create_topic(&mut self, spec: TopicSpec) -> Result<u64, StoreError> {
        parse_query(&spec.seed_query)?;
        if spec.start_date > spec.end_date {
            return Err(StoreError::Invalid("topic start_date after end_date".into()));
        }
        if let Some(&m) = spec.seed_media.iter().find(|m| !self.media.contains_key(m)) {
            return Err(StoreError::UnknownMedia(m));
        }
        if let Some(&t) = spec.seed_collections.iter().find(|t| !self.tags.contains_key(t)) {
            return Err(StoreError::UnknownTag(t));
        }
        let topic = Topic {
            topics_id: self.ids.topics + 1,
            name: spec.name,
            seed_query: spec.seed_query,
            start_date: spec.start_date,
            end_date: spec.end_date,
            seed_media: spec.seed_media,
            seed_collections: spec.seed_collections,
            seed_urls: spec.seed_urls,
            max_rounds: spec.max_rounds,
            fetch_budget: spec.fetch_budget,
        };
        let id = topic.topics_id;
        self.commit(Event::Topic(Box::new(TopicState::new(topic))))?;
        Ok(id)
    }

    pub fn topic(&self, id: u64) -> Option<&TopicState> {
        self.topics.get(&id)
    }

    pub fn topics(&self) -> impl Iterator<Item = &TopicState> {
        self.topics.values()
    }

    /// Replaces a topic's state.
    pub fn put_topic(&mut self, state: TopicState) -> Result<(), StoreError> {
        if !self.topics.contains_key(&state.topic.topics_id) {
            return Err(StoreError::UnknownTopic(state.topic.topics_id));
        }
        if self.topics.get(&state.topic.topics_id) == Some(&state) {
            return Ok(());
        }
        self.commit(Event::Topic(Box::new(state)))
    }

    /// Reserves `n` consecutive timespan ids and returns the first.
    pub fn reserve_timespan_ids(&mut self, n: u64) -> u64 {
        let first = self.ids.timespans + 1;
        self.ids.timespans += n;
        first
    }

    // ---- search ----

    pub fn index(&self) -> &PostingsIndex {
        &self.index
    }

    pub fn search(&self, query: &Query) -> Vec<u64> {
        self.index.search(query)
    }

    pub fn search_str(&self, q: &str) -> Result<Vec<u64>, ParseError> {
        Ok(self.index.search(&parse_query(q)?))
    }

    /// Referential-integrity and uniqueness problems, empty when consistent.
    pub fn integrity_problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        for f in self.feeds.values() {
            if !self.media.contains_key(&f.media_id) {
                problems.push(format!("feed {} references missing media {}", f.feeds_id, f.media_id));
            }
        }
        let mut urls = HashMap::new();
        for s in self.stories.values() {
            if !self.media.contains_key(&s.media_id) {
                problems.push(format!("story {} references missing media {}", s.stories_id, s.media_id));
            }
            if let Some(other) = urls.insert(s.normalized_url.clone(), s.stories_id) {
                problems.push(format!("stories {other} and {} share url {}", s.stories_id, s.normalized_url));
            }
            let lang_ok = s.language == "und"
                || (s.language.len() == 2 && s.language.chars().all(|c| c.is_ascii_lowercase()));
            if !lang_ok {
                problems.push(format!("story {} has language {:?}", s.stories_id, s.language));
            }
            for t in &s.tags {
                if !self.tags.contains_key(t) {
                    problems.push(format!("story {} has missing tag {t}", s.stories_id));
                }
            }
        }
        for t in self.tags.values() {
            if !self.tag_sets.contains_key(&t.tag_sets_id) {
                problems.push(format!("tag {} references missing tag set {}", t.tags_id, t.tag_sets_id));
            }
        }
        problems
    }
}

