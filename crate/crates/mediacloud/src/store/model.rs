//! Persistent entities. Field names follow the archive's public schema.

use chrono::{DateTime, NaiveDate, Utc};
use mediacloud_core::backoff::{PollInterval, PollSchedule};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MediaSource {
    pub media_id: u64,
    pub name: String,
    pub url: String,
    pub start_date: NaiveDate,
    #[serde(default)]
    pub tags: BTreeSet<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeedType {
    Syndicated,
    Virtual,
}

impl FeedType {
    pub fn as_str(self) -> &'static str {
        match self {
            FeedType::Syndicated => "syndicated",
            FeedType::Virtual => "virtual",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "syndicated" | "" => Some(FeedType::Syndicated),
            "virtual" => Some(FeedType::Virtual),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feed {
    pub feeds_id: u64,
    pub media_id: u64,
    pub url: String,
    pub active: bool,
    #[serde(rename = "type")]
    pub feed_type: FeedType,
    /// Minutes, within [5, 10080].
    pub poll_interval: u32,
    pub next_poll_at: DateTime<Utc>,
}

impl Feed {
    pub fn schedule(&self) -> PollSchedule {
        PollSchedule {
            interval: PollInterval::from_minutes(self.poll_interval),
            next_poll_at: self.next_poll_at,
        }
    }

    pub fn set_schedule(&mut self, s: PollSchedule) {
        self.poll_interval = s.interval.minutes();
        self.next_poll_at = s.next_poll_at;
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Story {
    pub stories_id: u64,
    pub media_id: u64,
    pub title: String,
    pub publish_date: DateTime<Utc>,
    pub collect_date: DateTime<Utc>,
    pub url: String,
    pub guid: String,
    pub language: String,
    #[serde(default)]
    pub tags: BTreeSet<u64>,
    pub normalized_url: String,
    pub normalized_title: String,
}

/// Post-dedup story text with the outlinks found in its page.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoryText {
    pub stories_id: u64,
    /// The kept sentences joined by single spaces.
    pub extracted_text: String,
    pub sentences: Vec<String>,
    #[serde(default)]
    pub links: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagSet {
    pub tag_sets_id: u64,
    pub name: String,
    pub label: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tag {
    pub tags_id: u64,
    pub tag_sets_id: u64,
    pub tag: String,
    pub label: String,
    pub description: String,
}

/// Where a tag is attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TagTarget {
    Story(u64),
    Media(u64),
}

/// Feed-provided metadata for one item.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeedItem {
    pub url: Option<String>,
    pub guid: Option<String>,
    pub title: Option<String>,
    pub pub_date: Option<DateTime<Utc>>,
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topic {
    pub topics_id: u64,
    pub name: String,
    pub seed_query: String,
    pub start_date: NaiveDate,
    pub end_date: NaiveDate,
    /// Media ids the seed search is limited to. Empty with empty
    /// `seed_collections` means all media.
    #[serde(default)]
    pub seed_media: BTreeSet<u64>,
    /// Collection tag ids; media carrying any of them are included.
    #[serde(default)]
    pub seed_collections: BTreeSet<u64>,
    #[serde(default)]
    pub seed_urls: Vec<String>,
    pub max_rounds: u32,
    pub fetch_budget: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Via {
    IndexSeed,
    UrlSeed,
    Spidered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicStory {
    pub topics_id: u64,
    pub stories_id: u64,
    pub discovered_round: u32,
    pub via: Via,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Period {
    Overall,
    Weekly,
    Monthly,
}

impl Period {
    pub fn as_str(self) -> &'static str {
        match self {
            Period::Overall => "overall",
            Period::Weekly => "weekly",
            Period::Monthly => "monthly",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timespan {
    pub timespans_id: u64,
    pub topics_id: u64,
    pub period: Period,
    pub start: NaiveDate,
    pub end: NaiveDate,
    pub story_ids: BTreeSet<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlatformPost {
    pub post_id: String,
    pub author: String,
    pub channel: String,
    pub content: String,
    pub urls: Vec<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UrlShareStats {
    pub post_count: u64,
    pub author_count: u64,
    pub channel_count: u64,
}

/// A URL waiting for the next spider round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueuedUrl {
    pub url: String,
    /// Linked from a member whose publish date is inside the topic range.
    pub from_in_range: bool,
    pub via: Via,
    /// Lowest-id member linking here, whose date is the fallback for undated pages.
    #[serde(default)]
    pub linked_from: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpiderStatus {
    Created,
    Running,
    Completed,
}

/// Everything known about one topic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicState {
    pub topic: Topic,
    pub status: SpiderStatus,
    pub rounds_completed: u32,
    pub members: BTreeMap<u64, TopicStory>,
    /// Story-to-story links between members.
    pub links: BTreeSet<(u64, u64)>,
    /// Normalized URLs tried in this topic, never tried again.
    pub attempted: BTreeSet<String>,
    /// Attempted URLs that resolved to a story.
    pub resolved: BTreeMap<String, u64>,
    /// Normalized URL → failure diagnostic.
    pub failures: BTreeMap<String, String>,
    pub queue: BTreeMap<String, QueuedUrl>,
    pub fetches: usize,
    pub timespans: Vec<Timespan>,
    /// Story → share count; `None` means the provider failed.
    pub shares: BTreeMap<u64, Option<u64>>,
    pub posts: Vec<PlatformPost>,
    pub url_stats: BTreeMap<String, UrlShareStats>,
    #[serde(with = "pair_map")]
    pub coshare: BTreeMap<(u64, u64), u64>,
}

/// JSON object keys must be strings, so pair-keyed maps are stored as lists.
mod pair_map {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};
    use std::collections::BTreeMap;

    pub fn serialize<S: Serializer>(map: &BTreeMap<(u64, u64), u64>, s: S) -> Result<S::Ok, S::Error> {
        let list: Vec<(u64, u64, u64)> = map.iter().map(|(&(a, b), &w)| (a, b, w)).collect();
        list.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<(u64, u64), u64>, D::Error> {
        let list = Vec::<(u64, u64, u64)>::deserialize(d)?;
        Ok(list.into_iter().map(|(a, b, w)| ((a, b), w)).collect())
    }
}

impl TopicState {
    pub fn new(topic: Topic) -> Self {
        TopicState {
            topic,
            status: SpiderStatus::Created,
            rounds_completed: 0,
            members: BTreeMap::new(),
            links: BTreeSet::new(),
            attempted: BTreeSet::new(),
            resolved: BTreeMap::new(),
            failures: BTreeMap::new(),
            queue: BTreeMap::new(),
            fetches: 0,
            timespans: Vec::new(),
            shares: BTreeMap::new(),
            posts: Vec::new(),
            url_stats: BTreeMap::new(),
            coshare: BTreeMap::new(),
        }
    }

    pub fn is_member(&self, stories_id: u64) -> bool {
        self.members.contains_key(&stories_id)
    }
}
