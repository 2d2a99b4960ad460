//! Brute-force reference evaluator and a seeded synthetic corpus.
//!
//! The oracle evaluates a query against one story at a time from its raw
//! token list, with no postings, so it shares no code with the index.

#![allow(dead_code)]

use chrono::{Datelike, Duration, NaiveDate, NaiveDateTime};
use mediacloud_core::query::{FieldFilter, PostingsIndex, PublishDate, Query, StoryFields};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

pub const VOCAB: [&str; 24] = [
    "vote", "voter", "voting", "ballot", "mail", "mailed", "absent", "absentee", "fraud", "rigged",
    "harvest", "election", "count", "recount", "court", "judge", "state", "county", "poll",
    "polling", "claim", "false", "news", "report",
];

#[derive(Debug, Clone)]
pub struct NaiveStory {
    pub id: u64,
    pub media_id: u64,
    pub publish_date: NaiveDateTime,
    pub language: String,
    pub story_tags: BTreeSet<u64>,
    pub media_tags: BTreeSet<u64>,
    pub timespans: BTreeSet<u64>,
    pub tokens: Vec<String>,
}

impl NaiveStory {
    pub fn text(&self) -> String {
        self.tokens.join(" ")
    }

    pub fn fields(&self) -> StoryFields {
        let mut f = StoryFields::new(self.id, self.media_id, self.publish_date);
        f.language = self.language.clone();
        f.story_tags = self.story_tags.clone();
        f.media_tags = self.media_tags.clone();
        f.timespans = self.timespans.clone();
        f
    }
}

pub fn eval(story: &NaiveStory, q: &Query) -> bool {
    match q {
        Query::Term(t) => story.tokens.iter().any(|w| w == t),
        Query::Prefix(stem) => story.tokens.iter().any(|w| w.starts_with(stem.as_str())),
        Query::Phrase { tokens, proximity: None } => {
            story.tokens.windows(tokens.len()).any(|w| w == tokens.as_slice())
        }
        Query::Phrase { tokens, proximity: Some(slop) } => {
            let width = tokens.len() + *slop as usize;
            (0..story.tokens.len()).any(|start| {
                let end = (start + width).min(story.tokens.len());
                let mut window: Vec<&String> = story.tokens[start..end].iter().collect();
                tokens.iter().all(|t| match window.iter().position(|w| *w == t) {
                    Some(i) => {
                        window.swap_remove(i);
                        true
                    }
                    None => false,
                })
            })
        }
        Query::And(c) => c.iter().all(|q| eval(story, q)),
        Query::Or(c) => c.iter().any(|q| eval(story, q)),
        Query::Not(inner) => !eval(story, inner),
        Query::Field(f) => field(story, f),
    }
}

fn field(story: &NaiveStory, f: &FieldFilter) -> bool {
    let day = story.publish_date.date();
    let sunday = day - Duration::days(i64::from(day.weekday().num_days_from_sunday()));
    match f {
        FieldFilter::StoryId(v) => story.id == *v,
        FieldFilter::MediaId(v) => story.media_id == *v,
        FieldFilter::PublishDate(PublishDate::Instant(t)) => story.publish_date == *t,
        FieldFilter::PublishDate(PublishDate::Day(d)) | FieldFilter::PublishDay(d) => day == *d,
        FieldFilter::PublishWeek(d) => sunday == *d,
        FieldFilter::PublishMonth(d) => (day.year(), day.month()) == (d.year(), d.month()),
        FieldFilter::PublishYear(y) => day.year() == *y,
        FieldFilter::TagsIdStories(t) => story.story_tags.contains(t),
        FieldFilter::TagsIdMedia(t) => story.media_tags.contains(t),
        FieldFilter::TimespansId(t) => story.timespans.contains(t),
        FieldFilter::Language(l) => story.language == *l,
    }
}

pub fn naive_search(corpus: &[NaiveStory], q: &Query) -> Vec<u64> {
    let mut ids: Vec<u64> = corpus.iter().filter(|s| eval(s, q)).map(|s| s.id).collect();
    ids.sort_unstable();
    ids
}

/// `n` stories over [`VOCAB`] with skewed word frequencies, dated in 2020.
pub fn synthetic_corpus(seed: u64, n: usize) -> Vec<NaiveStory> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap().and_hms_opt(0, 0, 0).unwrap();
    let langs = ["en", "en", "es", "und"];
    (0..n)
        .map(|i| {
            let len = rng.gen_range(0..30);
            let tokens = (0..len)
                .map(|_| {
                    // Squaring a uniform draw favours the front of the vocabulary.
                    let u: f64 = rng.gen();
                    VOCAB[((u * u) * VOCAB.len() as f64) as usize].to_string()
                })
                .collect();
            let media_id = rng.gen_range(1..=8);
            NaiveStory {
                id: i as u64 + 1,
                media_id,
                publish_date: base + Duration::seconds(rng.gen_range(0..366 * 86_400)),
                language: langs[rng.gen_range(0..langs.len())].to_string(),
                story_tags: (1..=6).filter(|_| rng.gen_bool(0.2)).collect(),
                media_tags: BTreeSet::from([100 + media_id % 3]),
                timespans: (1..=4).filter(|_| rng.gen_bool(0.3)).collect(),
                tokens,
            }
        })
        .collect()
}

pub fn build_index(corpus: &[NaiveStory]) -> PostingsIndex {
    let mut idx = PostingsIndex::new();
    for s in corpus {
        idx.index_story(s.fields(), &s.text());
    }
    idx
}

fn vocab_word() -> impl Strategy<Value = String> {
    proptest::sample::select(&VOCAB[..]).prop_map(str::to_string)
}

fn leaf() -> BoxedStrategy<Query> {
    let day = (0u32..366).prop_map(|d| {
        NaiveDate::from_ymd_opt(2020, 1, 1).unwrap() + Duration::days(i64::from(d))
    });
    prop_oneof![
        4 => vocab_word().prop_map(Query::Term),
        2 => (vocab_word(), 1usize..4).prop_map(|(w, n)| Query::Prefix(w[..n].to_string())),
        2 => (proptest::collection::vec(vocab_word(), 1..4), proptest::option::of(0u32..4))
            .prop_map(|(tokens, proximity)| Query::Phrase { tokens, proximity }),
        1 => (1u64..=8).prop_map(|m| Query::Field(FieldFilter::MediaId(m))),
        1 => (1u64..=1000).prop_map(|m| Query::Field(FieldFilter::StoryId(m))),
        1 => proptest::sample::select(&["en", "es", "und"][..])
            .prop_map(|l| Query::Field(FieldFilter::Language(l.to_string()))),
        1 => (1u64..=6).prop_map(|t| Query::Field(FieldFilter::TagsIdStories(t))),
        1 => (100u64..=102).prop_map(|t| Query::Field(FieldFilter::TagsIdMedia(t))),
        1 => (1u64..=4).prop_map(|t| Query::Field(FieldFilter::TimespansId(t))),
        1 => day.clone().prop_map(|d| Query::Field(FieldFilter::PublishDay(d))),
        1 => day.clone().prop_map(|d| Query::Field(FieldFilter::PublishDate(PublishDate::Day(d)))),
        1 => day.clone().prop_map(|d| {
            let sunday = d - Duration::days(i64::from(d.weekday().num_days_from_sunday()));
            Query::Field(FieldFilter::PublishWeek(sunday))
        }),
        1 => (1u32..=12).prop_map(|m| {
            Query::Field(FieldFilter::PublishMonth(NaiveDate::from_ymd_opt(2020, m, 1).unwrap()))
        }),
        1 => (2019i32..=2021).prop_map(|y| Query::Field(FieldFilter::PublishYear(y))),
    ]
    .boxed()
}

/// Random query trees of the shape the parser produces: compound nodes have
/// two or more children. The root may be a negation.
pub fn any_query() -> BoxedStrategy<Query> {
    leaf()
        .prop_recursive(4, 32, 4, |inner| {
            prop_oneof![
                proptest::collection::vec(inner.clone(), 2..4).prop_map(Query::And),
                proptest::collection::vec(inner.clone(), 2..4).prop_map(Query::Or),
                inner.prop_map(Query::negate),
            ]
        })
        .boxed()
}

/// Like [`any_query`], but never rooted at a negation, so the printed form
/// parses.
pub fn parseable_query() -> BoxedStrategy<Query> {
    any_query()
        .prop_map(|q| match q {
            Query::Not(inner) => Query::And(vec![Query::Term("vote".into()), Query::Not(inner)]),
            q => q,
        })
        .boxed()
}
