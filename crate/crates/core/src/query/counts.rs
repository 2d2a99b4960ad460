//! Aggregations over query results: word counts and attention over time.

use super::ast::Query;
use super::index::PostingsIndex;
use crate::calendar::Bucket;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use chrono::NaiveDate;

/// Per-language stopword lists.
#[derive(Debug, Clone, Default)]
pub struct Stopwords {
    words: BTreeSet<String>,
}

const STOPWORD_FILES: [(&str, &str); 6] = [
    ("en", include_str!("../../data/stopwords/en.txt")),
    ("es", include_str!("../../data/stopwords/es.txt")),
    ("fr", include_str!("../../data/stopwords/fr.txt")),
    ("de", include_str!("../../data/stopwords/de.txt")),
    ("pt", include_str!("../../data/stopwords/pt.txt")),
    ("it", include_str!("../../data/stopwords/it.txt")),
];

impl Stopwords {
    /// No stopwords at all.
    pub fn none() -> Self {
        Self::default()
    }

    /// Built-in list for a language code; unknown languages get an empty list.
    pub fn for_language(code: &str) -> Self {
        Self::for_languages(&[code])
    }

    /// Union of the built-in lists for several languages.
    pub fn for_languages(codes: &[&str]) -> Self {
        let mut s = Stopwords::none();
        for (code, body) in STOPWORD_FILES {
            if codes.contains(&code) {
                s.extend_from_list(body);
            }
        }
        s
    }

    /// Adds words from a newline-separated list; `#` starts a comment line.
    pub fn extend_from_list(&mut self, list: &str) {
        for line in list.lines() {
            let w = line.trim();
            if !w.is_empty() && !w.starts_with('#') {
                self.words.insert(w.to_lowercase());
            }
        }
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Top `top_n` tokens across all stories matching `query`, by count
/// descending, ties broken lexicographically.
pub fn word_counts(
    index: &PostingsIndex,
    query: &Query,
    top_n: usize,
    stopwords: &Stopwords,
) -> Vec<(String, u64)> {
    let mut totals: BTreeMap<&str, u64> = BTreeMap::new();
    for id in index.search(query) {
        for (token, n) in index.token_counts(id) {
            if !stopwords.contains(token) {
                *totals.entry(token).or_default() += n as u64;
            }
        }
    }
    let mut ranked: Vec<(&str, u64)> = totals.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(top_n);
    ranked.into_iter().map(|(t, n)| (String::from(t), n)).collect()
}

/// Matching-story counts per bucket, from the first to the last non-empty
/// bucket, with empty buckets in between reported as zero.
pub fn attention_over_time(
    index: &PostingsIndex,
    query: &Query,
    bucket: Bucket,
) -> Vec<(NaiveDate, u64)> {
    let mut counts: BTreeMap<NaiveDate, u64> = BTreeMap::new();
    for id in index.search(query) {
        if let Some(f) = index.fields(id) {
            *counts.entry(bucket.start_of(f.publish_date.date())).or_default() += 1;
        }
    }
    let (Some(&first), Some(&last)) = (counts.keys().next(), counts.keys().next_back()) else {
        return Vec::new();
    };
    bucket
        .starts_between(first, last)
        .into_iter()
        .map(|start| (start, counts.get(&start).copied().unwrap_or(0)))
        .collect()
}
