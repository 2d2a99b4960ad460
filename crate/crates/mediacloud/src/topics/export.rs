//! Topic dataset files.

use super::metrics::{inlink_counts, media_of, media_shares, medium_links};
use crate::store::{Store, StoreError, TopicState};
use serde::Serialize;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const STORIES_HEADER: [&str; 8] =
    ["stories_id", "media_id", "title", "publish_date", "url", "language", "media_inlink_count", "share_count"];
pub const MEDIA_HEADER: [&str; 5] = ["media_id", "name", "url", "media_inlink_count", "share_count"];
pub const STORY_LINKS_HEADER: [&str; 2] = ["source_stories_id", "ref_stories_id"];
pub const MEDIUM_LINKS_HEADER: [&str; 3] = ["source_media_id", "ref_media_id", "link_count"];
pub const TIMESPANS_HEADER: [&str; 5] = ["timespans_id", "period", "start_date", "end_date", "story_count"];
pub const URL_SHARES_HEADER: [&str; 4] = ["url", "post_count", "author_count", "channel_count"];
pub const COSHARE_HEADER: [&str; 3] = ["media_id_a", "media_id_b", "author_count"];

/// Timestamp format used in exported files and API responses.
pub const DATETIME_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StoryRow {
    pub stories_id: u64,
    pub media_id: u64,
    pub title: String,
    pub publish_date: String,
    pub url: String,
    pub language: String,
    pub media_inlink_count: u64,
    pub share_count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MediaRow {
    pub media_id: u64,
    pub name: String,
    pub url: String,
    pub media_inlink_count: u64,
    pub share_count: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StoryLinkRow {
    pub source_stories_id: u64,
    pub ref_stories_id: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MediumLinkRow {
    pub source_media_id: u64,
    pub ref_media_id: u64,
    pub link_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TimespanRow {
    pub timespans_id: u64,
    pub period: String,
    pub start_date: String,
    pub end_date: String,
    pub story_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UrlShareRow {
    pub url: String,
    pub post_count: u64,
    pub author_count: u64,
    pub channel_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoshareRow {
    pub media_id_a: u64,
    pub media_id_b: u64,
    pub author_count: u64,
}

/// Every table of a topic dataset, rows sorted by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopicDataset {
    pub stories: Vec<StoryRow>,
    pub media: Vec<MediaRow>,
    pub story_links: Vec<StoryLinkRow>,
    pub medium_links: Vec<MediumLinkRow>,
    pub timespans: Vec<TimespanRow>,
    pub url_shares: Vec<UrlShareRow>,
    pub coshare: Vec<CoshareRow>,
}

impl TopicDataset {
    pub fn build(store: &Store, state: &TopicState) -> Self {
        let inlinks = inlink_counts(store, state);
        let media_shares = media_shares(store, state);
        let stories = state
            .members
            .keys()
            .filter_map(|id| store.story(*id))
            .map(|s| StoryRow {
                stories_id: s.stories_id,
                media_id: s.media_id,
                title: s.title.clone(),
                publish_date: s.publish_date.format(DATETIME_FORMAT).to_string(),
                url: s.url.clone(),
                language: s.language.clone(),
                media_inlink_count: inlinks.stories.get(&s.stories_id).copied().unwrap_or(0),
                share_count: state.shares.get(&s.stories_id).copied().flatten(),
            })
            .collect();
        let media_ids: std::collections::BTreeSet<u64> = media_of(store, state).into_values().collect();
        let media = media_ids
            .into_iter()
            .filter_map(|id| store.media(id))
            .map(|m| MediaRow {
                media_id: m.media_id,
                name: m.name.clone(),
                url: m.url.clone(),
                media_inlink_count: inlinks.media.get(&m.media_id).copied().unwrap_or(0),
                share_count: media_shares.get(&m.media_id).copied().flatten(),
            })
            .collect();
        let story_links = state
            .links
            .iter()
            .map(|&(source_stories_id, ref_stories_id)| StoryLinkRow { source_stories_id, ref_stories_id })
            .collect();
        let medium_links = medium_links(store, state)
            .into_iter()
            .map(|((source_media_id, ref_media_id), link_count)| MediumLinkRow { source_media_id, ref_media_id, link_count })
            .collect();
        let mut timespans: Vec<TimespanRow> = state
            .timespans
            .iter()
            .map(|t| TimespanRow {
                timespans_id: t.timespans_id,
                period: t.period.as_str().to_string(),
                start_date: t.start.to_string(),
                end_date: t.end.to_string(),
                story_count: t.story_ids.len(),
            })
            .collect();
        timespans.sort_by_key(|t| t.timespans_id);
        let url_shares = state
            .url_stats
            .iter()
            .map(|(url, s)| UrlShareRow {
                url: url.clone(),
                post_count: s.post_count,
                author_count: s.author_count,
                channel_count: s.channel_count,
            })
            .collect();
        let coshare = state
            .coshare
            .iter()
            .map(|(&(media_id_a, media_id_b), &author_count)| CoshareRow { media_id_a, media_id_b, author_count })
            .collect();
        TopicDataset { stories, media, story_links, medium_links, timespans, url_shares, coshare }
    }

    /// `(file name, CSV bytes)` in a fixed order. The post-derived files are
    /// present only when the topic has posts.
    pub fn files(&self, with_posts: bool) -> Result<Vec<(&'static str, Vec<u8>)>, StoreError> {
        let mut files = vec![
            ("stories.csv", to_csv(&STORIES_HEADER, &self.stories)?),
            ("media.csv", to_csv(&MEDIA_HEADER, &self.media)?),
            ("story_links.csv", to_csv(&STORY_LINKS_HEADER, &self.story_links)?),
            ("medium_links.csv", to_csv(&MEDIUM_LINKS_HEADER, &self.medium_links)?),
            ("timespans.csv", to_csv(&TIMESPANS_HEADER, &self.timespans)?),
        ];
        if with_posts {
            files.push(("url_shares.csv", to_csv(&URL_SHARES_HEADER, &self.url_shares)?));
            files.push(("coshare.csv", to_csv(&COSHARE_HEADER, &self.coshare)?));
        }
        Ok(files)
    }
}

/// RFC 4180 CSV with a header row, written even when there are no rows.
pub fn to_csv<T: Serialize>(header: &[&str], rows: &[T]) -> Result<Vec<u8>, StoreError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| StoreError::Io(e.into_error()))
}

fn dataset_files(store: &Store, topics_id: u64) -> Result<Vec<(&'static str, Vec<u8>)>, StoreError> {
    let state = store.topic(topics_id).ok_or(StoreError::UnknownTopic(topics_id))?;
    TopicDataset::build(store, state).files(!state.posts.is_empty())
}

/// Writes the dataset files into `out_dir`, creating it if needed.
pub fn export_topic(store: &Store, topics_id: u64, out_dir: &Path) -> Result<Vec<PathBuf>, StoreError> {
    let files = dataset_files(store, topics_id)?;
    std::fs::create_dir_all(out_dir)?;
    let mut paths = Vec::new();
    for (name, bytes) in files {
        let path = out_dir.join(name);
        std::fs::write(&path, bytes)?;
        paths.push(path);
    }
    Ok(paths)
}

/// The dataset files as a zip archive with fixed timestamps.
pub fn zip_topic(store: &Store, topics_id: u64) -> Result<Vec<u8>, StoreError> {
    let files = dataset_files(store, topics_id)?;
    let mut zip = zip::ZipWriter::new(std::io::Cursor::new(Vec::new()));
    let options = zip::write::SimpleFileOptions::default()
        .compression_method(zip::CompressionMethod::Deflated)
        .last_modified_time(zip::DateTime::default());
    let io = |e: zip::result::ZipError| StoreError::Io(std::io::Error::other(e));
    for (name, bytes) in files {
        zip.start_file(name, options).map_err(io)?;
        zip.write_all(&bytes)?;
    }
    Ok(zip.finish().map_err(io)?.into_inner())
}
