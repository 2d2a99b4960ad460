//! Append-only JSON-lines event log.

use super::model::{Feed, MediaSource, Story, StoryText, Tag, TagSet, TopicState};
use super::StoreError;
use serde::{Deserialize, Serialize};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Seek, SeekFrom, Write};
use std::path::Path;

/// One mutation. Each variant carries the full new value of the entity.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "event", content = "data", rename_all = "snake_case")]
pub(super) enum Event {
    Media(MediaSource),
    Feed(Feed),
    Story(Story),
    Text { text: StoryText, language: String },
    TagSet(TagSet),
    Tag(Tag),
    Topic(Box<TopicState>),
}

#[derive(Debug)]
pub(super) struct Journal {
    file: File,
}

impl Journal {
    /// Opens the journal and returns the events it holds. A torn final line
    /// (no trailing newline and not valid JSON) is discarded.
    pub fn open(path: &Path) -> Result<(Journal, Vec<Event>), StoreError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
        let mut events = Vec::new();
        let mut good_len = 0u64;
        let mut reader = BufReader::new(&mut file);
        let mut line = String::new();
        let mut number = 0;
        loop {
            line.clear();
            let n = reader.read_line(&mut line)?;
            if n == 0 {
                break;
            }
            number += 1;
            let complete = line.ends_with('\n');
            let body = line.trim();
            if body.is_empty() {
                good_len += n as u64;
                continue;
            }
            match serde_json::from_str::<Event>(body) {
                Ok(e) => {
                    events.push(e);
                    good_len += n as u64;
                }
                Err(_) if !complete => break,
                Err(e) => return Err(StoreError::Journal { line: number, message: e.to_string() }),
            }
        }
        drop(reader);
        if file.metadata()?.len() != good_len {
            file.set_len(good_len)?;
            file.seek(SeekFrom::End(0))?;
        }
        Ok((Journal { file }, events))
    }

    pub fn append(&mut self, event: &Event) -> Result<(), StoreError> {
        let mut line = serde_json::to_string(event).map_err(|e| StoreError::Invalid(e.to_string()))?;
        line.push('\n');
        self.file.write_all(line.as_bytes())?;
        self.file.flush()?;
        Ok(())
    }

    pub fn sync(&mut self) -> Result<(), StoreError> {
        self.file.sync_data()?;
        Ok(())
    }
}
