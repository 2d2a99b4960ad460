//! Title normalization used for story deduplication.

use alloc::string::String;

/// Separators that split a headline into segments ("Section | Headline - Site").
const SEPARATORS: [char; 3] = [':', '|', '-'];

/// Reduces a headline to its longest segment, lowercased and whitespace-collapsed.
///
/// The title is split on `:`, `|` and `-`. The longest segment (counted in
/// characters after trimming) wins, and ties go to the leftmost one.
pub fn normalize_title(title: &str) -> String {
    let mut best: &str = "";
    let mut best_len = 0usize;
    for segment in title.split(&SEPARATORS[..]) {
        let segment = segment.trim();
        let len = segment.chars().count();
        if len > best_len {
            best = segment;
            best_len = len;
        }
    }
    collapse_whitespace(&best.to_lowercase())
}

/// Collapses every run of whitespace to one ASCII space and trims both ends.
pub fn collapse_whitespace(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}
