//! Rule-based sentence splitting.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

const ABBREVIATION_FILES: [(&str, &str); 6] = [
    ("en", include_str!("../../data/abbreviations/en.txt")),
    ("es", include_str!("../../data/abbreviations/es.txt")),
    ("fr", include_str!("../../data/abbreviations/fr.txt")),
    ("de", include_str!("../../data/abbreviations/de.txt")),
    ("pt", include_str!("../../data/abbreviations/pt.txt")),
    ("it", include_str!("../../data/abbreviations/it.txt")),
];

const CLOSERS: [char; 7] = ['"', '\'', '”', '’', ')', '»', ']'];
const OPENERS: [char; 9] = ['"', '“', '‘', '\'', '«', '¿', '¡', '(', '['];
/// Terminators used by scripts that do not put a space after them.
const FULL_STOPS: [char; 5] = ['。', '！', '？', '।', '؟'];

/// Abbreviations (without the trailing period) per language.
#[derive(Debug, Clone)]
pub struct SentenceSplitter {
    abbreviations: BTreeSet<String>,
}

impl SentenceSplitter {
    /// Splitter using the built-in abbreviation list for `language`, falling
    /// back to English for languages without a list.
    pub fn for_language(language: &str) -> Self {
        let body = ABBREVIATION_FILES
            .iter()
            .find(|(code, _)| *code == language)
            .or_else(|| ABBREVIATION_FILES.first())
            .map_or("", |(_, body)| body);
        Self::with_abbreviations(body)
    }

    /// Builds from a newline-separated abbreviation list (case-insensitive,
    /// no trailing period, `#` comment lines).
    pub fn with_abbreviations(list: &str) -> Self {
        let abbreviations = list
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        SentenceSplitter { abbreviations }
    }

    pub fn split(&self, text: &str) -> Vec<String> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut out = Vec::new();
        let mut start = 0usize;
        let mut i = 0usize;
        while i < chars.len() {
            let (_, c) = chars[i];
            let is_full_stop = FULL_STOPS.contains(&c);
            if !(is_full_stop || matches!(c, '.' | '!' | '?' | '…')) {
                i += 1;
                continue;
            }
            let term_at = i;
            let mut j = i + 1;
            while j < chars.len() && matches!(chars[j].1, '.' | '!' | '?' | '…') {
                j += 1;
            }
            let single_period = c == '.' && j == term_at + 1;
            while j < chars.len() && CLOSERS.contains(&chars[j].1) {
                j += 1;
            }
            let end_byte = chars.get(j).map_or(text.len(), |(b, _)| *b);
            let split = if is_full_stop {
                true
            } else {
                let mut k = j;
                while k < chars.len() && chars[k].1.is_whitespace() {
                    k += 1;
                }
                k > j
                    && k < chars.len()
                    && starts_sentence(chars[k].1)
                    && !(single_period && self.is_abbreviation(text, start, chars[term_at].0))
            };
            if split {
                push_trimmed(&mut out, &text[start..end_byte]);
                start = end_byte;
            }
            i = j;
        }
        push_trimmed(&mut out, &text[start..]);
        out
    }

    /// Whether the word ending just before the period at `dot` is a known
    /// abbreviation or a single-letter initial.
    fn is_abbreviation(&self, text: &str, from: usize, dot: usize) -> bool {
        let before = &text[from..dot];
        let word = before
            .rsplit(char::is_whitespace)
            .next()
            .unwrap_or("")
            .trim_start_matches(|c: char| OPENERS.contains(&c));
        if word.is_empty() {
            return false;
        }
        let mut letters = word.chars();
        if let (Some(first), None) = (letters.next(), letters.next()) {
            if first.is_uppercase() {
                return true;
            }
        }
        self.abbreviations.contains(&word.to_lowercase())
    }
}

fn starts_sentence(c: char) -> bool {
    c.is_uppercase() || OPENERS.contains(&c) || (c.is_alphabetic() && !c.is_lowercase())
}

fn push_trimmed(out: &mut Vec<String>, s: &str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

/// Splits `text` into sentences using the rules for `language`.
pub fn split_sentences(text: &str, language: &str) -> Vec<String> {
    SentenceSplitter::for_language(language).split(text)
}
