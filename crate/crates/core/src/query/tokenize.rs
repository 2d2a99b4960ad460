use alloc::string::{String, ToString};
use alloc::vec::Vec;
use unicode_segmentation::UnicodeSegmentation;

/// Splits text on Unicode word boundaries and lowercases each word.
///
/// The same tokenizer is used for indexing and for query terms, so a term
/// matches exactly the tokens it would have produced in a story.
pub fn tokenize(text: &str) -> Vec<String> {
    text.unicode_words().map(str::to_lowercase).collect()
}

/// Like [`tokenize`], but yields borrowed words without lowercasing.
pub fn words(text: &str) -> impl Iterator<Item = &str> {
    text.unicode_words()
}

pub(crate) fn single_token(text: &str) -> Option<String> {
    let mut it = text.unicode_words();
    let first = it.next()?;
    if it.next().is_some() {
        return None;
    }
    Some(first.to_string().to_lowercase())
}
