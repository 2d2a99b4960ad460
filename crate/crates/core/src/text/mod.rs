//! Sentence splitting, sentence identity and language identification.

mod language;
mod sentences;

pub use crate::title::collapse_whitespace;
pub use language::{detect_language, DetectorConfig, LanguageDetector, UNDETERMINED};
pub use sentences::{split_sentences, SentenceSplitter};
