//! The Boolean query language and the index it runs against.

mod ast;
mod counts;
mod index;
mod parser;
mod tokenize;

pub use ast::{FieldFilter, PublishDate, Query, FIELD_NAMES};
pub use counts::{attention_over_time, word_counts, Stopwords};
pub use index::{PostingsIndex, StoryFields};
pub use parser::{parse_query, ParseError, ParseErrorKind};
pub use tokenize::{tokenize, words};
