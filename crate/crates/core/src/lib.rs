//! Core algorithms for a news-archive platform: feed polling backoff, story
//! title normalization, the Boolean query language and its inverted index,
//! sentence splitting, language identification, calendar bucketing and
//! link-economy metrics.
//!
//! Everything here is deterministic and IO-free. The crate is `no_std` and
//! only needs `alloc`; the `std` feature exists for downstream crates that
//! want `std::error::Error` impls on the error types.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod backoff;
pub mod calendar;
pub mod links;
pub mod query;
pub mod text;
pub mod title;

pub use backoff::{PollSchedule, MAX_POLL_INTERVAL, MIN_POLL_INTERVAL};
pub use calendar::Bucket;
pub use query::{
    parse_query, FieldFilter, ParseError, ParseErrorKind, PostingsIndex, Query, StoryFields,
};
pub use title::normalize_title;
