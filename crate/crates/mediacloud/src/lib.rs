//! News-archive platform: a journaled story store, feed ingest with progressive
//! backoff, text processing, a topic spider with link-economy metrics, dataset
//! export, and a REST API.
//!
//! The pure algorithms live in [`mediacloud_core`]; this crate adds IO.

pub mod api;
pub mod config;
pub mod fetch;
pub mod ingest;
pub mod store;
pub mod textproc;
pub mod topics;
pub mod urlnorm;

pub use mediacloud_core as core;
