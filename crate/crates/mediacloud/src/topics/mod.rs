//! Topic datasets: seed-query evaluation, hyperlink spidering, link-economy
//! metrics, timespans, subtopics, platform posts and export.

pub mod dates;
pub mod export;
pub mod metrics;
pub mod posts;
pub mod spider;

pub use dates::guess_date;
pub use export::{export_topic, zip_topic, TopicDataset};
pub use metrics::{
    assign_timespans, build_timespans, compute_shares, inlink_counts, media_shares, medium_links, subtopic, ShareProvider,
    TableShares,
};
pub use posts::{ingest_platform_posts, url_share_stats, PostsSummary};
pub use spider::{
    matches_standalone, media_for_hostname, run_spider, seed_topic, spider_round, RoundContext, RoundReport,
    SpiderOptions, SpiderReport,
};
