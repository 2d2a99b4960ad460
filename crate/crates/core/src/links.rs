//! Link-economy metrics over story hyperlinks and platform co-sharing.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

/// A directed story-to-story hyperlink.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct StoryEdge {
    pub source: u64,
    pub target: u64,
}

/// In-link counts for stories and media.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct InlinkCounts {
    /// Story id → number of distinct other media linking to it.
    pub stories: BTreeMap<u64, u64>,
    /// Media id → number of distinct other media linking to any of its stories.
    pub media: BTreeMap<u64, u64>,
}

/// Counts distinct linking media. Links from a story's own medium are
/// ignored. Edges whose endpoints have no known medium are skipped.
///
/// Every story and medium in `media_of` appears in the result, with zero
/// when nothing links to it.
pub fn inlink_counts(edges: &[StoryEdge], media_of: &BTreeMap<u64, u64>) -> InlinkCounts {
    let mut story_sources: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
    let mut media_sources: BTreeMap<u64, BTreeSet<u64>> = BTreeMap::new();
    for e in edges {
        let (Some(&src_media), Some(&dst_media)) = (media_of.get(&e.source), media_of.get(&e.target))
        else {
            continue;
        };
        if src_media == dst_media {
            continue;
        }
        story_sources.entry(e.target).or_default().insert(src_media);
        media_sources.entry(dst_media).or_default().insert(src_media);
    }
    let mut counts = InlinkCounts::default();
    for (&story, &media) in media_of {
        counts
            .stories
            .insert(story, story_sources.get(&story).map_or(0, |s| s.len() as u64));
        counts
            .media
            .entry(media)
            .or_insert_with(|| media_sources.get(&media).map_or(0, |s| s.len() as u64));
    }
    counts
}

/// Media-to-media links aggregated from story links: `(source, target) →
/// number of story links`. Links within one medium are dropped.
pub fn medium_links(edges: &[StoryEdge], media_of: &BTreeMap<u64, u64>) -> BTreeMap<(u64, u64), u64> {
    let mut out = BTreeMap::new();
    for e in edges {
        if let (Some(&a), Some(&b)) = (media_of.get(&e.source), media_of.get(&e.target)) {
            if a != b {
                *out.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    out
}

/// Co-share network: the weight between media `a < b` is the number of
/// distinct authors who shared at least one URL from each.
///
/// `shares` lists `(author, media)` incidences; duplicates are fine.
pub fn coshare_edges<A: Ord>(shares: impl IntoIterator<Item = (A, u64)>) -> BTreeMap<(u64, u64), u64> {
    let mut by_author: BTreeMap<A, BTreeSet<u64>> = BTreeMap::new();
    for (author, media) in shares {
        by_author.entry(author).or_default().insert(media);
    }
    let mut out = BTreeMap::new();
    for media in by_author.values() {
        let media: Vec<u64> = media.iter().copied().collect();
        for (i, &a) in media.iter().enumerate() {
            for &b in &media[i + 1..] {
                *out.entry((a, b)).or_insert(0) += 1;
            }
        }
    }
    out
}
