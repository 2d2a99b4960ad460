//! RSS 2.0, RSS 1.0 (RDF) and Atom parsing.

use crate::store::FeedItem;
use chrono::{DateTime, NaiveDate, NaiveDateTime, Utc};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use std::fmt;

/// What the root element said the document is.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Dialect {
    Rss,
    Rdf,
    Atom,
    /// Well-formed XML with some other root element.
    Unrecognized(String),
    /// No root element was found.
    Empty,
}

impl fmt::Display for Dialect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dialect::Rss => f.write_str("rss"),
            Dialect::Rdf => f.write_str("rdf"),
            Dialect::Atom => f.write_str("atom"),
            Dialect::Unrecognized(root) => write!(f, "unrecognized root <{root}>"),
            Dialect::Empty => f.write_str("no root element"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("feed parse ({dialect}): {message}")]
pub struct FeedError {
    pub dialect: Dialect,
    pub message: String,
}

/// A parsed feed. Items lacking both url and guid are dropped and noted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedFeed {
    pub items: Vec<FeedItem>,
    pub dropped: Vec<String>,
}

#[derive(Default)]
struct Pending {
    item: FeedItem,
    atom_published: Option<DateTime<Utc>>,
    atom_updated: Option<DateTime<Utc>>,
    link_rank: u8,
    content: Option<String>,
}

fn local(e: &BytesStart) -> String {
    String::from_utf8_lossy(e.local_name().as_ref()).into_owned()
}

fn attr(e: &BytesStart, name: &str) -> Option<String> {
    e.attributes().flatten().find(|a| a.key.local_name().as_ref() == name.as_bytes()).map(|a| {
        a.unescape_value()
            .map(|v| v.into_owned())
            .unwrap_or_else(|_| String::from_utf8_lossy(&a.value).into_owned())
    })
}

fn html_entity(name: &str) -> Option<&'static str> {
    if let Some(c) = quick_xml::escape::resolve_predefined_entity(name) {
        return Some(c);
    }
    Some(match name {
        "nbsp" => "\u{a0}",
        "mdash" => "\u{2014}",
        "ndash" => "\u{2013}",
        "hellip" => "\u{2026}",
        "rsquo" => "\u{2019}",
        "lsquo" => "\u{2018}",
        "rdquo" => "\u{201d}",
        "ldquo" => "\u{201c}",
        "copy" => "\u{a9}",
        _ => return None,
    })
}

/// Atom links: rel="alternate" (or no rel) beats everything else.
fn link_rank(rel: Option<&str>) -> u8 {
    match rel {
        None | Some("alternate") => 2,
        Some("self") | Some("edit") | Some("enclosure") | Some("replies") => 0,
        Some(_) => 1,
    }
}

/// Parses a feed body. Items come back in document order.
pub fn parse_feed(body: &[u8]) -> Result<ParsedFeed, FeedError> {
    let text = String::from_utf8_lossy(body);
    let mut reader = Reader::from_str(&text);
    reader.config_mut().trim_text(true);

    let mut dialect = Dialect::Empty;
    let mut depth = 0usize;
    let mut item_depth: Option<usize> = None;
    let mut field: Option<String> = None;
    let mut buf = String::new();
    let mut pending = Pending::default();
    let mut out = ParsedFeed::default();

    let fail = |dialect: &Dialect, message: String| FeedError { dialect: dialect.clone(), message };

    loop {
        let event = reader
            .read_event()
            .map_err(|e| fail(&dialect, format!("not well-formed XML at byte {}: {e}", reader.error_position())))?;
        match event {
            Event::Start(ref e) | Event::Empty(ref e) => {
                let empty = matches!(event, Event::Empty(_));
                let name = local(e);
                if depth == 0 {
                    dialect = match name.as_str() {
                        "rss" => Dialect::Rss,
                        "RDF" => Dialect::Rdf,
                        "feed" => Dialect::Atom,
                        _ => Dialect::Unrecognized(name.clone()),
                    };
                    if let Dialect::Unrecognized(_) = dialect {
                        return Err(fail(&dialect, "not a feed".into()));
                    }
                }
                let is_item = match dialect {
                    Dialect::Atom => name == "entry",
                    _ => name == "item",
                };
                if item_depth.is_none() && is_item {
                    pending = Pending::default();
                    if dialect == Dialect::Rdf {
                        pending.item.guid = attr(e, "about");
                    }
                    if empty {
                        finish(&mut pending, &mut out);
                    } else {
                        item_depth = Some(depth);
                    }
                } else if item_depth.is_some_and(|d| depth == d + 1) {
                    if name == "link" && dialect == Dialect::Atom {
                        let rank = link_rank(attr(e, "rel").as_deref());
                        if let Some(href) = attr(e, "href") {
                            if pending.item.url.is_none() || rank > pending.link_rank {
                                pending.item.url = Some(href);
                                pending.link_rank = rank;
                            }
                        }
                    }
                    if !empty {
                        field = Some(name);
                        buf.clear();
                    }
                }
                if !empty {
                    depth += 1;
                }
            }
            Event::Text(t) => {
                if field.is_some() {
                    let raw = String::from_utf8_lossy(t.as_ref()).into_owned();
                    let value = quick_xml::escape::unescape_with(&raw, html_entity)
                        .map(|c| c.into_owned())
                        .unwrap_or(raw);
                    push_text(&mut buf, &value);
                }
            }
            Event::CData(c) => {
                if field.is_some() {
                    push_text(&mut buf, &String::from_utf8_lossy(c.as_ref()));
                }
            }
            Event::End(_) => {
                depth = depth.saturating_sub(1);
                if item_depth == Some(depth) {
                    finish(&mut pending, &mut out);
                    item_depth = None;
                    field = None;
                } else if item_depth.is_some_and(|d| depth == d + 1) {
                    if let Some(name) = field.take() {
                        assign(&dialect, &mut pending, &name, std::mem::take(&mut buf));
                    }
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if dialect == Dialect::Empty {
        return Err(fail(&dialect, "document has no elements".into()));
    }
    if depth != 0 {
        return Err(fail(&dialect, "unclosed elements at end of document".into()));
    }
    Ok(out)
}

fn push_text(buf: &mut String, s: &str) {
    if !buf.is_empty() && !s.is_empty() {
        buf.push(' ');
    }
    buf.push_str(s);
}

fn assign(dialect: &Dialect, p: &mut Pending, name: &str, value: String) {
    let value = value.trim().to_string();
    if value.is_empty() {
        return;
    }
    let set = |slot: &mut Option<String>, v: String| {
        if slot.is_none() {
            *slot = Some(v);
        }
    };
    match (dialect, name) {
        (Dialect::Atom, "id") => set(&mut p.item.guid, value),
        (Dialect::Atom, "title") => set(&mut p.item.title, value),
        (Dialect::Atom, "published") => p.atom_published = parse_date(&value),
        (Dialect::Atom, "updated") => p.atom_updated = parse_date(&value),
        (Dialect::Atom, "summary") => set(&mut p.item.description, value),
        (Dialect::Atom, "content") => p.content = Some(value),
        (Dialect::Atom, _) => {}
        (_, "link") => set(&mut p.item.url, value),
        (_, "guid") => p.item.guid = Some(value),
        (_, "title") => set(&mut p.item.title, value),
        (_, "pubDate") => p.item.pub_date = parse_date(&value).or(p.item.pub_date),
        (_, "date") => {
            if p.item.pub_date.is_none() {
                p.item.pub_date = parse_date(&value);
            }
        }
        (_, "description") => set(&mut p.item.description, value),
        (_, "encoded") => p.content = Some(value),
        _ => {}
    }
}

fn finish(p: &mut Pending, out: &mut ParsedFeed) {
    let mut p = std::mem::take(p);
    if p.item.pub_date.is_none() {
        p.item.pub_date = p.atom_published.or(p.atom_updated);
    }
    if p.item.description.is_none() {
        p.item.description = p.content.take();
    }
    if p.item.url.is_none() && p.item.guid.is_none() {
        out.dropped.push(format!("item {:?} has no url or guid", p.item.title.as_deref().unwrap_or("")));
        return;
    }
    out.items.push(p.item);
}

/// Parses the date formats feeds use in practice: RFC 2822, RFC 3339, and a
/// few looser ISO-like forms read as UTC.
pub fn parse_date(s: &str) -> Option<DateTime<Utc>> {
    let s = s.trim();
    if let Ok(d) = DateTime::parse_from_rfc2822(s) {
        return Some(d.with_timezone(&Utc));
    }
    // Feeds often carry a weekday that disagrees with the date.
    if let Some((_, rest)) = s.split_once(", ") {
        if let Ok(d) = DateTime::parse_from_rfc2822(rest) {
            return Some(d.with_timezone(&Utc));
        }
    }
    if let Ok(d) = DateTime::parse_from_rfc3339(s) {
        return Some(d.with_timezone(&Utc));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f%z", "%Y-%m-%d %H:%M:%S%.f%z", "%a, %d %b %Y %H:%M:%S %Z"] {
        if let Ok(d) = DateTime::parse_from_str(s, fmt) {
            return Some(d.with_timezone(&Utc));
        }
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f", "%Y-%m-%dT%H:%M", "%a, %d %b %Y %H:%M:%S GMT"] {
        if let Ok(d) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(d.and_utc());
        }
    }
    NaiveDate::parse_from_str(s.get(..10).unwrap_or(s), "%Y-%m-%d")
        .ok()
        .filter(|_| s.len() == 10)
        .map(|d| d.and_hms_opt(0, 0, 0).expect("midnight").and_utc())
}
