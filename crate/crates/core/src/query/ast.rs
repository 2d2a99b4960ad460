use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use chrono::{Datelike, NaiveDate, NaiveDateTime};
use core::fmt;

/// A parsed Boolean query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Query {
    /// A single lowercased token.
    Term(String),
    /// Every token starting with the stem (`vote*`).
    Prefix(String),
    /// Tokens in order and adjacent, or all within a window when `proximity` is set.
    Phrase {
        tokens: Vec<String>,
        proximity: Option<u32>,
    },
    And(Vec<Query>),
    Or(Vec<Query>),
    Not(Box<Query>),
    Field(FieldFilter),
}

/// A `publish_date:` value: either an exact second or a whole day.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PublishDate {
    Instant(NaiveDateTime),
    Day(NaiveDate),
}

/// A structured filter on story metadata.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FieldFilter {
    StoryId(u64),
    MediaId(u64),
    PublishDate(PublishDate),
    PublishDay(NaiveDate),
    /// Holds the Sunday that starts the week.
    PublishWeek(NaiveDate),
    /// Holds the first day of the month.
    PublishMonth(NaiveDate),
    PublishYear(i32),
    TagsIdStories(u64),
    TagsIdMedia(u64),
    TimespansId(u64),
    Language(String),
}

/// Field names accepted by the parser.
pub const FIELD_NAMES: [&str; 11] = [
    "story_id",
    "media_id",
    "publish_date",
    "publish_day",
    "publish_week",
    "publish_month",
    "publish_year",
    "tags_id_stories",
    "tags_id_media",
    "timespans_id",
    "language",
];

impl FieldFilter {
    pub fn name(&self) -> &'static str {
        match self {
            FieldFilter::StoryId(_) => "story_id",
            FieldFilter::MediaId(_) => "media_id",
            FieldFilter::PublishDate(_) => "publish_date",
            FieldFilter::PublishDay(_) => "publish_day",
            FieldFilter::PublishWeek(_) => "publish_week",
            FieldFilter::PublishMonth(_) => "publish_month",
            FieldFilter::PublishYear(_) => "publish_year",
            FieldFilter::TagsIdStories(_) => "tags_id_stories",
            FieldFilter::TagsIdMedia(_) => "tags_id_media",
            FieldFilter::TimespansId(_) => "timespans_id",
            FieldFilter::Language(_) => "language",
        }
    }
}

impl Query {
    /// Conjunction that avoids wrapping a single operand.
    pub fn and(mut children: Vec<Query>) -> Query {
        if children.len() == 1 {
            children.pop().expect("one child")
        } else {
            Query::And(children)
        }
    }

    /// Disjunction that avoids wrapping a single operand.
    pub fn or(mut children: Vec<Query>) -> Query {
        if children.len() == 1 {
            children.pop().expect("one child")
        } else {
            Query::Or(children)
        }
    }

    pub fn negate(self) -> Query {
        Query::Not(Box::new(self))
    }

    /// Number of leaf nodes (terms, prefixes, phrases and field filters).
    pub fn leaf_count(&self) -> usize {
        match self {
            Query::And(c) | Query::Or(c) => c.iter().map(Query::leaf_count).sum(),
            Query::Not(inner) => inner.leaf_count(),
            _ => 1,
        }
    }

    fn is_compound(&self) -> bool {
        matches!(self, Query::And(_) | Query::Or(_))
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, q: &Query) -> fmt::Result {
    if q.is_compound() {
        write!(f, "({q})")
    } else {
        write!(f, "{q}")
    }
}

/// Renders the query in a form the parser reads back to an identical tree.
impl fmt::Display for Query {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Query::Term(t) => f.write_str(t),
            Query::Prefix(stem) => write!(f, "{stem}*"),
            Query::Phrase { tokens, proximity } => {
                f.write_str("\"")?;
                for (i, t) in tokens.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    f.write_str(t)?;
                }
                f.write_str("\"")?;
                if let Some(n) = proximity {
                    write!(f, "~{n}")?;
                }
                Ok(())
            }
            Query::And(children) | Query::Or(children) => {
                let op = if matches!(self, Query::And(_)) { " AND " } else { " OR " };
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(op)?;
                    }
                    write_operand(f, c)?;
                }
                Ok(())
            }
            Query::Not(inner) => {
                f.write_str("NOT ")?;
                write_operand(f, inner)
            }
            Query::Field(filter) => write!(f, "{filter}"),
        }
    }
}

impl fmt::Display for FieldFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = self.name();
        match self {
            FieldFilter::StoryId(v)
            | FieldFilter::MediaId(v)
            | FieldFilter::TagsIdStories(v)
            | FieldFilter::TagsIdMedia(v)
            | FieldFilter::TimespansId(v) => write!(f, "{name}:{v}"),
            FieldFilter::PublishDate(PublishDate::Instant(t)) => {
                write!(f, "{name}:\"{}\"", t.format("%Y-%m-%d %H:%M:%S"))
            }
            FieldFilter::PublishDate(PublishDate::Day(d))
            | FieldFilter::PublishDay(d)
            | FieldFilter::PublishWeek(d) => write!(f, "{name}:{}", d.format("%Y-%m-%d")),
            FieldFilter::PublishMonth(d) => write!(f, "{name}:{:04}-{:02}", d.year(), d.month()),
            FieldFilter::PublishYear(y) => write!(f, "{name}:{y:04}"),
            FieldFilter::Language(l) => write!(f, "{name}:{l}"),
        }
    }
}
