//! Recursive-descent parser for the Boolean query language.
//!
//! ```text
//! expr  := or
//! or    := and (OR and)*
//! and   := unary ((AND)? unary)*
//! unary := NOT unary | '(' expr ')' | phrase | field | term
//! ```
//!
//! Operators are case-insensitive and adjacency means AND. Error positions
//! are character offsets into the input.

use super::ast::{FieldFilter, PublishDate, Query, FIELD_NAMES};
use super::tokenize::{single_token, tokenize};
use crate::calendar::{month_start, week_start};
use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use core::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    EmptyQuery,
    UnbalancedParen,
    UnterminatedPhrase,
    EmptyPhrase,
    InvalidProximity,
    UnknownField(String),
    InvalidFieldValue { field: &'static str, value: String },
    InvalidPrefix,
    EmptyTerm,
    UnexpectedToken(String),
    UnexpectedEnd,
    PureNegation,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Character offset where the problem was detected.
    pub position: usize,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pos = self.position;
        match &self.kind {
            ParseErrorKind::EmptyQuery => write!(f, "empty query"),
            ParseErrorKind::UnbalancedParen => write!(f, "unbalanced parenthesis at {pos}"),
            ParseErrorKind::UnterminatedPhrase => write!(f, "unterminated quote at {pos}"),
            ParseErrorKind::EmptyPhrase => write!(f, "empty phrase at {pos}"),
            ParseErrorKind::InvalidProximity => write!(f, "expected a number after '~' at {pos}"),
            ParseErrorKind::UnknownField(name) => write!(f, "unknown field '{name}' at {pos}"),
            ParseErrorKind::InvalidFieldValue { field, value } => {
                write!(f, "invalid value '{value}' for {field} at {pos}")
            }
            ParseErrorKind::InvalidPrefix => write!(f, "wildcard must follow a single word at {pos}"),
            ParseErrorKind::EmptyTerm => write!(f, "term has no word characters at {pos}"),
            ParseErrorKind::UnexpectedToken(t) => write!(f, "unexpected '{t}' at {pos}"),
            ParseErrorKind::UnexpectedEnd => write!(f, "query ends unexpectedly at {pos}"),
            ParseErrorKind::PureNegation => {
                write!(f, "a query cannot consist only of a negation (at {pos})")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ParseError {}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    LParen,
    RParen,
    And,
    Or,
    Not,
    Word(String),
    Phrase(String, Option<u32>),
    Field(String, String),
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    pos: usize,
}

fn is_break(c: char) -> bool {
    c.is_whitespace() || c == '(' || c == ')' || c == '"'
}

fn lex(input: &str) -> Result<Vec<Spanned>, ParseError> {
    let chars: Vec<char> = input.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        match c {
            '(' => {
                out.push(Spanned { tok: Tok::LParen, pos: start });
                i += 1;
            }
            ')' => {
                out.push(Spanned { tok: Tok::RParen, pos: start });
                i += 1;
            }
            '"' => {
                let (body, next) = read_quoted(&chars, i)?;
                i = next;
                let proximity = if chars.get(i) == Some(&'~') {
                    let digits_start = i + 1;
                    let mut j = digits_start;
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    if j == digits_start || chars.get(j).is_some_and(|c| !is_break(*c)) {
                        return Err(ParseError { kind: ParseErrorKind::InvalidProximity, position: i });
                    }
                    let n: String = chars[digits_start..j].iter().collect();
                    i = j;
                    Some(n.parse::<u32>().map_err(|_| ParseError {
                        kind: ParseErrorKind::InvalidProximity,
                        position: digits_start,
                    })?)
                } else {
                    None
                };
                out.push(Spanned { tok: Tok::Phrase(body, proximity), pos: start });
            }
            _ => {
                while i < chars.len() && !is_break(chars[i]) {
                    i += 1;
                }
                let word: String = chars[start..i].iter().collect();
                let tok = match word.to_ascii_lowercase().as_str() {
                    "and" => Tok::And,
                    "or" => Tok::Or,
                    "not" => Tok::Not,
                    _ => match field_split(&word) {
                        Some((name, value)) => {
                            let mut value = String::from(value);
                            if value.is_empty() && chars.get(i) == Some(&'"') {
                                let (body, next) = read_quoted(&chars, i)?;
                                value = body;
                                i = next;
                            } else if let Some(next) = trailing_time(&chars, i, &value) {
                                let time: String = chars[i..next].iter().collect();
                                value.push_str(&time);
                                i = next;
                            }
                            Tok::Field(name, value)
                        }
                        None => Tok::Word(word),
                    },
                };
                out.push(Spanned { tok, pos: start });
            }
        }
    }
    Ok(out)
}

/// Reads a `"..."` run starting at the opening quote. Returns the body and the
/// index just past the closing quote.
fn read_quoted(chars: &[char], open: usize) -> Result<(String, usize), ParseError> {
    let mut j = open + 1;
    while j < chars.len() && chars[j] != '"' {
        j += 1;
    }
    if j >= chars.len() {
        return Err(ParseError { kind: ParseErrorKind::UnterminatedPhrase, position: open });
    }
    Ok((chars[open + 1..j].iter().collect(), j + 1))
}

/// `name:value` where the name looks like an identifier.
fn field_split(word: &str) -> Option<(String, &str)> {
    let (name, value) = word.split_once(':')?;
    if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphabetic() || c == '_') {
        return None;
    }
    Some((name.to_ascii_lowercase(), value))
}

/// Lets `publish_date:2018-04-17 13:24:12` carry its time part across the space.
fn trailing_time(chars: &[char], at: usize, value: &str) -> Option<usize> {
    if NaiveDate::parse_from_str(value, "%Y-%m-%d").is_err() || chars.get(at) != Some(&' ') {
        return None;
    }
    let mut end = at + 1;
    while end < chars.len() && !is_break(chars[end]) {
        end += 1;
    }
    let candidate: String = chars[at + 1..end].iter().collect();
    NaiveTime::parse_from_str(&candidate, "%H:%M:%S").ok()?;
    Some(end)
}

fn parse_date_or_datetime(value: &str) -> Option<PublishDate> {
    let value = value.trim();
    if let Ok(t) = NaiveDateTime::parse_from_str(value, "%Y-%m-%d %H:%M:%S") {
        return Some(PublishDate::Instant(t));
    }
    if let Ok(t) = NaiveDateTime::parse_from_str(value, "%Y-%m-%dT%H:%M:%S") {
        return Some(PublishDate::Instant(t));
    }
    NaiveDate::parse_from_str(value, "%Y-%m-%d").ok().map(PublishDate::Day)
}

fn day_of(value: &str) -> Option<NaiveDate> {
    match parse_date_or_datetime(value)? {
        PublishDate::Instant(t) => Some(t.date()),
        PublishDate::Day(d) => Some(d),
    }
}

fn field_filter(name: &str, value: &str, position: usize) -> Result<FieldFilter, ParseError> {
    let Some(&field) = FIELD_NAMES.iter().find(|f| **f == name) else {
        return Err(ParseError { kind: ParseErrorKind::UnknownField(name.into()), position });
    };
    let invalid = || ParseError {
        kind: ParseErrorKind::InvalidFieldValue { field, value: value.into() },
        position,
    };
    let id = || value.parse::<u64>().map_err(|_| invalid());
    Ok(match field {
        "story_id" => FieldFilter::StoryId(id()?),
        "media_id" => FieldFilter::MediaId(id()?),
        "tags_id_stories" => FieldFilter::TagsIdStories(id()?),
        "tags_id_media" => FieldFilter::TagsIdMedia(id()?),
        "timespans_id" => FieldFilter::TimespansId(id()?),
        "publish_date" => FieldFilter::PublishDate(parse_date_or_datetime(value).ok_or_else(invalid)?),
        "publish_day" => FieldFilter::PublishDay(day_of(value).ok_or_else(invalid)?),
        "publish_week" => FieldFilter::PublishWeek(week_start(day_of(value).ok_or_else(invalid)?)),
        "publish_month" => {
            let day = day_of(value)
                .or_else(|| NaiveDate::parse_from_str(&alloc::format!("{value}-01"), "%Y-%m-%d").ok())
                .ok_or_else(invalid)?;
            FieldFilter::PublishMonth(month_start(day))
        }
        "publish_year" => {
            use chrono::Datelike;
            let year = if value.len() == 4 && value.bytes().all(|b| b.is_ascii_digit()) {
                value.parse::<i32>().map_err(|_| invalid())?
            } else {
                day_of(value).ok_or_else(invalid)?.year()
            };
            FieldFilter::PublishYear(year)
        }
        "language" => {
            let lang = value.to_ascii_lowercase();
            if lang.is_empty() || !lang.bytes().all(|b| b.is_ascii_lowercase()) {
                return Err(invalid());
            }
            FieldFilter::Language(lang)
        }
        _ => unreachable!("every FIELD_NAMES entry is handled"),
    })
}

struct Parser {
    toks: Vec<Spanned>,
    at: usize,
    end_pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|s| &s.tok)
    }

    fn bump(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn or(&mut self) -> Result<Query, ParseError> {
        let mut children = Vec::from([self.and()?]);
        while self.peek() == Some(&Tok::Or) {
            self.bump();
            children.push(self.and()?);
        }
        Ok(Query::or(children))
    }

    fn and(&mut self) -> Result<Query, ParseError> {
        let mut children = Vec::from([self.unary()?]);
        loop {
            match self.peek() {
                Some(Tok::And) => {
                    self.bump();
                    children.push(self.unary()?);
                }
                Some(Tok::Not | Tok::LParen | Tok::Word(_) | Tok::Phrase(..) | Tok::Field(..)) => {
                    children.push(self.unary()?);
                }
                _ => break,
            }
        }
        Ok(Query::and(children))
    }

    fn unary(&mut self) -> Result<Query, ParseError> {
        let Some(Spanned { tok, pos }) = self.bump() else {
            return Err(ParseError { kind: ParseErrorKind::UnexpectedEnd, position: self.end_pos });
        };
        match tok {
            Tok::Not => Ok(Query::Not(Box::new(self.unary()?))),
            Tok::LParen => {
                let inner = self.or()?;
                match self.bump() {
                    Some(Spanned { tok: Tok::RParen, .. }) => Ok(inner),
                    Some(Spanned { tok, pos: p }) => Err(ParseError {
                        kind: ParseErrorKind::UnexpectedToken(describe(&tok)),
                        position: p,
                    }),
                    None => Err(ParseError { kind: ParseErrorKind::UnbalancedParen, position: pos }),
                }
            }
            Tok::RParen => Err(ParseError { kind: ParseErrorKind::UnbalancedParen, position: pos }),
            Tok::And | Tok::Or => Err(ParseError {
                kind: ParseErrorKind::UnexpectedToken(describe(&tok)),
                position: pos,
            }),
            Tok::Phrase(body, proximity) => {
                let tokens = tokenize(&body);
                if tokens.is_empty() {
                    return Err(ParseError { kind: ParseErrorKind::EmptyPhrase, position: pos });
                }
                Ok(Query::Phrase { tokens, proximity })
            }
            Tok::Field(name, value) => Ok(Query::Field(field_filter(&name, &value, pos)?)),
            Tok::Word(word) => word_query(&word, pos),
        }
    }
}

fn word_query(word: &str, pos: usize) -> Result<Query, ParseError> {
    if let Some(stem) = word.strip_suffix('*') {
        let stem = stem.trim_end_matches('*');
        return single_token(stem)
            .filter(|t| t.chars().count() == stem.chars().count())
            .map(Query::Prefix)
            .ok_or(ParseError { kind: ParseErrorKind::InvalidPrefix, position: pos });
    }
    let mut tokens = tokenize(word);
    match tokens.len() {
        0 => Err(ParseError { kind: ParseErrorKind::EmptyTerm, position: pos }),
        1 => Ok(Query::Term(tokens.pop().expect("one token"))),
        _ => Ok(Query::Phrase { tokens, proximity: None }),
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::LParen => "(".into(),
        Tok::RParen => ")".into(),
        Tok::And => "AND".into(),
        Tok::Or => "OR".into(),
        Tok::Not => "NOT".into(),
        Tok::Word(w) => w.clone(),
        Tok::Phrase(p, _) => alloc::format!("\"{p}\""),
        Tok::Field(n, v) => alloc::format!("{n}:{v}"),
    }
}

/// Parses a query string. A query whose root is a negation is rejected.
pub fn parse_query(input: &str) -> Result<Query, ParseError> {
    let toks = lex(input)?;
    let end_pos = input.chars().count();
    if toks.is_empty() {
        return Err(ParseError { kind: ParseErrorKind::EmptyQuery, position: 0 });
    }
    let mut parser = Parser { toks, at: 0, end_pos };
    let q = parser.or()?;
    if let Some(Spanned { tok, pos }) = parser.bump() {
        let kind = if tok == Tok::RParen {
            ParseErrorKind::UnbalancedParen
        } else {
            ParseErrorKind::UnexpectedToken(describe(&tok))
        };
        return Err(ParseError { kind, position: pos });
    }
    if matches!(q, Query::Not(_)) {
        return Err(ParseError { kind: ParseErrorKind::PureNegation, position: 0 });
    }
    Ok(q)
}
