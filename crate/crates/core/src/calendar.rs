//! Calendar bucketing. Weeks run Sunday through Saturday.

use alloc::vec::Vec;
use chrono::{Datelike, NaiveDate, TimeDelta};
use core::fmt;
use core::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Bucket {
    Day,
    Week,
    Month,
}

impl Bucket {
    /// First day of the bucket containing `date`.
    pub fn start_of(self, date: NaiveDate) -> NaiveDate {
        match self {
            Bucket::Day => date,
            Bucket::Week => week_start(date),
            Bucket::Month => month_start(date),
        }
    }

    /// Last day of the bucket containing `date`.
    pub fn end_of(self, date: NaiveDate) -> NaiveDate {
        match self {
            Bucket::Day => date,
            Bucket::Week => week_start(date) + TimeDelta::days(6),
            Bucket::Month => month_end(date),
        }
    }

    /// Start of the bucket following the one that starts at `start`.
    pub fn following(self, start: NaiveDate) -> NaiveDate {
        self.end_of(start) + TimeDelta::days(1)
    }

    /// Start dates of every bucket overlapping `[first, last]`, in order.
    pub fn starts_between(self, first: NaiveDate, last: NaiveDate) -> Vec<NaiveDate> {
        let mut out = Vec::new();
        if first > last {
            return out;
        }
        let mut cur = self.start_of(first);
        while cur <= last {
            out.push(cur);
            cur = self.following(cur);
        }
        out
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Bucket::Day => "day",
            Bucket::Week => "week",
            Bucket::Month => "month",
        }
    }
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownBucket;

impl fmt::Display for UnknownBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("bucket must be one of day, week, month")
    }
}

impl FromStr for Bucket {
    type Err = UnknownBucket;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "day" => Ok(Bucket::Day),
            "week" => Ok(Bucket::Week),
            "month" => Ok(Bucket::Month),
            _ => Err(UnknownBucket),
        }
    }
}

/// The Sunday on or before `date`.
pub fn week_start(date: NaiveDate) -> NaiveDate {
    date - TimeDelta::days(i64::from(date.weekday().num_days_from_sunday()))
}

pub fn month_start(date: NaiveDate) -> NaiveDate {
    date.with_day(1).expect("day 1 exists in every month")
}

pub fn month_end(date: NaiveDate) -> NaiveDate {
    let (y, m) = if date.month() == 12 {
        (date.year() + 1, 1)
    } else {
        (date.year(), date.month() + 1)
    };
    NaiveDate::from_ymd_opt(y, m, 1).expect("valid month") - TimeDelta::days(1)
}
