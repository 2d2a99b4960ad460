//! Progressive backoff for feed polling.
//!
//! A feed that yields a new story is polled again five minutes later. Every
//! fruitless poll doubles the interval, up to a ceiling of one week.

use chrono::{DateTime, TimeDelta, Utc};
use core::fmt;

/// Polling interval, in whole minutes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PollInterval(u32);

/// Five minutes.
pub const MIN_POLL_INTERVAL: PollInterval = PollInterval(5);
/// One week.
pub const MAX_POLL_INTERVAL: PollInterval = PollInterval(7 * 24 * 60);

impl PollInterval {
    /// Builds an interval clamped to `[MIN_POLL_INTERVAL, MAX_POLL_INTERVAL]`.
    pub fn from_minutes(minutes: u32) -> Self {
        PollInterval(minutes.clamp(MIN_POLL_INTERVAL.0, MAX_POLL_INTERVAL.0))
    }

    pub fn minutes(self) -> u32 {
        self.0
    }

    pub fn as_delta(self) -> TimeDelta {
        TimeDelta::minutes(i64::from(self.0))
    }

    /// The interval after one more poll.
    pub fn next(self, found_new_story: bool) -> Self {
        if found_new_story {
            MIN_POLL_INTERVAL
        } else {
            PollInterval::from_minutes(self.0.saturating_mul(2))
        }
    }
}

impl Default for PollInterval {
    fn default() -> Self {
        MIN_POLL_INTERVAL
    }
}

impl fmt::Display for PollInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}m", self.0)
    }
}

/// The polling state carried by a feed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PollSchedule {
    pub interval: PollInterval,
    pub next_poll_at: DateTime<Utc>,
}

impl PollSchedule {
    /// Schedule for a feed added at `now`: first poll five minutes later.
    pub fn new(now: DateTime<Utc>) -> Self {
        PollSchedule {
            interval: MIN_POLL_INTERVAL,
            next_poll_at: now + MIN_POLL_INTERVAL.as_delta(),
        }
    }

    pub fn is_due(&self, now: DateTime<Utc>) -> bool {
        self.next_poll_at <= now
    }

    /// Reschedules after a poll completed at `now`.
    pub fn after_poll(self, found_new_story: bool, now: DateTime<Utc>) -> Self {
        let interval = self.interval.next(found_new_story);
        PollSchedule {
            interval,
            next_poll_at: now + interval.as_delta(),
        }
    }
}
