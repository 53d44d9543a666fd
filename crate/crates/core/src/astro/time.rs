use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Sub};

use chrono::{NaiveDate, NaiveDateTime};

use crate::constants::SECONDS_PER_DAY;

use super::AstroError;

/// Seconds past J2000 (2000-01-01 12:00:00) on a single uniform TDB-like scale.
///
/// Calendar strings are converted with a fixed mapping: the calendar date/time is read as TDB
/// directly, with no leap-second or UTC offset applied.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Epoch(f64);

impl Epoch {
    pub const J2000: Epoch = Epoch(0.0);

    pub fn from_seconds(seconds: f64) -> Self {
        Epoch(seconds)
    }

    pub fn seconds(self) -> f64 {
        self.0
    }

    pub fn from_days(days: f64) -> Self {
        Epoch(days * SECONDS_PER_DAY)
    }

    pub fn days(self) -> f64 {
        self.0 / SECONDS_PER_DAY
    }

    /// Julian centuries past J2000.
    pub fn centuries(self) -> f64 {
        self.days() / crate::constants::DAYS_PER_JULIAN_CENTURY
    }

    /// Parses `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM:SS[.fff]` or `YYYY-MM-DD HH:MM:SS[.fff]`.
    pub fn from_calendar(text: &str) -> Result<Self, AstroError> {
        let text = text.trim();
        let parsed = NaiveDateTime::parse_from_str(text, "%Y-%m-%dT%H:%M:%S%.f")
            .or_else(|_| NaiveDateTime::parse_from_str(text, "%Y-%m-%d %H:%M:%S%.f"))
            .or_else(|_| {
                NaiveDate::parse_from_str(text, "%Y-%m-%d").map(|d| d.and_hms_opt(0, 0, 0).expect("midnight is valid"))
            })
            .map_err(|_| AstroError::BadCalendar(text.to_string()))?;
        let j2000 = NaiveDate::from_ymd_opt(2000, 1, 1)
            .and_then(|d| d.and_hms_opt(12, 0, 0))
            .expect("J2000 is a valid date");
        let delta = parsed - j2000;
        let seconds = delta.num_seconds() as f64 + f64::from(delta.subsec_nanos()) * 1e-9;
        Ok(Epoch(seconds))
    }

    /// Seconds from `earlier` to `self`.
    pub fn since(self, earlier: Epoch) -> f64 {
        self.0 - earlier.0
    }
}

impl Add<f64> for Epoch {
    type Output = Epoch;
    fn add(self, seconds: f64) -> Epoch {
        Epoch(self.0 + seconds)
    }
}

impl Sub<f64> for Epoch {
    type Output = Epoch;
    fn sub(self, seconds: f64) -> Epoch {
        Epoch(self.0 - seconds)
    }
}

impl Sub<Epoch> for Epoch {
    type Output = f64;
    fn sub(self, other: Epoch) -> f64 {
        self.0 - other.0
    }
}

impl Eq for Epoch {}

impl PartialOrd for Epoch {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Epoch {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for Epoch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "J2000{:+.3}s", self.0)
    }
}
