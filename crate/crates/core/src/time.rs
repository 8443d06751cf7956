//! Timestamps are UTC epoch milliseconds; calendar days are resolved in the
//! player's IANA timezone at read time.

use std::fmt;
use std::ops::{Add, Sub};

use chrono::{DateTime, NaiveDate, TimeZone, Utc};
use chrono_tz::Tz;
use serde::{Deserialize, Serialize};

pub const HOUR_MS: i64 = 3_600_000;
pub const DAY_MS: i64 = 24 * HOUR_MS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default)]
#[serde(transparent)]
pub struct Timestamp(pub i64);

impl Timestamp {
    pub fn from_millis(ms: i64) -> Self {
        Timestamp(ms)
    }

    pub fn millis(self) -> i64 {
        self.0
    }

    pub fn now() -> Self {
        Timestamp(Utc::now().timestamp_millis())
    }

    pub fn plus_hours(self, h: i64) -> Self {
        Timestamp(self.0 + h * HOUR_MS)
    }

    pub fn plus_days(self, d: i64) -> Self {
        Timestamp(self.0 + d * DAY_MS)
    }

    /// Elapsed time since `earlier` in fractional hours (negative if `earlier` is later).
    pub fn hours_since(self, earlier: Timestamp) -> f64 {
        (self.0 - earlier.0) as f64 / HOUR_MS as f64
    }

    pub fn to_utc(self) -> DateTime<Utc> {
        Utc.timestamp_millis_opt(self.0)
            .single()
            .unwrap_or(DateTime::<Utc>::MIN_UTC)
    }

    pub fn local_date(self, tz: Tz) -> NaiveDate {
        self.to_utc().with_timezone(&tz).date_naive()
    }
}

impl Add<i64> for Timestamp {
    type Output = Timestamp;
    fn add(self, ms: i64) -> Timestamp {
        Timestamp(self.0 + ms)
    }
}

impl Sub for Timestamp {
    type Output = i64;
    fn sub(self, rhs: Timestamp) -> i64 {
        self.0 - rhs.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_utc().to_rfc3339())
    }
}

/// Parse an IANA timezone name, e.g. `"Europe/Berlin"` or `"UTC"`.
pub fn parse_tz(name: &str) -> Option<Tz> {
    name.parse::<Tz>().ok()
}

/// The UTC instant at which local calendar day `date` begins in `tz`.
pub fn start_of_day(date: NaiveDate, tz: Tz) -> Timestamp {
    let naive = date.and_hms_opt(0, 0, 0).expect("midnight exists");
    let dt = tz
        .from_local_datetime(&naive)
        .earliest()
        // DST gap at midnight: fall back to one hour later
        .or_else(|| tz.from_local_datetime(&(naive + chrono::Duration::hours(1))).earliest())
        .expect("local midnight resolvable");
    Timestamp(dt.with_timezone(&Utc).timestamp_millis())
}
