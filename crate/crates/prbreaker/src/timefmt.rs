//! ISO-8601 UTC timestamp handling for the corpus wire format.
//!
//! Internally all timestamps are integer Unix seconds; sub-second input
//! resolution is truncated on parse.

use chrono::{DateTime, TimeZone, Utc};
use thiserror::Error;

#[derive(Debug, Error)]
#[error("invalid timestamp {input:?}: {reason}")]
pub struct TimestampError {
    pub input: String,
    pub reason: String,
}

/// Parses an ISO-8601 / RFC-3339 timestamp into Unix seconds UTC.
pub fn parse_iso_utc(input: &str) -> Result<i64, TimestampError> {
    DateTime::parse_from_rfc3339(input)
        .map(|dt| dt.timestamp())
        .map_err(|e| TimestampError {
            input: input.to_string(),
            reason: e.to_string(),
        })
}

/// Formats Unix seconds as `YYYY-MM-DDTHH:MM:SSZ`.
pub fn format_iso_utc(seconds: i64) -> String {
    let dt: DateTime<Utc> = Utc.timestamp_opt(seconds, 0).single().unwrap_or_default();
    dt.format("%Y-%m-%dT%H:%M:%SZ").to_string()
}

pub const SECONDS_PER_DAY: i64 = 86_400;
