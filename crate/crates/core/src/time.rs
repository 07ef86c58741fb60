//! Time spans measured in fractional seconds.
//!
//! All timestamps in the pipeline are normalized to seconds with millisecond
//! precision, regardless of the source format's notation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SpanError {
    #[error("span start {0} is negative")]
    NegativeStart(f64),
    #[error("span end {end} is not after start {start}")]
    Inverted { start: f64, end: f64 },
}

/// A half-open interval `[start, end)` on a recording's timeline, in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSpan {
    pub start_s: f64,
    pub end_s: f64,
}

impl TimeSpan {
    pub fn new(start_s: f64, end_s: f64) -> Result<Self, SpanError> {
        if start_s < 0.0 || !start_s.is_finite() {
            return Err(SpanError::NegativeStart(start_s));
        }
        if !(end_s > start_s) || !end_s.is_finite() {
            return Err(SpanError::Inverted {
                start: start_s,
                end: end_s,
            });
        }
        Ok(TimeSpan { start_s, end_s })
    }

    pub fn duration(&self) -> f64 {
        self.end_s - self.start_s
    }

    /// Smallest span covering both `self` and `other`.
    pub fn hull(&self, other: &TimeSpan) -> TimeSpan {
        TimeSpan {
            start_s: self.start_s.min(other.start_s),
            end_s: self.end_s.max(other.end_s),
        }
    }

    /// True when `other` lies strictly inside `self` (shared endpoints do not
    /// count as nesting).
    pub fn strictly_contains(&self, other: &TimeSpan) -> bool {
        (self.start_s < other.start_s && self.end_s >= other.end_s)
            || (self.start_s <= other.start_s && self.end_s > other.end_s)
    }

    pub fn overlaps(&self, other: &TimeSpan) -> bool {
        self.start_s < other.end_s && other.start_s < self.end_s
    }
}

/// Rounds to millisecond precision. Applied once at parse time so the rest of
/// the pipeline never sees sub-millisecond noise.
pub fn round_ms(seconds: f64) -> f64 {
    (seconds * 1000.0).round() / 1000.0
}

/// Formats seconds with millisecond precision for CSV output.
pub fn format_seconds(seconds: f64) -> String {
    format!("{:.3}", seconds)
}
