//! Nanosecond timestamps and exact decimal-seconds conversion.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

pub const NANOS_PER_SEC: u64 = 1_000_000_000;

/// Nanoseconds since monitor start (or since an epoch chosen by the data).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0);

    pub fn from_secs(secs: u64) -> Timestamp {
        Timestamp(secs * NANOS_PER_SEC)
    }

    pub fn from_millis(ms: u64) -> Timestamp {
        Timestamp(ms * 1_000_000)
    }

    pub fn nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 / NANOS_PER_SEC as f64
    }

    /// Parses decimal seconds such as `"12.5"` without going through floating point.
    pub fn parse_seconds(text: &str) -> Result<Timestamp, TimeParseError> {
        parse_decimal_seconds(text).map(Timestamp)
    }

    /// Converts floating-point seconds via their shortest decimal representation,
    /// so `0.1_f64` maps to exactly 100ms, matching the text route.
    pub fn from_secs_f64(secs: f64) -> Result<Timestamp, TimeParseError> {
        if !secs.is_finite() {
            return Err(TimeParseError(format!("{secs}")));
        }
        let text = format!("{secs:?}");
        if text.contains('e') {
            // Debug formatting switches to exponent notation outside 1e-5..1e16.
            let ns = (secs * NANOS_PER_SEC as f64).round();
            if !(0.0..=u64::MAX as f64).contains(&ns) {
                return Err(TimeParseError(text));
            }
            return Ok(Timestamp(ns as u64));
        }
        Timestamp::parse_seconds(&text)
    }
}

impl Add<u64> for Timestamp {
    type Output = Timestamp;
    fn add(self, rhs: u64) -> Timestamp {
        Timestamp(self.0.saturating_add(rhs))
    }
}

impl Sub for Timestamp {
    type Output = u64;
    fn sub(self, rhs: Timestamp) -> u64 {
        self.0.saturating_sub(rhs.0)
    }
}

/// Formats as decimal seconds with at least one fractional digit (`1.0`, `0.25`).
impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let secs = self.0 / NANOS_PER_SEC;
        let frac = self.0 % NANOS_PER_SEC;
        if frac == 0 {
            return write!(f, "{secs}.0");
        }
        let digits = format!("{frac:09}");
        write!(f, "{secs}.{}", digits.trim_end_matches('0'))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid time value `{0}`: expected non-negative decimal seconds with at most nanosecond precision")]
pub struct TimeParseError(pub String);

fn parse_decimal_seconds(text: &str) -> Result<u64, TimeParseError> {
    let err = || TimeParseError(text.to_string());
    let t = text.trim();
    let (int_part, frac_part) = match t.split_once('.') {
        Some((i, f)) => (i, f),
        None => (t, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return Err(err());
    }
    let frac_trimmed = frac_part.trim_end_matches('0');
    if frac_trimmed.len() > 9 {
        return Err(err());
    }
    let secs: u64 = if int_part.is_empty() { 0 } else { int_part.parse().map_err(|_| err())? };
    let mut frac: u64 = 0;
    for (i, b) in frac_trimmed.bytes().enumerate() {
        frac += u64::from(b - b'0') * 10u64.pow(8 - i as u32);
    }
    secs.checked_mul(NANOS_PER_SEC).and_then(|s| s.checked_add(frac)).ok_or_else(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_seconds_are_exact() {
        assert_eq!(Timestamp::parse_seconds("12.5").unwrap(), Timestamp(12_500_000_000));
        assert_eq!(Timestamp::parse_seconds("0.1").unwrap(), Timestamp(100_000_000));
        assert_eq!(Timestamp::parse_seconds("3").unwrap(), Timestamp::from_secs(3));
        assert_eq!(Timestamp::parse_seconds(".5").unwrap(), Timestamp(500_000_000));
        assert_eq!(Timestamp::parse_seconds("1.000000001").unwrap(), Timestamp(1_000_000_001));
        assert!(Timestamp::parse_seconds("1.0000000001").is_err());
        assert!(Timestamp::parse_seconds("-1").is_err());
        assert!(Timestamp::parse_seconds("").is_err());
        assert!(Timestamp::parse_seconds("1e3").is_err());
    }

    #[test]
    fn float_route_matches_text_route() {
        for text in ["0.1", "0.3", "12.345678", "1699999999.25", "7.0"] {
            let f: f64 = text.parse().unwrap();
            assert_eq!(Timestamp::from_secs_f64(f).unwrap(), Timestamp::parse_seconds(text).unwrap(), "{text}");
        }
    }

    #[test]
    fn display_trims_fraction() {
        assert_eq!(Timestamp(1_000_000_000).to_string(), "1.0");
        assert_eq!(Timestamp(100_000_000).to_string(), "0.1");
        assert_eq!(Timestamp(12_345_000_001).to_string(), "12.345000001");
        assert_eq!(Timestamp(0).to_string(), "0.0");
    }
}
