//! Decimal seconds with millisecond resolution.

use crate::error::{Result, ScdError};

/// Parses a non-negative decimal number of seconds with at most three
/// fractional digits. The value is exactly `millis / 1000`.
pub fn parse_seconds(text: &str) -> Result<f64> {
    parse_millis(text).map(|ms| ms as f64 / 1000.0)
}

pub(crate) fn parse_millis(text: &str) -> Result<i64> {
    let bad = || ScdError::Data(format!("invalid time value {text:?}"));
    let (int, frac) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    if frac.len() > 3 {
        return Err(ScdError::Data(format!(
            "time value {text:?} has more than millisecond precision"
        )));
    }
    let whole: i64 = if int.is_empty() {
        0
    } else {
        int.parse().map_err(|_| bad())?
    };
    let mut ms = 0i64;
    for (i, b) in frac.bytes().enumerate() {
        ms += (b - b'0') as i64 * 10i64.pow(2 - i as u32);
    }
    whole
        .checked_mul(1000)
        .and_then(|w| w.checked_add(ms))
        .ok_or_else(bad)
}

pub(crate) fn to_millis(seconds: f64) -> i64 {
    (seconds * 1000.0).round() as i64
}

/// Formats seconds at millisecond resolution: two decimals when the
/// value is a whole number of centiseconds, three otherwise.
pub fn format_seconds(seconds: f64) -> String {
    format_millis(to_millis(seconds))
}

pub(crate) fn format_millis(ms: i64) -> String {
    let sign = if ms < 0 { "-" } else { "" };
    let ms = ms.abs();
    let (whole, frac) = (ms / 1000, ms % 1000);
    if frac % 10 == 0 {
        format!("{sign}{whole}.{:02}", frac / 10)
    } else {
        format!("{sign}{whole}.{frac:03}")
    }
}
