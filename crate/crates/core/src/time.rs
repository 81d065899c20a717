//! Millisecond timestamps.
//!
//! RTTM and CTM files carry decimal seconds. Everything downstream works on
//! integer milliseconds so that boundary comparisons and duration sums are
//! exact.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Millis(pub i64);

impl Millis {
    pub const ZERO: Millis = Millis(0);

    pub fn from_secs_f64(secs: f64) -> Millis {
        Millis((secs * 1000.0).round_ties_even() as i64)
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    /// Parse a decimal-seconds string, rounding to the nearest millisecond
    /// with ties going to the even neighbour.
    ///
    /// Plain decimals are handled digit by digit, so `"0.0005"` rounds to 0 ms
    /// and `"0.0015"` to 2 ms regardless of binary float representation.
    pub fn parse_secs(text: &str) -> Option<Millis> {
        let s = text.trim();
        if s.is_empty() {
            return None;
        }
        if s.contains(['e', 'E']) {
            let v: f64 = s.parse().ok()?;
            return v.is_finite().then(|| Millis::from_secs_f64(v));
        }
        let (negative, body) = match s.as_bytes()[0] {
            b'-' => (true, &s[1..]),
            b'+' => (false, &s[1..]),
            _ => (false, s),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        if int_part.is_empty() && frac_part.is_empty() {
            return None;
        }
        if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let whole: i64 = if int_part.is_empty() { 0 } else { int_part.parse().ok()? };
        let frac = frac_part.as_bytes();
        let mut ms: i64 = 0;
        for k in 0..3 {
            let digit = frac.get(k).map_or(0, |d| (d - b'0') as i64);
            ms = ms * 10 + digit;
        }
        let rest = if frac.len() > 3 { &frac[3..] } else { &[][..] };
        if let Some((&first, tail)) = rest.split_first() {
            let first = first - b'0';
            let tail_nonzero = tail.iter().any(|&d| d != b'0');
            let round_up = first > 5 || (first == 5 && (tail_nonzero || ms % 2 == 1));
            if round_up {
                ms += 1;
            }
        }
        let total = whole.checked_mul(1000)?.checked_add(ms)?;
        Some(Millis(if negative { -total } else { total }))
    }
}

impl Add for Millis {
    type Output = Millis;
    fn add(self, rhs: Millis) -> Millis {
        Millis(self.0 + rhs.0)
    }
}

impl Sub for Millis {
    type Output = Millis;
    fn sub(self, rhs: Millis) -> Millis {
        Millis(self.0 - rhs.0)
    }
}

impl fmt::Display for Millis {
    /// Seconds with three decimals, the inverse of [`Millis::parse_secs`].
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:03}", abs / 1000, abs % 1000)
    }
}
