use alloc::format;
use alloc::string::String;
use core::fmt;

use serde::{Deserialize, Serialize};

/// An exact fraction of counts, such as 6 matched out of 8 reference items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u32,
    pub den: u32,
}

impl Ratio {
    pub fn new(num: u32, den: u32) -> Self {
        Self { num, den }
    }

    pub fn value(&self) -> Option<f64> {
        (self.den > 0).then(|| self.num as f64 / self.den as f64)
    }

    /// Value in hundredths, rounded half up: 5/8 = 0.625 gives 63.
    pub fn hundredths(&self) -> Option<u64> {
        (self.den > 0).then(|| round_half_up(self.num as u64 * 100, self.den as u64))
    }

    /// Two-place decimal, e.g. `0.75`; `n/a` for an empty denominator.
    pub fn decimal(&self) -> String {
        match self.hundredths() {
            Some(h) => format_hundredths(h),
            None => "n/a".into(),
        }
    }
}

impl fmt::Display for Ratio {
    /// Renders as `0.75 (6/8)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}/{})", self.decimal(), self.num, self.den)
    }
}

/// `numer / denom` rounded half up to an integer.
pub fn round_half_up(numer: u64, denom: u64) -> u64 {
    (2 * numer + denom) / (2 * denom)
}

pub fn format_hundredths(h: u64) -> String {
    format!("{}.{:02}", h / 100, h % 100)
}

/// Unweighted mean of per-row two-place decimals, kept exact as a sum of
/// hundredths over a row count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacroAverage {
    pub sum_hundredths: u64,
    pub rows: u32,
}

impl MacroAverage {
    pub fn of<'a>(ratios: impl IntoIterator<Item = &'a Ratio>) -> Self {
        let mut out = MacroAverage { sum_hundredths: 0, rows: 0 };
        for r in ratios {
            if let Some(h) = r.hundredths() {
                out.sum_hundredths += h;
                out.rows += 1;
            }
        }
        out
    }

    pub fn value(&self) -> Option<f64> {
        (self.rows > 0).then(|| self.sum_hundredths as f64 / 100.0 / self.rows as f64)
    }

    pub fn decimal(&self) -> String {
        if self.rows == 0 {
            return "n/a".into();
        }
        format_hundredths(round_half_up(self.sum_hundredths, self.rows as u64))
    }
}

impl fmt::Display for MacroAverage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.decimal())
    }
}

/// Mean of integer counts over `rows`, rendered to two places.
pub fn mean_decimal(sum: u64, rows: u32) -> String {
    if rows == 0 {
        return "n/a".into();
    }
    format_hundredths(round_half_up(sum * 100, rows as u64))
}
