//! Calendar-indexed monthly series and the statistics computed on them.
//!
//! A [`MonthlySeries`] is always contiguous: it is a start month plus one
//! value per consecutive month. Ingestion resolves gaps before a series
//! can be built, so nothing in here interpolates.

mod stats;
mod trend;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub use stats::{
    band, log_returns, ols_trend, rolling_mean_std, smooth, BandSeries, BandSpec, WidthRule, WindowAlignment,
    DEFAULT_SMOOTHING_WINDOW,
};
pub use trend::{mann_kendall, TrendDirection, TrendResult};

/// A calendar month. Ordered by year, then month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MonthStamp {
    year: i32,
    month: u8,
}

impl MonthStamp {
    pub fn new(year: i32, month: u32) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::Argument(format!("month {month} outside 1..=12")));
        }
        Ok(Self {
            year,
            month: month as u8,
        })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn month(self) -> u32 {
        self.month as u32
    }

    /// Months since year 0, January. Used for arithmetic.
    fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    fn from_ordinal(ord: i64) -> Self {
        Self {
            year: ord.div_euclid(12) as i32,
            month: (ord.rem_euclid(12) + 1) as u8,
        }
    }

    pub fn succ(self) -> Self {
        self.add_months(1)
    }

    pub fn pred(self) -> Self {
        self.add_months(-1)
    }

    pub fn add_months(self, n: i64) -> Self {
        Self::from_ordinal(self.ordinal() + n)
    }

    /// Signed number of months from `self` to `later`.
    pub fn months_until(self, later: MonthStamp) -> i64 {
        later.ordinal() - self.ordinal()
    }
}

impl fmt::Display for MonthStamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthStamp {
    type Err = Error;

    /// Parses `YYYY-MM`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Argument(format!("`{s}` is not a YYYY-MM month"));
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if m.len() != 2 || y.is_empty() {
            return Err(bad());
        }
        let year: i32 = y.parse().map_err(|_| bad())?;
        let month: u32 = m.parse().map_err(|_| bad())?;
        MonthStamp::new(year, month).map_err(|_| bad())
    }
}

impl Serialize for MonthStamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for MonthStamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Inclusive range of months.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonthRange {
    pub first: MonthStamp,
    pub last: MonthStamp,
}

impl MonthRange {
    pub fn new(first: MonthStamp, last: MonthStamp) -> Result<Self> {
        if last < first {
            return Err(Error::Argument(format!("empty month range {first}..={last}")));
        }
        Ok(Self { first, last })
    }

    pub fn len(&self) -> usize {
        (self.first.months_until(self.last) + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, m: MonthStamp) -> bool {
        self.first <= m && m <= self.last
    }

    pub fn iter(&self) -> impl Iterator<Item = MonthStamp> {
        let first = self.first;
        (0..self.len() as i64).map(move |i| first.add_months(i))
    }

    pub fn intersect(&self, other: &MonthRange) -> Option<MonthRange> {
        let first = self.first.max(other.first);
        let last = self.last.min(other.last);
        (first <= last).then_some(MonthRange { first, last })
    }
}

impl fmt::Display for MonthRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..={}", self.first, self.last)
    }
}

/// Contiguous monthly observations with a unit label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlySeries {
    start: MonthStamp,
    values: Vec<f64>,
    unit: String,
}

impl MonthlySeries {
    pub fn new(start: MonthStamp, values: Vec<f64>, unit: impl Into<String>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        Ok(Self {
            start,
            values,
            unit: unit.into(),
        })
    }

    pub fn start(&self) -> MonthStamp {
        self.start
    }

    pub fn end(&self) -> MonthStamp {
        self.start.add_months(self.values.len() as i64 - 1)
    }

    pub fn range(&self) -> MonthRange {
        MonthRange {
            first: self.start,
            last: self.end(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn month_at(&self, index: usize) -> MonthStamp {
        self.start.add_months(index as i64)
    }

    pub fn index_of(&self, month: MonthStamp) -> Option<usize> {
        let i = self.start.months_until(month);
        (i >= 0 && (i as usize) < self.values.len()).then_some(i as usize)
    }

    pub fn get(&self, month: MonthStamp) -> Option<f64> {
        self.index_of(month).map(|i| self.values[i])
    }

    pub fn months(&self) -> impl Iterator<Item = MonthStamp> + '_ {
        (0..self.values.len()).map(|i| self.month_at(i))
    }

    pub fn iter(&self) -> impl Iterator<Item = (MonthStamp, f64)> + '_ {
        self.values.iter().enumerate().map(|(i, &v)| (self.month_at(i), v))
    }

    /// Elementwise transform; keeps calendar and unit.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> MonthlySeries {
        MonthlySeries {
            start: self.start,
            values: self.values.iter().map(|&v| f(v)).collect(),
            unit: self.unit.clone(),
        }
    }

    pub fn with_unit(mut self, unit: impl Into<String>) -> Self {
        self.unit = unit.into();
        self
    }

    /// Sub-series over `range`, which must lie inside this series.
    pub fn slice(&self, range: MonthRange) -> Result<MonthlySeries> {
        let (Some(a), Some(b)) = (self.index_of(range.first), self.index_of(range.last)) else {
            return Err(Error::Alignment(format!(
                "range {range} is not inside series calendar {}",
                self.range()
            )));
        };
        Ok(MonthlySeries {
            start: range.first,
            values: self.values[a..=b].to_vec(),
            unit: self.unit.clone(),
        })
    }

    /// Appends `other`, which must start the month after this series ends.
    pub fn concat(&self, other: &MonthlySeries) -> Result<MonthlySeries> {
        if other.start != self.end().succ() {
            return Err(Error::Alignment(format!(
                "cannot append series starting {} to one ending {}",
                other.start,
                self.end()
            )));
        }
        let mut values = self.values.clone();
        values.extend_from_slice(&other.values);
        Ok(MonthlySeries {
            start: self.start,
            values,
            unit: self.unit.clone(),
        })
    }

    /// Sample mean and (n-1) variance.
    pub fn mean_var(&self) -> (f64, f64) {
        mean_var(&self.values)
    }
}

pub(crate) fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
    (mean, ss / (n - 1.0))
}
