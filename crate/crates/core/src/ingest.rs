//! Daily CSV parsing, monthly averaging and random hole injection.
//!
//! Daily input is `date,value` with ISO dates and `NA` for a missing reading.
//! Monthly output is `year,month,value,observed` with `NA` cells and a `0/1`
//! observed flag.

use std::io::{Read, Write};

use chrono::{Datelike, NaiveDate};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::series::Series;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("empty input: no header or data rows")]
    Empty,
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("records out of order at {date}: dates must be strictly increasing")]
    Unsorted { date: NaiveDate },
    #[error("duplicate record for {date}")]
    Duplicate { date: NaiveDate },
    #[error("cannot remove {count} of {observed} observed values")]
    TooManyHoles { count: usize, observed: usize },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, IngestError>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DailyRecord {
    pub date: NaiveDate,
    /// Rainfall amount in mm; `None` when the reading is missing.
    pub value: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn new(year: i32, month: u32) -> Self {
        Self { year, month }
    }

    pub fn of(date: NaiveDate) -> Self {
        Self::new(date.year(), date.month())
    }

    pub fn next(self) -> Self {
        if self.month == 12 {
            Self::new(self.year + 1, 1)
        } else {
            Self::new(self.year, self.month + 1)
        }
    }

    /// Month `k` steps after `self`.
    pub fn plus(self, k: usize) -> Self {
        let total = self.year as i64 * 12 + (self.month as i64 - 1) + k as i64;
        Self::new(total.div_euclid(12) as i32, total.rem_euclid(12) as u32 + 1)
    }

    pub fn days(self) -> u32 {
        let next = self.next();
        let first = NaiveDate::from_ymd_opt(self.year, self.month, 1).expect("valid month");
        let following = NaiveDate::from_ymd_opt(next.year, next.month, 1).expect("valid month");
        (following - first).num_days() as u32
    }
}

/// Ordered monthly values with a calendar anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthlySeries {
    pub start: YearMonth,
    pub values: Vec<Option<f64>>,
    pub label: String,
}

impl MonthlySeries {
    pub fn new(start: YearMonth, values: Vec<Option<f64>>, label: impl Into<String>) -> Self {
        Self {
            start,
            values,
            label: label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mask(&self) -> Vec<bool> {
        self.values.iter().map(Option::is_some).collect()
    }

    pub fn observed_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn to_series(&self) -> Series {
        Series::from_options(self.values.clone())
    }

    pub fn month_at(&self, index: usize) -> YearMonth {
        self.start.plus(index)
    }
}

/// How a month's total is turned into a daily average.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DayDivisor {
    /// Number of calendar days in the month.
    #[default]
    Calendar,
    /// Number of days with a present reading.
    Present,
}

/// Positions switched to missing by [`puncture`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoleSet {
    pub indices: Vec<usize>,
    pub seed: u64,
}

pub fn parse_daily_csv<R: Read>(reader: R) -> Result<Vec<DailyRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = rdr.records();
    let header = rows.next().ok_or(IngestError::Empty)??;
    if header.len() != 2 || &header[0] != "date" || &header[1] != "value" {
        return Err(IngestError::Parse {
            line: 1,
            message: format!("expected header `date,value`, found `{}`", header.iter().collect::<Vec<_>>().join(",")),
        });
    }
    let mut out = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let err = |message: String| IngestError::Parse { line, message };
        if row.len() != 2 {
            return Err(err(format!("expected 2 fields, found {}", row.len())));
        }
        let date = NaiveDate::parse_from_str(&row[0], "%Y-%m-%d")
            .map_err(|e| err(format!("invalid date `{}`: {e}", &row[0])))?;
        let value = match &row[1] {
            "NA" => None,
            raw => {
                let v: f64 = raw
                    .parse()
                    .map_err(|_| err(format!("invalid value `{raw}`")))?;
                if !v.is_finite() || v < 0.0 {
                    return Err(err(format!("value must be a non-negative number, found {raw}")));
                }
                Some(v)
            }
        };
        out.push(DailyRecord { date, value });
    }
    if out.is_empty() {
        return Err(IngestError::Empty);
    }
    Ok(out)
}

/// Averages daily records into one value per calendar month of the record span.
///
/// Missing daily readings add nothing to the monthly sum. A month with no
/// present reading is missing.
pub fn aggregate_monthly(records: &[DailyRecord], divisor: DayDivisor, label: &str) -> Result<MonthlySeries> {
    let first = records.first().ok_or(IngestError::Empty)?;
    for pair in records.windows(2) {
        if pair[1].date == pair[0].date {
            return Err(IngestError::Duplicate { date: pair[1].date });
        }
        if pair[1].date < pair[0].date {
            return Err(IngestError::Unsorted { date: pair[1].date });
        }
    }
    let start = YearMonth::of(first.date);
    let mut values = Vec::new();
    let mut month = start;
    let mut iter = records.iter().peekable();
    while let Some(rec) = iter.peek() {
        let current = YearMonth::of(rec.date);
        while month < current {
            values.push(None);
            month = month.next();
        }
        let (mut sum, mut present) = (0.0, 0u32);
        while let Some(r) = iter.next_if(|r| YearMonth::of(r.date) == month) {
            if let Some(v) = r.value {
                sum += v;
                present += 1;
            }
        }
        values.push((present > 0).then(|| {
            let days = match divisor {
                DayDivisor::Calendar => month.days(),
                DayDivisor::Present => present,
            };
            sum / days as f64
        }));
        month = month.next();
    }
    Ok(MonthlySeries::new(start, values, label))
}

/// Copy of `series` with `count` observed positions, drawn uniformly without
/// replacement, switched to missing.
pub fn puncture(series: &MonthlySeries, count: usize, seed: u64) -> Result<(MonthlySeries, HoleSet)> {
    let mut observed: Vec<usize> = (0..series.len()).filter(|&i| series.values[i].is_some()).collect();
    if count >= observed.len() && count > 0 {
        return Err(IngestError::TooManyHoles {
            count,
            observed: observed.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (chosen, _) = observed.partial_shuffle(&mut rng, count);
    let mut indices = chosen.to_vec();
    indices.sort_unstable();
    let mut out = series.clone();
    for &i in &indices {
        out.values[i] = None;
    }
    Ok((out, HoleSet { indices, seed }))
}

/// Writes `year,month,value,observed` rows.
pub fn write_monthly_csv<W: Write>(series: &MonthlySeries, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["year", "month", "value", "observed"])?;
    for (i, v) in series.values.iter().enumerate() {
        let ym = series.month_at(i);
        let (value, flag) = match v {
            Some(x) => (x.to_string(), "1"),
            None => ("NA".to_string(), "0"),
        };
        w.write_record([ym.year.to_string(), ym.month.to_string(), value, flag.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the format written by [`write_monthly_csv`]. Months must be consecutive.
pub fn read_monthly_csv<R: Read>(reader: R, label: &str) -> Result<MonthlySeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows = rdr.records();
    let header = rows.next().ok_or(IngestError::Empty)??;
    if header.iter().collect::<Vec<_>>() != ["year", "month", "value", "observed"] {
        return Err(IngestError::Parse {
            line: 1,
            message: "expected header `year,month,value,observed`".into(),
        });
    }
    let mut start = None;
    let mut values = Vec::new();
    for row in rows {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let err = |message: String| IngestError::Parse { line, message };
        if row.len() != 4 {
            return Err(err(format!("expected 4 fields, found {}", row.len())));
        }
        let year: i32 = row[0].parse().map_err(|_| err(format!("invalid year `{}`", &row[0])))?;
        let month: u32 = row[1].parse().map_err(|_| err(format!("invalid month `{}`", &row[1])))?;
        if !(1..=12).contains(&month) {
            return Err(err(format!("month {month} out of range")));
        }
        let ym = YearMonth::new(year, month);
        let anchor = *start.get_or_insert(ym);
        if ym != anchor.plus(values.len()) {
            return Err(err(format!("expected month {:?}, found {year}-{month}", anchor.plus(values.len()))));
        }
        let value = match (&row[2], &row[3]) {
            (_, "0") => None,
            (raw, "1") => Some(raw.parse::<f64>().map_err(|_| err(format!("invalid value `{raw}`")))?),
            (_, flag) => return Err(err(format!("observed flag must be 0 or 1, found `{flag}`"))),
        };
        values.push(value);
    }
    let start = start.ok_or(IngestError::Empty)?;
    Ok(MonthlySeries::new(start, values, label))
}
