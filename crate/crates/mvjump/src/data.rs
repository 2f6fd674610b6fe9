//! Dated series plumbing for the backtest: CSV load/store, date alignment,
//! rate conventions, and rolling calendar windows.
//!
//! Files are plain CSV with a header row; dates are ISO `YYYY-MM-DD`. Rows
//! may arrive in any order, the loader sorts them; duplicate dates and
//! malformed rows are errors that name the offending date or line.

use std::fmt::Write as FmtWrite;
use std::path::Path;

use chrono::NaiveDate;

use crate::error::{Error, Result};

/// A value per date, strictly increasing in date.
#[derive(Debug, Clone, PartialEq)]
pub struct DatedSeries {
    dates: Vec<NaiveDate>,
    values: Vec<f64>,
}

impl DatedSeries {
    pub fn new(dates: Vec<NaiveDate>, values: Vec<f64>) -> Result<Self> {
        if dates.len() != values.len() {
            return Err(Error::data("dates and values must have equal length"));
        }
        if dates.is_empty() {
            return Err(Error::data("series is empty"));
        }
        if let Some(w) = dates.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::data(format!(
                "dates must be strictly increasing at {}",
                w[1]
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::data("series contains a non-finite value"));
        }
        Ok(Self { dates, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn first_date(&self) -> NaiveDate {
        self.dates[0]
    }

    pub fn last_date(&self) -> NaiveDate {
        *self.dates.last().expect("series is non-empty")
    }

    /// The sub-series with dates in `[from, to]`; errors when nothing falls
    /// inside.
    pub fn slice(&self, from: NaiveDate, to: NaiveDate) -> Result<DatedSeries> {
        let lo = self.dates.partition_point(|d| *d < from);
        let hi = self.dates.partition_point(|d| *d <= to);
        if lo >= hi {
            return Err(Error::data(format!(
                "no observations between {from} and {to}"
            )));
        }
        DatedSeries::new(self.dates[lo..hi].to_vec(), self.values[lo..hi].to_vec())
    }
}

/// Loads a dated series from a CSV file, selecting columns by header name.
/// Rows are sorted by date; duplicate dates are rejected.
pub fn load_csv(path: &Path, date_column: &str, value_column: &str) -> Result<DatedSeries> {
    let text = std::fs::read_to_string(path)?;
    let path_str = path.display().to_string();
    let csv_err = |line: usize, reason: String| Error::Csv {
        path: path_str.clone(),
        line,
        reason,
    };

    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| csv_err(1, "file is empty".into()))?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let find = |name: &str| {
        columns
            .iter()
            .position(|c| *c == name)
            .ok_or_else(|| csv_err(1, format!("no column named {name:?} in header {header:?}")))
    };
    let date_idx = find(date_column)?;
    let value_idx = find(value_column)?;

    let mut rows: Vec<(NaiveDate, f64)> = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != columns.len() {
            return Err(csv_err(
                line_no,
                format!("expected {} fields, found {}", columns.len(), fields.len()),
            ));
        }
        let date = NaiveDate::parse_from_str(fields[date_idx], "%Y-%m-%d")
            .map_err(|e| csv_err(line_no, format!("bad date {:?}: {e}", fields[date_idx])))?;
        let value: f64 = fields[value_idx]
            .parse()
            .map_err(|e| csv_err(line_no, format!("bad value {:?}: {e}", fields[value_idx])))?;
        rows.push((date, value));
    }
    if rows.is_empty() {
        return Err(csv_err(1, "no data rows".into()));
    }
    rows.sort_by_key(|(d, _)| *d);
    if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::data(format!(
            "duplicate date {} in {}",
            w[0].0, path_str
        )));
    }
    let (dates, values) = rows.into_iter().unzip();
    DatedSeries::new(dates, values)
}

/// Writes a dated series as CSV with the given header names.
pub fn write_csv(
    series: &DatedSeries,
    path: &Path,
    date_column: &str,
    value_column: &str,
) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{date_column},{value_column}");
    for (d, v) in series.dates.iter().zip(&series.values) {
        let _ = writeln!(out, "{d},{v}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Restricts both series to their common dates; errors when they share none.
pub fn align(a: &DatedSeries, b: &DatedSeries) -> Result<(DatedSeries, DatedSeries)> {
    let mut da = Vec::new();
    let mut va = Vec::new();
    let mut vb = Vec::new();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a.dates[i].cmp(&b.dates[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                da.push(a.dates[i]);
                va.push(a.values[i]);
                vb.push(b.values[j]);
                i += 1;
                j += 1;
            }
        }
    }
    if da.is_empty() {
        return Err(Error::data("series share no dates"));
    }
    Ok((DatedSeries::new(da.clone(), va)?, DatedSeries::new(da, vb)?))
}

/// The value of `rates` at each requested date, carrying the last observed
/// value forward across gaps; dates before the first observation take the
/// first observed value.
pub fn fill_forward_on(dates: &[NaiveDate], rates: &DatedSeries) -> Result<Vec<f64>> {
    if dates.is_empty() {
        return Err(Error::data("no dates to fill onto"));
    }
    let mut out = Vec::with_capacity(dates.len());
    for &d in dates {
        let idx = rates.dates.partition_point(|rd| *rd <= d);
        let value = if idx == 0 {
            rates.values[0]
        } else {
            rates.values[idx - 1]
        };
        out.push(value);
    }
    Ok(out)
}

/// Daily simple rate implied by a percentage discount-style quote, dividing
/// by the given day count.
pub fn quote_to_daily_rate_with(quote: f64, divisor: f64) -> f64 {
    quote / 100.0 / divisor
}

/// [`quote_to_daily_rate_with`] at the 252-trading-day convention.
pub fn tbill_to_daily_rate(quote: f64) -> f64 {
    quote_to_daily_rate_with(quote, 252.0)
}

/// Shape of one backtest window in whole calendar years.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub train_years: usize,
    pub eval_years: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            train_years: 10,
            eval_years: 1,
        }
    }
}

/// One rolling window: calendar-year training span followed immediately by
/// the evaluation span.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowRange {
    pub train_start: NaiveDate,
    pub train_end: NaiveDate,
    pub eval_start: NaiveDate,
    pub eval_end: NaiveDate,
    /// `"{first train year}-{last eval year}"`.
    pub label: String,
}

/// All windows of the given shape that fit inside `[first_year, last_year]`,
/// advancing one year at a time. The number of windows is
/// `last_year - first_year - (train_years + eval_years) + 2`.
pub fn rolling_windows(
    first_year: i32,
    last_year: i32,
    spec: &WindowSpec,
) -> Result<Vec<WindowRange>> {
    if spec.train_years == 0 || spec.eval_years == 0 {
        return Err(Error::invalid("window spans must be at least one year"));
    }
    let span = (spec.train_years + spec.eval_years) as i32;
    let count = last_year - first_year - span + 2;
    if count <= 0 {
        return Err(Error::invalid(format!(
            "years {first_year}..{last_year} cannot hold a {}+{} year window",
            spec.train_years, spec.eval_years
        )));
    }
    let jan1 = |y: i32| NaiveDate::from_ymd_opt(y, 1, 1).expect("valid date");
    let dec31 = |y: i32| NaiveDate::from_ymd_opt(y, 12, 31).expect("valid date");
    let mut windows = Vec::with_capacity(count as usize);
    for k in 0..count {
        let train_start_year = first_year + k;
        let train_end_year = train_start_year + spec.train_years as i32 - 1;
        let eval_end_year = train_end_year + spec.eval_years as i32;
        windows.push(WindowRange {
            train_start: jan1(train_start_year),
            train_end: dec31(train_end_year),
            eval_start: jan1(train_end_year + 1),
            eval_end: dec31(eval_end_year),
            label: format!("{train_start_year}-{eval_end_year}"),
        });
    }
    Ok(windows)
}
