//! Daily price ingestion and cleaning.
//!
//! The accepted input is a UTF-8 CSV with the exact header `date,price`,
//! ISO-8601 dates and `.`-decimal prices. Rows may arrive in any order;
//! they are sorted by date on parse. Calendar gaps are kept until
//! [`fill_gaps`] replaces them with linearly interpolated prices.

use std::fmt::Write as _;
use std::io::Read;

use chrono::NaiveDate;
use thiserror::Error;

const HEADER: &str = "date,price";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("input is empty")]
    Empty,
    #[error("line 1: expected header `{HEADER}`, found `{0}`")]
    BadHeader(String),
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: price must be positive, got {price}")]
    NonPositivePrice { line: usize, price: f64 },
    #[error("price at index {index} must be positive and finite, got {price}")]
    InvalidPrice { index: usize, price: f64 },
    #[error("line {line}: duplicate date {date}")]
    DuplicateDate { line: usize, date: NaiveDate },
    #[error("series has {0} point(s); at least 2 are required")]
    TooShort(usize),
    #[error("dates must be strictly increasing ({0} follows {1})")]
    Unordered(NaiveDate, NaiveDate),
    #[error("window length {window} exceeds series length {len}")]
    WindowTooLong { window: usize, len: usize },
    #[error("window length and step must be at least 1")]
    ZeroWindow,
    #[error("need at least 2 returns, got {0}")]
    TooFewReturns(usize),
    #[error("i/o error: {0}")]
    Io(String),
}

/// Dated, strictly positive daily prices.
///
/// After [`fill_gaps`] the dates are consecutive calendar days and
/// `interpolated[i]` marks the points that were filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceSeries {
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
    interpolated: Vec<bool>,
}

impl PriceSeries {
    /// Builds a series from already-sorted observations. No point is marked
    /// as interpolated.
    pub fn new(dates: Vec<NaiveDate>, prices: Vec<f64>) -> Result<Self, DataError> {
        assert_eq!(dates.len(), prices.len(), "dates and prices differ in length");
        if dates.len() < 2 {
            return Err(DataError::TooShort(dates.len()));
        }
        for (i, &p) in prices.iter().enumerate() {
            if !p.is_finite() || p <= 0.0 {
                return Err(DataError::InvalidPrice { index: i, price: p });
            }
        }
        for pair in dates.windows(2) {
            if pair[1] <= pair[0] {
                return Err(DataError::Unordered(pair[1], pair[0]));
            }
        }
        let interpolated = vec![false; prices.len()];
        Ok(Self { dates, prices, interpolated })
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn interpolated_mask(&self) -> &[bool] {
        &self.interpolated
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn first_date(&self) -> NaiveDate {
        self.dates[0]
    }

    pub fn last_date(&self) -> NaiveDate {
        self.dates[self.dates.len() - 1]
    }

    pub fn last_price(&self) -> f64 {
        self.prices[self.prices.len() - 1]
    }

    pub fn interpolated_count(&self) -> usize {
        self.interpolated.iter().filter(|&&f| f).count()
    }

    /// Calendar gaps as `(index of the observation before the gap, missing days)`.
    pub fn gaps(&self) -> Vec<(usize, i64)> {
        self.dates
            .windows(2)
            .enumerate()
            .filter_map(|(i, pair)| {
                let missing = (pair[1] - pair[0]).num_days() - 1;
                (missing > 0).then_some((i, missing))
            })
            .collect()
    }

    pub fn is_contiguous(&self) -> bool {
        self.gaps().is_empty()
    }

    /// Sub-series of all observations dated on or before `end`.
    pub fn truncate_to(&self, end: NaiveDate) -> Result<Self, DataError> {
        let keep = self.dates.partition_point(|d| *d <= end);
        if keep < 2 {
            return Err(DataError::TooShort(keep));
        }
        Ok(Self {
            dates: self.dates[..keep].to_vec(),
            prices: self.prices[..keep].to_vec(),
            interpolated: self.interpolated[..keep].to_vec(),
        })
    }

    /// Serializes to `date,price,interpolated`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("date,price,interpolated\n");
        for ((d, p), f) in self.dates.iter().zip(&self.prices).zip(&self.interpolated) {
            let _ = writeln!(out, "{},{},{}", d.format("%Y-%m-%d"), p, u8::from(*f));
        }
        out
    }
}

/// Parses a `date,price` CSV from any reader.
pub fn parse_price_csv<R: Read>(mut source: R) -> Result<PriceSeries, DataError> {
    let mut text = String::new();
    source
        .read_to_string(&mut text)
        .map_err(|e| DataError::Io(e.to_string()))?;
    parse_price_str(&text)
}

pub fn parse_price_str(text: &str) -> Result<PriceSeries, DataError> {
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            None => return Err(DataError::Empty),
            Some((_, l)) if l.trim().is_empty() => continue,
            Some((_, l)) => break l.trim_end_matches('\r'),
        }
    };
    if header.trim() != HEADER {
        return Err(DataError::BadHeader(header.to_string()));
    }

    let mut rows: Vec<(NaiveDate, f64, usize)> = Vec::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let (Some(date_s), Some(price_s), None) = (fields.next(), fields.next(), fields.next())
        else {
            return Err(DataError::Malformed {
                line: line_no,
                reason: format!("expected 2 fields in `{line}`"),
            });
        };
        let date = NaiveDate::parse_from_str(date_s.trim(), "%Y-%m-%d").map_err(|e| {
            DataError::Malformed { line: line_no, reason: format!("bad date `{date_s}`: {e}") }
        })?;
        let price: f64 = price_s.trim().parse().map_err(|_| DataError::Malformed {
            line: line_no,
            reason: format!("bad price `{price_s}`"),
        })?;
        if !price.is_finite() {
            return Err(DataError::Malformed {
                line: line_no,
                reason: format!("non-finite price `{price_s}`"),
            });
        }
        if price <= 0.0 {
            return Err(DataError::NonPositivePrice { line: line_no, price });
        }
        rows.push((date, price, line_no));
    }

    if rows.is_empty() {
        return Err(DataError::Empty);
    }
    // stable sort keeps the first occurrence first for duplicate reporting
    rows.sort_by_key(|r| r.0);
    for pair in rows.windows(2) {
        if pair[0].0 == pair[1].0 {
            let line = pair[0].2.max(pair[1].2);
            return Err(DataError::DuplicateDate { line, date: pair[1].0 });
        }
    }
    if rows.len() < 2 {
        return Err(DataError::TooShort(rows.len()));
    }
    let (dates, prices): (Vec<_>, Vec<_>) = rows.into_iter().map(|(d, p, _)| (d, p)).unzip();
    PriceSeries::new(dates, prices)
}

/// Fills every calendar gap by linear interpolation between its anchors.
pub fn fill_gaps(series: &PriceSeries) -> PriceSeries {
    let n = series.len();
    let mut dates = Vec::with_capacity(n);
    let mut prices = Vec::with_capacity(n);
    let mut interpolated = Vec::with_capacity(n);

    for i in 0..n {
        dates.push(series.dates[i]);
        prices.push(series.prices[i]);
        interpolated.push(series.interpolated[i]);
        if i + 1 == n {
            break;
        }
        let (d0, p0) = (series.dates[i], series.prices[i]);
        let (d1, p1) = (series.dates[i + 1], series.prices[i + 1]);
        let span = (d1 - d0).num_days();
        for k in 1..span {
            let frac = k as f64 / span as f64;
            dates.push(d0 + chrono::Days::new(k as u64));
            prices.push(p0 + (p1 - p0) * frac);
            interpolated.push(true);
        }
    }
    PriceSeries { dates, prices, interpolated }
}

/// Daily log returns, `values[t] = ln(price[t+1] / price[t])`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSeries {
    values: Vec<f64>,
}

impl ReturnSeries {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl From<Vec<f64>> for ReturnSeries {
    fn from(values: Vec<f64>) -> Self {
        Self { values }
    }
}

pub fn log_returns(series: &PriceSeries) -> ReturnSeries {
    ReturnSeries { values: log_returns_of(series.prices()) }
}

pub(crate) fn log_returns_of(prices: &[f64]) -> Vec<f64> {
    prices.windows(2).map(|w| w[1].ln() - w[0].ln()).collect()
}

/// Per-day drift and volatility of log returns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftVol {
    pub mu: f64,
    pub sigma: f64,
}

/// Mean and sample standard deviation (n−1 denominator) of the returns.
pub fn estimate_drift_vol(returns: &ReturnSeries) -> Result<DriftVol, DataError> {
    drift_vol_of(returns.values())
}

pub(crate) fn drift_vol_of(values: &[f64]) -> Result<DriftVol, DataError> {
    let n = values.len();
    if n < 2 {
        return Err(DataError::TooFewReturns(n));
    }
    let mu = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mu) * (v - mu)).sum();
    Ok(DriftVol { mu, sigma: (ss / (n - 1) as f64).sqrt() })
}

/// Windows `[i, i + window)` for `i = 0, step, 2·step, …` that fit in `data`.
pub fn sliding_windows<T>(
    data: &[T],
    window: usize,
    step: usize,
) -> Result<impl Iterator<Item = (usize, &[T])>, DataError> {
    if window == 0 || step == 0 {
        return Err(DataError::ZeroWindow);
    }
    if window > data.len() {
        return Err(DataError::WindowTooLong { window, len: data.len() });
    }
    let count = (data.len() - window) / step + 1;
    Ok((0..count).map(move |k| {
        let start = k * step;
        (start, &data[start..start + window])
    }))
}

/// Drift and volatility over every step-1 window of `window` prices, tagged
/// with the window's start date.
pub fn sliding_drift_vol(
    series: &PriceSeries,
    window: usize,
) -> Result<Vec<(NaiveDate, DriftVol)>, DataError> {
    sliding_windows(series.prices(), window, 1)?
        .map(|(start, prices)| {
            let dv = drift_vol_of(&log_returns_of(prices))?;
            Ok((series.dates()[start], dv))
        })
        .collect()
}
