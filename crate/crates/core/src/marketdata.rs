//! Canonical tick and quote series, CSV ingestion, millisecond aggregation
//! and trading-session restriction.
//!
//! Timestamps are integer milliseconds from the day origin (local midnight
//! of the trading date), so that a wall-clock [`SessionWindow`] can be
//! applied directly. Prices are stored in levels and as natural logs; the
//! logs are computed once at construction and every estimator consumes them.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MarketDataError {
    #[error("cannot open {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("column `{0}` not found in header")]
    MissingColumn(String),
    #[error("zero parseable rows ({skipped} skipped)")]
    ZeroParseableRows { skipped: usize },
    #[error(
        "timestamp regression of {by_ms} ms at data row {row} exceeds tolerance {tolerance_ms} ms"
    )]
    TimestampRegression {
        row: usize,
        by_ms: i64,
        tolerance_ms: i64,
    },
    #[error("column lengths differ: {0}")]
    LengthMismatch(&'static str),
    #[error("non-positive or non-finite price at index {0}")]
    NonPositivePrice(usize),
    #[error("timestamps decrease at index {0}")]
    Unordered(usize),
    #[error("ask below bid at index {0}; clean the quotes first")]
    AskBelowBid(usize),
    #[error("invalid session window: {0}")]
    InvalidWindow(String),
    #[error("cannot parse clock time `{0}`")]
    BadClock(String),
}

pub type Result<T, E = MarketDataError> = std::result::Result<T, E>;

/// Milliseconds, used both for clock times from the day origin and for durations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize)]
#[serde(transparent)]
pub struct Millis(pub i64);

impl Millis {
    pub const SECOND: Millis = Millis(1_000);
    pub const MINUTE: Millis = Millis(60_000);

    pub fn from_secs(s: f64) -> Self {
        Millis((s * 1000.0).round() as i64)
    }

    pub fn from_minutes(m: f64) -> Self {
        Millis((m * 60_000.0).round() as i64)
    }

    /// Parse `HH:MM`, `HH:MM:SS` or `HH:MM:SS.fff`.
    pub fn parse_clock(s: &str) -> Result<Self> {
        let bad = || MarketDataError::BadClock(s.to_string());
        let mut parts = s.trim().split(':');
        let h: i64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let m: i64 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let sec: f64 = match parts.next() {
            Some(p) => p.parse().map_err(|_| bad())?,
            None => 0.0,
        };
        if parts.next().is_some()
            || !(0..48).contains(&h)
            || !(0..60).contains(&m)
            || !(0.0..60.0).contains(&sec)
        {
            return Err(bad());
        }
        Ok(Millis(
            h * 3_600_000 + m * 60_000 + (sec * 1000.0).round() as i64,
        ))
    }

    pub fn secs(self) -> f64 {
        self.0 as f64 / 1000.0
    }

    pub fn minutes(self) -> f64 {
        self.0 as f64 / 60_000.0
    }
}

impl fmt::Display for Millis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let t = self.0;
        let sign = if t < 0 { "-" } else { "" };
        let t = t.abs();
        write!(
            f,
            "{sign}{:02}:{:02}:{:02}.{:03}",
            t / 3_600_000,
            t / 60_000 % 60,
            t / 1000 % 60,
            t % 1000
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Paid,
    Given,
    Unknown,
}

impl Side {
    pub fn parse(s: &str) -> Self {
        match s.trim().to_ascii_lowercase().as_str() {
            "paid" | "p" | "buy" | "b" => Side::Paid,
            "given" | "g" | "sell" | "s" => Side::Given,
            _ => Side::Unknown,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Paid => "paid",
            Side::Given => "given",
            Side::Unknown => "unknown",
        }
    }
}

/// Timestamped event-level prices for one instrument-day.
#[derive(Debug, Clone, PartialEq)]
pub struct TickSeries {
    instrument_id: String,
    timestamps: Vec<i64>,
    prices: Vec<f64>,
    log_prices: Vec<f64>,
    sizes: Option<Vec<f64>>,
    sides: Option<Vec<Side>>,
}

fn check_ordered(ts: &[i64]) -> Result<()> {
    match ts.windows(2).position(|w| w[1] < w[0]) {
        Some(i) => Err(MarketDataError::Unordered(i + 1)),
        None => Ok(()),
    }
}

impl TickSeries {
    pub fn new(
        instrument_id: impl Into<String>,
        timestamps: Vec<i64>,
        prices: Vec<f64>,
    ) -> Result<Self> {
        if timestamps.len() != prices.len() {
            return Err(MarketDataError::LengthMismatch("timestamps vs prices"));
        }
        if let Some(i) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(MarketDataError::NonPositivePrice(i));
        }
        check_ordered(&timestamps)?;
        let log_prices = prices.iter().map(|p| p.ln()).collect();
        Ok(Self {
            instrument_id: instrument_id.into(),
            timestamps,
            prices,
            log_prices,
            sizes: None,
            sides: None,
        })
    }

    /// Build from log prices, e.g. simulated observations.
    pub fn from_log_prices(
        instrument_id: impl Into<String>,
        timestamps: Vec<i64>,
        log_prices: Vec<f64>,
    ) -> Result<Self> {
        if timestamps.len() != log_prices.len() {
            return Err(MarketDataError::LengthMismatch("timestamps vs log prices"));
        }
        let prices: Vec<f64> = log_prices.iter().map(|y| y.exp()).collect();
        if let Some(i) = prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(MarketDataError::NonPositivePrice(i));
        }
        check_ordered(&timestamps)?;
        Ok(Self {
            instrument_id: instrument_id.into(),
            timestamps,
            prices,
            log_prices,
            sizes: None,
            sides: None,
        })
    }

    pub fn with_sizes(mut self, sizes: Vec<f64>) -> Result<Self> {
        if sizes.len() != self.len() {
            return Err(MarketDataError::LengthMismatch("sizes"));
        }
        self.sizes = Some(sizes);
        Ok(self)
    }

    pub fn with_sides(mut self, sides: Vec<Side>) -> Result<Self> {
        if sides.len() != self.len() {
            return Err(MarketDataError::LengthMismatch("sides"));
        }
        self.sides = Some(sides);
        Ok(self)
    }

    pub fn with_instrument_id(mut self, id: impl Into<String>) -> Self {
        self.instrument_id = id.into();
        self
    }

    pub fn instrument_id(&self) -> &str {
        &self.instrument_id
    }
    pub fn timestamps(&self) -> &[i64] {
        &self.timestamps
    }
    pub fn prices(&self) -> &[f64] {
        &self.prices
    }
    pub fn log_prices(&self) -> &[f64] {
        &self.log_prices
    }
    pub fn sizes(&self) -> Option<&[f64]> {
        self.sizes.as_deref()
    }
    pub fn sides(&self) -> Option<&[Side]> {
        self.sides.as_deref()
    }
    pub fn len(&self) -> usize {
        self.prices.len()
    }
    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// Keep the records at `indices` (must be increasing).
    pub fn select(&self, indices: &[usize]) -> Self {
        let pick_f = |v: &[f64]| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self {
            instrument_id: self.instrument_id.clone(),
            timestamps: indices.iter().map(|&i| self.timestamps[i]).collect(),
            prices: pick_f(&self.prices),
            log_prices: pick_f(&self.log_prices),
            sizes: self.sizes.as_deref().map(pick_f),
            sides: self
                .sides
                .as_ref()
                .map(|s| indices.iter().map(|&i| s[i]).collect()),
        }
    }

    /// Records with timestamp in `[start, end]`.
    pub fn slice_time(&self, start: i64, end: i64) -> Self {
        let lo = self.timestamps.partition_point(|&t| t < start);
        let hi = self.timestamps.partition_point(|&t| t <= end);
        self.select(&(lo..hi.max(lo)).collect::<Vec<_>>())
    }
}

/// Best bid and offer updates for one instrument-day. Raw data may violate
/// `ask >= bid`; [`crate::cleaning::bnhls_quote_filter`] enforces it.
#[derive(Debug, Clone, PartialEq)]
pub struct QuoteSeries {
    pub instrument_id: String,
    pub timestamps: Vec<i64>,
    pub bids: Vec<f64>,
    pub asks: Vec<f64>,
    pub bid_sizes: Option<Vec<f64>>,
    pub ask_sizes: Option<Vec<f64>>,
    /// Regular-condition flag per quote; `None` means every quote is regular.
    pub regular: Option<Vec<bool>>,
}

impl QuoteSeries {
    pub fn new(
        instrument_id: impl Into<String>,
        timestamps: Vec<i64>,
        bids: Vec<f64>,
        asks: Vec<f64>,
    ) -> Result<Self> {
        if timestamps.len() != bids.len() || bids.len() != asks.len() {
            return Err(MarketDataError::LengthMismatch("timestamps, bids, asks"));
        }
        check_ordered(&timestamps)?;
        Ok(Self {
            instrument_id: instrument_id.into(),
            timestamps,
            bids,
            asks,
            bid_sizes: None,
            ask_sizes: None,
            regular: None,
        })
    }

    pub fn with_regular(mut self, regular: Vec<bool>) -> Result<Self> {
        if regular.len() != self.len() {
            return Err(MarketDataError::LengthMismatch("condition flags"));
        }
        self.regular = Some(regular);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }
    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    pub fn is_regular(&self, i: usize) -> bool {
        self.regular.as_ref().is_none_or(|r| r[i])
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        let pick = |v: &[f64]| indices.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self {
            instrument_id: self.instrument_id.clone(),
            timestamps: indices.iter().map(|&i| self.timestamps[i]).collect(),
            bids: pick(&self.bids),
            asks: pick(&self.asks),
            bid_sizes: self.bid_sizes.as_deref().map(pick),
            ask_sizes: self.ask_sizes.as_deref().map(pick),
            regular: self
                .regular
                .as_ref()
                .map(|r| indices.iter().map(|&i| r[i]).collect()),
        }
    }
}

/// Wall-clock trading session, inclusive at both ends.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionWindow {
    pub start: Millis,
    pub end: Millis,
    pub tz: String,
}

impl SessionWindow {
    pub fn new(start: Millis, end: Millis, tz: impl Into<String>) -> Result<Self> {
        if start >= end {
            return Err(MarketDataError::InvalidWindow(format!(
                "start {start} is not before end {end}"
            )));
        }
        Ok(Self {
            start,
            end,
            tz: tz.into(),
        })
    }

    pub fn parse(start: &str, end: &str, tz: impl Into<String>) -> Result<Self> {
        Self::new(Millis::parse_clock(start)?, Millis::parse_clock(end)?, tz)
    }

    /// US equity regular hours, 9:30 to 16:00.
    pub fn us_equity() -> Self {
        Self {
            start: Millis(9 * 3_600_000 + 30 * 60_000),
            end: Millis(16 * 3_600_000),
            tz: "America/New_York".into(),
        }
    }

    /// Overlapping London and New York FX hours, 7:00 to 19:00 GMT.
    pub fn fx() -> Self {
        Self {
            start: Millis(7 * 3_600_000),
            end: Millis(19 * 3_600_000),
            tz: "GMT".into(),
        }
    }

    pub fn contains(&self, t: i64) -> bool {
        (self.start.0..=self.end.0).contains(&t)
    }

    pub fn duration(&self) -> Millis {
        Millis(self.end.0 - self.start.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TimestampFormat {
    /// Integer milliseconds from the day origin.
    #[default]
    Millis,
    /// Decimal seconds from the day origin.
    Seconds,
    /// `HH:MM:SS.fff` wall clock.
    Clock,
}

impl TimestampFormat {
    fn parse(self, s: &str) -> Option<i64> {
        let s = s.trim();
        match self {
            TimestampFormat::Millis => s.parse::<i64>().ok(),
            TimestampFormat::Seconds => s
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(|x| (x * 1000.0).round() as i64),
            TimestampFormat::Clock => Millis::parse_clock(s).ok().map(|m| m.0),
        }
    }

    fn format(self, t: i64) -> String {
        match self {
            TimestampFormat::Millis => t.to_string(),
            TimestampFormat::Seconds => format!("{}.{:03}", t.div_euclid(1000), t.rem_euclid(1000)),
            TimestampFormat::Clock => Millis(t).to_string(),
        }
    }
}

/// Column mapping for delimited trade files.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct TickSchema {
    pub timestamp: String,
    pub price: String,
    pub size: Option<String>,
    pub side: Option<String>,
    pub delimiter: char,
    pub timestamp_format: TimestampFormat,
    pub timezone: String,
    /// Backward timestamp steps up to this size are clamped instead of rejected.
    pub regression_tolerance_ms: i64,
}

impl Default for TickSchema {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            price: "price".into(),
            size: None,
            side: None,
            delimiter: ',',
            timestamp_format: TimestampFormat::Millis,
            timezone: "UTC".into(),
            regression_tolerance_ms: 0,
        }
    }
}

/// Column mapping for delimited quote files.
#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuoteSchema {
    pub timestamp: String,
    pub bid: String,
    pub ask: String,
    pub bid_size: Option<String>,
    pub ask_size: Option<String>,
    /// Boolean-like column; a quote is regular when it reads 1/true/y/yes/r.
    pub condition: Option<String>,
    pub delimiter: char,
    pub timestamp_format: TimestampFormat,
}

impl Default for QuoteSchema {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            bid: "bid".into(),
            ask: "ask".into(),
            bid_size: None,
            ask_size: None,
            condition: None,
            delimiter: ',',
            timestamp_format: TimestampFormat::Millis,
        }
    }
}

/// A parsed value and the number of data rows that were skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct Parsed<T> {
    pub value: T,
    pub skipped: usize,
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| MarketDataError::MissingColumn(name.to_string()))
}

fn optional_column(headers: &csv::StringRecord, name: &Option<String>) -> Result<Option<usize>> {
    name.as_deref().map(|n| column(headers, n)).transpose()
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| MarketDataError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn instrument_from_path(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Tracks timestamp monotonicity while reading.
struct Clock {
    last: Option<i64>,
    tolerance: i64,
}

impl Clock {
    fn admit(&mut self, row: usize, t: i64) -> Result<i64> {
        let t = match self.last {
            Some(prev) if t < prev => {
                if prev - t > self.tolerance {
                    return Err(MarketDataError::TimestampRegression {
                        row,
                        by_ms: prev - t,
                        tolerance_ms: self.tolerance,
                    });
                }
                prev
            }
            _ => t,
        };
        self.last = Some(t);
        Ok(t)
    }
}

/// Parse a trade file; the instrument id is the file stem.
pub fn parse_ticks(path: &Path, schema: &TickSchema) -> Result<Parsed<TickSeries>> {
    let parsed = read_ticks(open(path)?, schema)?;
    Ok(Parsed {
        value: parsed.value.with_instrument_id(instrument_from_path(path)),
        skipped: parsed.skipped,
    })
}

/// Parse trade records from any reader. Rows with an unparseable timestamp,
/// price, or size, or with a non-positive price, are skipped and counted.
pub fn read_ticks<R: Read>(reader: R, schema: &TickSchema) -> Result<Parsed<TickSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let ti = column(&headers, &schema.timestamp)?;
    let pi = column(&headers, &schema.price)?;
    let si = optional_column(&headers, &schema.size)?;
    let di = optional_column(&headers, &schema.side)?;

    let mut clock = Clock {
        last: None,
        tolerance: schema.regression_tolerance_ms,
    };
    let (mut ts, mut px, mut sz, mut sd) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut skipped = 0;
    for (row, rec) in rdr.records().enumerate() {
        let Ok(rec) = rec else {
            skipped += 1;
            continue;
        };
        let t = rec.get(ti).and_then(|s| schema.timestamp_format.parse(s));
        let p = rec
            .get(pi)
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|p| p.is_finite() && *p > 0.0);
        let s = match si {
            Some(i) => rec
                .get(i)
                .and_then(|s| s.trim().parse::<f64>().ok())
                .filter(|s| s.is_finite() && *s >= 0.0)
                .map(Some),
            None => Some(None),
        };
        let (Some(t), Some(p), Some(s)) = (t, p, s) else {
            skipped += 1;
            continue;
        };
        ts.push(clock.admit(row + 1, t)?);
        px.push(p);
        if let Some(s) = s {
            sz.push(s);
        }
        if let Some(i) = di {
            sd.push(Side::parse(rec.get(i).unwrap_or("")));
        }
    }
    if px.is_empty() {
        return Err(MarketDataError::ZeroParseableRows { skipped });
    }
    let mut series = TickSeries::new("", ts, px)?;
    if si.is_some() {
        series = series.with_sizes(sz)?;
    }
    if di.is_some() {
        series = series.with_sides(sd)?;
    }
    Ok(Parsed {
        value: series,
        skipped,
    })
}

/// Write a series with the columns named in `schema`. Prices use the
/// shortest representation that round-trips, so `read(write(x)) == x`.
pub fn write_ticks<W: Write>(series: &TickSeries, writer: W, schema: &TickSchema) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(schema.delimiter as u8)
        .from_writer(writer);
    let mut header = vec![schema.timestamp.clone(), schema.price.clone()];
    let sizes = schema.size.as_ref().and(series.sizes());
    let sides = schema.side.as_ref().and(series.sides());
    if sizes.is_some() {
        header.push(schema.size.clone().unwrap_or_default());
    }
    if sides.is_some() {
        header.push(schema.side.clone().unwrap_or_default());
    }
    w.write_record(&header)?;
    for i in 0..series.len() {
        let mut rec = vec![
            schema.timestamp_format.format(series.timestamps[i]),
            series.prices[i].to_string(),
        ];
        if let Some(s) = sizes {
            rec.push(s[i].to_string());
        }
        if let Some(s) = sides {
            rec.push(s[i].as_str().to_string());
        }
        w.write_record(&rec)?;
    }
    w.flush().map_err(|source| MarketDataError::Io {
        path: PathBuf::from("<writer>"),
        source,
    })?;
    Ok(())
}

/// Parse a quote file; the instrument id is the file stem.
pub fn parse_quotes(path: &Path, schema: &QuoteSchema) -> Result<Parsed<QuoteSeries>> {
    let mut parsed = read_quotes(open(path)?, schema)?;
    parsed.value.instrument_id = instrument_from_path(path);
    Ok(parsed)
}

/// Parse quote records. Zero or crossed quotes are kept: removing them is
/// the job of the quote filter. Rows with unparseable numbers are skipped.
pub fn read_quotes<R: Read>(reader: R, schema: &QuoteSchema) -> Result<Parsed<QuoteSeries>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter as u8)
        .flexible(true)
        .from_reader(reader);
    let headers = rdr.headers()?.clone();
    let ti = column(&headers, &schema.timestamp)?;
    let bi = column(&headers, &schema.bid)?;
    let ai = column(&headers, &schema.ask)?;
    let bsi = optional_column(&headers, &schema.bid_size)?;
    let asi = optional_column(&headers, &schema.ask_size)?;
    let ci = optional_column(&headers, &schema.condition)?;

    let num = |rec: &csv::StringRecord, i: usize| {
        rec.get(i)
            .and_then(|s| s.trim().parse::<f64>().ok())
            .filter(|x| x.is_finite())
    };
    let mut clock = Clock {
        last: None,
        tolerance: 0,
    };
    let mut q = QuoteSeries::new("", vec![], vec![], vec![])?;
    let (mut bsz, mut asz, mut reg) = (Vec::new(), Vec::new(), Vec::new());
    let mut skipped = 0;
    for (row, rec) in rdr.records().enumerate() {
        let Ok(rec) = rec else {
            skipped += 1;
            continue;
        };
        let (Some(t), Some(b), Some(a)) = (
            rec.get(ti).and_then(|s| schema.timestamp_format.parse(s)),
            num(&rec, bi),
            num(&rec, ai),
        ) else {
            skipped += 1;
            continue;
        };
        q.timestamps.push(clock.admit(row + 1, t)?);
        q.bids.push(b);
        q.asks.push(a);
        if let Some(i) = bsi {
            bsz.push(num(&rec, i).unwrap_or(0.0));
        }
        if let Some(i) = asi {
            asz.push(num(&rec, i).unwrap_or(0.0));
        }
        if let Some(i) = ci {
            let v = rec.get(i).unwrap_or("").trim().to_ascii_lowercase();
            reg.push(matches!(v.as_str(), "1" | "true" | "y" | "yes" | "r"));
        }
    }
    if q.is_empty() {
        return Err(MarketDataError::ZeroParseableRows { skipped });
    }
    q.bid_sizes = bsi.map(|_| bsz);
    q.ask_sizes = asi.map(|_| asz);
    q.regular = ci.map(|_| reg);
    Ok(Parsed { value: q, skipped })
}

/// Collapse records sharing a millisecond. The aggregate price is the
/// size-weighted mean when sizes are present (and sum to a positive value),
/// otherwise the last price in the millisecond. Sizes are summed; the side
/// is kept when unanimous and `Unknown` otherwise.
pub fn aggregate_by_millisecond(series: &TickSeries) -> TickSeries {
    let n = series.len();
    let mut ts = Vec::with_capacity(n);
    let mut px = Vec::with_capacity(n);
    let mut sz = Vec::new();
    let mut sd = Vec::new();
    let mut i = 0;
    while i < n {
        let t = series.timestamps[i];
        let mut j = i + 1;
        while j < n && series.timestamps[j] == t {
            j += 1;
        }
        let price = match series.sizes() {
            Some(s) => {
                let total: f64 = s[i..j].iter().sum();
                if total > 0.0 {
                    s[i..j]
                        .iter()
                        .zip(&series.prices[i..j])
                        .map(|(q, p)| q * p)
                        .sum::<f64>()
                        / total
                } else {
                    series.prices[j - 1]
                }
            }
            None => series.prices[j - 1],
        };
        ts.push(t);
        px.push(price);
        if let Some(s) = series.sizes() {
            sz.push(s[i..j].iter().sum());
        }
        if let Some(s) = series.sides() {
            let first = s[i];
            sd.push(if s[i..j].iter().all(|x| *x == first) {
                first
            } else {
                Side::Unknown
            });
        }
        i = j;
    }
    let log_prices = px.iter().map(|p: &f64| p.ln()).collect();
    TickSeries {
        instrument_id: series.instrument_id.clone(),
        timestamps: ts,
        prices: px,
        log_prices,
        sizes: series.sizes.as_ref().map(|_| sz),
        sides: series.sides.as_ref().map(|_| sd),
    }
}

/// Mid-quote series `(bid + ask) / 2`.
pub fn mid_quote(quotes: &QuoteSeries) -> Result<TickSeries> {
    if let Some(i) = (0..quotes.len()).find(|&i| quotes.asks[i] < quotes.bids[i]) {
        return Err(MarketDataError::AskBelowBid(i));
    }
    let mids = quotes
        .bids
        .iter()
        .zip(&quotes.asks)
        .map(|(b, a)| 0.5 * (b + a))
        .collect();
    TickSeries::new(
        quotes.instrument_id.clone(),
        quotes.timestamps.clone(),
        mids,
    )
}

/// Result of a session restriction; `empty` flags a window that matched nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct Clipped<T> {
    pub value: T,
    pub empty: bool,
}

pub fn clip_session(series: &TickSeries, window: &SessionWindow) -> Clipped<TickSeries> {
    let value = series.slice_time(window.start.0, window.end.0);
    let empty = value.is_empty();
    Clipped { value, empty }
}

pub fn clip_quotes(quotes: &QuoteSeries, window: &SessionWindow) -> Clipped<QuoteSeries> {
    let idx: Vec<usize> = (0..quotes.len())
        .filter(|&i| window.contains(quotes.timestamps[i]))
        .collect();
    let value = quotes.select(&idx);
    let empty = value.is_empty();
    Clipped { value, empty }
}

/// Previous-tick sampling on a regular grid: the log price at each boundary
/// `start + k * step` is the last observation at or before it (the first
/// observation if none precedes it). Returns the `n + 1` sampled log prices.
pub fn sample_previous_tick(series: &TickSeries, start: i64, step: Millis, n: usize) -> Vec<f64> {
    let ts = series.timestamps();
    let y = series.log_prices();
    (0..=n)
        .map(|k| {
            let t = start + step.0 * k as i64;
            let idx = ts.partition_point(|&s| s <= t);
            y[idx.saturating_sub(1)]
        })
        .collect()
}
