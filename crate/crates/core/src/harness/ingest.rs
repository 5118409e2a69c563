//! Tick CSV ingestion and regular intraday session grids.

use std::fs::File;
use std::io::Read;
use std::path::Path as FsPath;

use chrono::{DateTime, NaiveDateTime, NaiveTime, Timelike};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, RowProblem};

const DAY: i64 = 86_400;

/// Strictly time-ordered price observations. Timestamps are UTC epoch seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TickSeries {
    pub timestamps: Vec<i64>,
    pub prices: Vec<f64>,
    pub instrument: String,
}

impl TickSeries {
    pub fn new(timestamps: Vec<i64>, prices: Vec<f64>, instrument: impl Into<String>) -> Result<Self> {
        if timestamps.len() != prices.len() {
            return Err(Error::InvalidInput(format!(
                "{} timestamps for {} prices",
                timestamps.len(),
                prices.len()
            )));
        }
        if let Some(i) = timestamps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(format!(
                "timestamps not strictly increasing at index {}",
                i + 1
            )));
        }
        if let Some(p) = prices.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidInput(format!("prices must be positive, got {p}")));
        }
        Ok(TickSeries {
            timestamps,
            prices,
            instrument: instrument.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }
}

/// Column names of a tick file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickSchema {
    pub timestamp: String,
    pub price: String,
}

impl Default for TickSchema {
    fn default() -> Self {
        TickSchema {
            timestamp: "timestamp".into(),
            price: "price".into(),
        }
    }
}

/// Accepts integer epoch seconds, RFC 3339, or `YYYY-MM-DD HH:MM:SS` (UTC).
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if let Ok(v) = s.parse::<i64>() {
        return Some(v);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
        .map(|dt| dt.and_utc().timestamp())
}

pub fn ingest_ticks(path: &FsPath, schema: &TickSchema, instrument: &str) -> Result<TickSeries> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_ticks(file, schema, instrument, &path.display().to_string())
}

/// Parses a tick CSV with a header row. Every malformed or out-of-order row
/// is reported with its line number.
pub fn read_ticks<R: Read>(input: R, schema: &TickSchema, instrument: &str, source: &str) -> Result<TickSeries> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = reader.headers()?.clone();
    let column = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Ingestion {
            path: source.to_string(),
            problems: vec![RowProblem {
                line: 1,
                message: format!("missing column {name:?}"),
            }],
        })
    };
    let ts_col = column(&schema.timestamp)?;
    let px_col = column(&schema.price)?;

    let mut timestamps = Vec::new();
    let mut prices = Vec::new();
    let mut problems = Vec::new();
    let mut last: Option<i64> = None;
    for record in reader.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                problems.push(RowProblem {
                    line,
                    message: e.to_string(),
                });
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line());
        let raw_ts = record.get(ts_col).unwrap_or("");
        let raw_px = record.get(px_col).unwrap_or("");
        let Some(ts) = parse_timestamp(raw_ts) else {
            problems.push(RowProblem {
                line,
                message: format!("unparseable timestamp {raw_ts:?}"),
            });
            continue;
        };
        let price = match raw_px.parse::<f64>() {
            Ok(p) if p.is_finite() && p > 0.0 => p,
            _ => {
                problems.push(RowProblem {
                    line,
                    message: format!("invalid price {raw_px:?}"),
                });
                continue;
            }
        };
        if let Some(prev) = last {
            if ts <= prev {
                problems.push(RowProblem {
                    line,
                    message: format!("timestamp {ts} is not after the previous {prev}"),
                });
                continue;
            }
        }
        last = Some(ts);
        timestamps.push(ts);
        prices.push(price);
    }
    if !problems.is_empty() {
        return Err(Error::Ingestion {
            path: source.to_string(),
            problems,
        });
    }
    if timestamps.is_empty() {
        return Err(Error::InsufficientData(format!("{source} contains no ticks")));
    }
    TickSeries::new(timestamps, prices, instrument)
}

/// Intraday grid `start, start + interval, ..., end` (seconds after UTC
/// midnight, both ends included).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SessionSpec {
    pub start: u32,
    pub end: u32,
    pub interval: u32,
    /// Minimum share of grid points that must have a same-day tick at or
    /// before them.
    pub coverage_threshold: f64,
}

impl SessionSpec {
    /// Parses `HH:MM[:SS]` bounds.
    pub fn parse(start: &str, end: &str, interval: u32, coverage_threshold: f64) -> Result<Self> {
        let tod = |s: &str| {
            NaiveTime::parse_from_str(s, "%H:%M:%S")
                .or_else(|_| NaiveTime::parse_from_str(s, "%H:%M"))
                .map(|t| t.num_seconds_from_midnight())
                .map_err(|_| Error::InvalidConfig(format!("bad time of day {s:?}")))
        };
        let spec = SessionSpec {
            start: tod(start)?,
            end: tod(end)?,
            interval,
            coverage_threshold,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.interval == 0 || self.start >= self.end || self.end as i64 >= DAY {
            return Err(Error::InvalidConfig(format!(
                "need start < end within one day and interval > 0, got {self:?}"
            )));
        }
        if !(self.end - self.start).is_multiple_of(self.interval) {
            return Err(Error::InvalidConfig(format!(
                "interval {} does not divide the session length {}",
                self.interval,
                self.end - self.start
            )));
        }
        if !(0.0..=1.0).contains(&self.coverage_threshold) {
            return Err(Error::InvalidConfig(format!(
                "coverage threshold must be in [0, 1], got {}",
                self.coverage_threshold
            )));
        }
        Ok(())
    }

    pub fn grid_len(&self) -> usize {
        ((self.end - self.start) / self.interval) as usize + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    /// Days since the Unix epoch.
    pub day: i64,
    pub date: String,
    pub values: Vec<f64>,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedDay {
    pub day: i64,
    pub date: String,
    pub coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sessionized {
    pub sessions: Vec<Session>,
    pub dropped: Vec<DroppedDay>,
    pub grid_len: usize,
}

fn date_of(day: i64) -> String {
    DateTime::from_timestamp(day * DAY, 0)
        .map(|d| d.date_naive().to_string())
        .unwrap_or_else(|| day.to_string())
}

/// Resamples each UTC calendar day onto the session grid by carrying the
/// last same-day observation forward.
///
/// Days without any covered grid point, or with coverage below the
/// threshold, are dropped and reported. Grid points before the first tick of
/// a retained day take that day's first carried value.
pub fn sessionize(series: &TickSeries, spec: &SessionSpec) -> Result<Sessionized> {
    spec.validate()?;
    if series.is_empty() {
        return Err(Error::InsufficientData("no ticks to sessionize".into()));
    }
    let grid_len = spec.grid_len();
    let first_day = series.timestamps[0].div_euclid(DAY);
    let last_day = series.timestamps[series.len() - 1].div_euclid(DAY);

    let mut sessions = Vec::new();
    let mut dropped = Vec::new();
    let mut cursor = 0usize;
    for day in first_day..=last_day {
        let day_start = day * DAY;
        while cursor < series.len() && series.timestamps[cursor] < day_start {
            cursor += 1;
        }
        // `latest` indexes the last tick of this day at or before the grid point
        let mut latest: Option<usize> = None;
        let mut next = cursor;
        let mut values: Vec<Option<f64>> = Vec::with_capacity(grid_len);
        for k in 0..grid_len {
            let g = day_start + spec.start as i64 + (k as i64) * spec.interval as i64;
            while next < series.len() && series.timestamps[next] <= g {
                latest = Some(next);
                next += 1;
            }
            values.push(latest.map(|i| series.prices[i]));
        }
        let covered = values.iter().filter(|v| v.is_some()).count();
        let coverage = covered as f64 / grid_len as f64;
        if covered == 0 || coverage < spec.coverage_threshold {
            dropped.push(DroppedDay {
                day,
                date: date_of(day),
                coverage,
            });
            continue;
        }
        let first = values.iter().flatten().next().copied().expect("covered > 0");
        sessions.push(Session {
            day,
            date: date_of(day),
            values: values.into_iter().map(|v| v.unwrap_or(first)).collect(),
            coverage,
        });
    }
    if sessions.is_empty() {
        return Err(Error::InsufficientData(format!(
            "no day meets the coverage threshold {} ({} days dropped)",
            spec.coverage_threshold,
            dropped.len()
        )));
    }
    Ok(Sessionized {
        sessions,
        dropped,
        grid_len,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn schema() -> TickSchema {
        TickSchema::default()
    }

    #[test]
    fn two_rows() {
        let csv = "timestamp,price\n0,1.0\n30,1.1\n";
        let s = read_ticks(csv.as_bytes(), &schema(), "EURUSD", "mem").unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!(s.prices, vec![1.0, 1.1]);
    }

    #[test]
    fn out_of_order_row_is_named() {
        let csv = "timestamp,price\n0,1.0\n60,1.1\n30,1.2\n";
        let err = read_ticks(csv.as_bytes(), &schema(), "X", "mem").unwrap_err();
        match err {
            Error::Ingestion { problems, .. } => {
                assert_eq!(problems.len(), 1);
                assert_eq!(problems[0].line, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn bad_price_is_named() {
        let csv = "timestamp,price\n0,1.0\n30,abc\n60,-2\n";
        let err = read_ticks(csv.as_bytes(), &schema(), "X", "mem").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3") && msg.contains("line 4"), "{msg}");
    }

    #[test]
    fn empty_and_missing_columns() {
        assert!(matches!(
            read_ticks("timestamp,price\n".as_bytes(), &schema(), "X", "mem"),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            read_ticks("time,px\n0,1\n".as_bytes(), &schema(), "X", "mem"),
            Err(Error::Ingestion { .. })
        ));
        let custom = TickSchema {
            timestamp: "time".into(),
            price: "px".into(),
        };
        assert_eq!(read_ticks("time,px\n0,1\n".as_bytes(), &custom, "X", "mem").unwrap().len(), 1);
    }

    #[test]
    fn timestamp_formats() {
        assert_eq!(parse_timestamp("86400"), Some(86_400));
        assert_eq!(parse_timestamp("1970-01-02T00:00:30Z"), Some(86_430));
        assert_eq!(parse_timestamp("1970-01-02 00:01:00"), Some(86_460));
        assert_eq!(parse_timestamp("yesterday"), None);
    }

    #[test]
    fn afternoon_session_grid() {
        let spec = SessionSpec::parse("13:00", "18:00", 30, 0.95).unwrap();
        assert_eq!(spec.grid_len(), 601);
        // anchor of a 451-point lookback sits 450 steps after 13:00
        assert_eq!(spec.start + 450 * spec.interval, 16 * 3600 + 45 * 60);
        assert!(SessionSpec::parse("13:00", "18:00", 7, 0.95).is_err());
        assert!(SessionSpec::parse("18:00", "13:00", 30, 0.95).is_err());
    }

    #[test]
    fn single_tick_day_is_constant() {
        let spec = SessionSpec::parse("13:00", "14:00", 60, 0.0).unwrap();
        let day = 3 * DAY;
        let s = TickSeries::new(vec![day + 13 * 3600], vec![1.25], "X").unwrap();
        let out = sessionize(&s, &spec).unwrap();
        assert_eq!(out.sessions.len(), 1);
        assert_eq!(out.sessions[0].values, vec![1.25; 61]);
        assert_eq!(out.sessions[0].date, "1970-01-04");
    }

    #[test]
    fn empty_day_is_dropped() {
        let spec = SessionSpec::parse("13:00", "14:00", 60, 0.0).unwrap();
        let t0 = 13 * 3600;
        let s = TickSeries::new(vec![t0, 2 * DAY + t0], vec![1.0, 2.0], "X").unwrap();
        let out = sessionize(&s, &spec).unwrap();
        assert_eq!(out.sessions.len(), 2);
        assert_eq!(out.dropped.len(), 1);
        assert_eq!(out.dropped[0].day, 1);
        assert_eq!(out.dropped[0].coverage, 0.0);
    }

    #[test]
    fn low_coverage_day_is_dropped() {
        let spec = SessionSpec::parse("13:00", "14:00", 60, 0.95).unwrap();
        // first tick at 13:30 covers 31 of 61 points
        let s = TickSeries::new(vec![13 * 3600 + 1800], vec![1.0], "X").unwrap();
        assert!(matches!(sessionize(&s, &spec), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn regular_series_is_unchanged() {
        let spec = SessionSpec::parse("13:00", "13:10", 30, 0.95).unwrap();
        let mut ts = Vec::new();
        let mut px = Vec::new();
        for day in 0..3 {
            for k in 0..spec.grid_len() {
                ts.push(day * DAY + spec.start as i64 + k as i64 * 30);
                px.push(1.0 + (day * 100 + k as i64) as f64 * 1e-4);
            }
        }
        let s = TickSeries::new(ts, px.clone(), "X").unwrap();
        let out = sessionize(&s, &spec).unwrap();
        let flat: Vec<f64> = out.sessions.iter().flat_map(|s| s.values.clone()).collect();
        assert_eq!(flat, px);
        assert!(out.sessions.iter().all(|s| s.coverage == 1.0));
    }
}
