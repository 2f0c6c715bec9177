use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use chrono::{DateTime, Duration, NaiveDate, NaiveDateTime};

use super::DataError;

/// Hourly national demand observations in MWh.
///
/// Timestamps are strictly increasing with a fixed one-hour step, so a
/// record can be located by its offset from the first timestamp.
#[derive(Debug, Clone, PartialEq)]
pub struct DemandSeries {
    start: NaiveDateTime,
    demand: Vec<f64>,
    holidays: BTreeSet<NaiveDate>,
}

impl DemandSeries {
    /// Validates `records` (in any order) and builds the series.
    pub fn new(mut records: Vec<(NaiveDateTime, f64)>, holidays: BTreeSet<NaiveDate>) -> Result<Self, DataError> {
        if records.is_empty() {
            return Err(DataError::EmptySeries);
        }
        records.sort_by_key(|r| r.0);
        for w in records.windows(2) {
            let (a, b) = (w[0].0, w[1].0);
            if a == b {
                return Err(DataError::DuplicateTimestamp(a));
            }
            if b - a != Duration::hours(1) {
                return Err(DataError::GapInSeries { missing: a + Duration::hours(1) });
            }
        }
        for &(ts, v) in &records {
            if !v.is_finite() {
                return Err(DataError::NonFiniteDemand(ts));
            }
            if v < 0.0 {
                return Err(DataError::NegativeDemand { timestamp: ts, value: v });
            }
        }
        Ok(Self { start: records[0].0, demand: records.into_iter().map(|r| r.1).collect(), holidays })
    }

    pub fn len(&self) -> usize {
        self.demand.len()
    }

    pub fn is_empty(&self) -> bool {
        self.demand.is_empty()
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start
    }

    pub fn end(&self) -> NaiveDateTime {
        self.timestamp(self.len() - 1)
    }

    pub fn timestamp(&self, i: usize) -> NaiveDateTime {
        self.start + Duration::hours(i as i64)
    }

    pub fn demand(&self) -> &[f64] {
        &self.demand
    }

    pub fn holidays(&self) -> &BTreeSet<NaiveDate> {
        &self.holidays
    }

    pub fn with_holidays(mut self, holidays: BTreeSet<NaiveDate>) -> Self {
        self.holidays = holidays;
        self
    }

    pub fn records(&self) -> impl Iterator<Item = (NaiveDateTime, f64)> + '_ {
        self.demand.iter().enumerate().map(|(i, &d)| (self.timestamp(i), d))
    }

    /// Index of `ts`, if it lies on the series grid.
    pub fn index_of(&self, ts: NaiveDateTime) -> Option<usize> {
        let delta = ts - self.start;
        if delta < Duration::zero() || delta.num_seconds() % 3600 != 0 {
            return None;
        }
        let i = delta.num_hours() as usize;
        (i < self.demand.len()).then_some(i)
    }

    pub fn demand_at(&self, ts: NaiveDateTime) -> Option<f64> {
        self.index_of(ts).map(|i| self.demand[i])
    }
}

/// Names of the timestamp and demand columns plus the timestamp format.
#[derive(Debug, Clone)]
pub struct ColumnMap {
    pub timestamp: String,
    pub demand: String,
    /// chrono format string; `None` accepts the common ISO-8601 layouts.
    pub timestamp_format: Option<String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        Self { timestamp: "timestamp".into(), demand: "demand".into(), timestamp_format: None }
    }
}

const ISO_LAYOUTS: &[&str] = &["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"];

fn parse_timestamp(raw: &str, format: Option<&str>) -> Option<NaiveDateTime> {
    let raw = raw.trim();
    if let Some(f) = format {
        return NaiveDateTime::parse_from_str(raw, f).ok();
    }
    ISO_LAYOUTS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
        .or_else(|| DateTime::parse_from_rfc3339(raw).ok().map(|d| d.naive_utc()))
}

fn parse_number(raw: &str) -> Option<f64> {
    // Accept the typographic minus sign some exports use.
    raw.trim().replace('\u{2212}', "-").parse().ok()
}

/// Reads a comma-separated demand file with a header row.
pub fn ingest_demand_csv(path: &Path, columns: &ColumnMap) -> Result<DemandSeries, DataError> {
    let file = std::fs::File::open(path)?;
    read_demand_csv(file, columns)
}

pub(crate) fn read_demand_csv<R: Read>(reader: R, columns: &ColumnMap) -> Result<DemandSeries, DataError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find =
        |name: &str| headers.iter().position(|h| h == name).ok_or_else(|| DataError::MissingColumn(name.to_string()));
    let ts_col = find(&columns.timestamp)?;
    let d_col = find(&columns.demand)?;

    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let ts_raw = rec.get(ts_col).unwrap_or("");
        let ts = parse_timestamp(ts_raw, columns.timestamp_format.as_deref())
            .ok_or_else(|| DataError::UnparsableTimestamp { line, value: ts_raw.to_string() })?;
        let d_raw = rec.get(d_col).unwrap_or("");
        let d = parse_number(d_raw).ok_or_else(|| DataError::UnparsableDemand { line, value: d_raw.to_string() })?;
        records.push((ts, d));
    }
    DemandSeries::new(records, BTreeSet::new())
}

/// Writes `timestamp,demand` rows in ISO-8601.
pub fn write_demand_csv(series: &DemandSeries, path: &Path) -> Result<(), DataError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["timestamp", "demand"])?;
    for (ts, d) in series.records() {
        w.write_record([ts.format("%Y-%m-%dT%H:%M:%S").to_string(), d.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// Parses one ISO-8601 date per line. Blank lines and `#` comments are skipped.
pub fn parse_holidays(text: &str) -> Result<BTreeSet<NaiveDate>, DataError> {
    let mut out = BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let d = NaiveDate::parse_from_str(line, "%Y-%m-%d")
            .map_err(|_| DataError::UnparsableHoliday { line: i + 1, value: line.to_string() })?;
        out.insert(d);
    }
    Ok(out)
}

pub fn read_holidays(path: &Path) -> Result<BTreeSet<NaiveDate>, DataError> {
    parse_holidays(&std::fs::read_to_string(path)?)
}
