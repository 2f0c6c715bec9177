use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, NaiveDateTime, Timelike, Weekday};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{DataError, DemandSeries};

/// A calendar month and day, written `MM-DD`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct MonthDay {
    pub month: u32,
    pub day: u32,
}

impl MonthDay {
    pub const fn new(month: u32, day: u32) -> Self {
        Self { month, day }
    }

    fn of(date: NaiveDate) -> Self {
        Self { month: date.month(), day: date.day() }
    }
}

impl fmt::Display for MonthDay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:02}-{:02}", self.month, self.day)
    }
}

impl FromStr for MonthDay {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (m, d) = s.split_once('-').ok_or_else(|| format!("expected MM-DD, got `{s}`"))?;
        let month: u32 = m.parse().map_err(|_| format!("bad month in `{s}`"))?;
        let day: u32 = d.parse().map_err(|_| format!("bad day in `{s}`"))?;
        // 2020 is a leap year, so 02-29 is accepted.
        NaiveDate::from_ymd_opt(2020, month, day).ok_or_else(|| format!("invalid date `{s}`"))?;
        Ok(Self { month, day })
    }
}

impl Serialize for MonthDay {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for MonthDay {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Half-open `[start, end)` interval of the calendar year; wraps past
/// 31 December when `end <= start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonInterval {
    pub name: String,
    pub start: MonthDay,
    pub end: MonthDay,
}

impl SeasonInterval {
    fn contains(&self, md: MonthDay) -> bool {
        if self.start < self.end {
            self.start <= md && md < self.end
        } else {
            md >= self.start || md < self.end
        }
    }
}

/// Partition of the calendar year into named seasons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SeasonTable {
    seasons: Vec<SeasonInterval>,
}

impl Default for SeasonTable {
    /// Seven reserve-market seasons: spring, summer, autumn split in two and
    /// winter split in three.
    fn default() -> Self {
        let s = |name: &str, a: (u32, u32), b: (u32, u32)| SeasonInterval {
            name: name.into(),
            start: MonthDay::new(a.0, a.1),
            end: MonthDay::new(b.0, b.1),
        };
        Self {
            seasons: vec![
                s("winter_late", (2, 1), (3, 1)),
                s("spring", (3, 1), (6, 1)),
                s("summer", (6, 1), (9, 1)),
                s("autumn_early", (9, 1), (10, 16)),
                s("autumn_late", (10, 16), (12, 1)),
                s("winter_early", (12, 1), (1, 1)),
                s("winter_mid", (1, 1), (2, 1)),
            ],
        }
    }
}

impl SeasonTable {
    pub fn new(seasons: Vec<SeasonInterval>) -> Result<Self, DataError> {
        let t = Self { seasons };
        t.validate()?;
        Ok(t)
    }

    /// Checks that every day of a leap year falls in exactly one interval.
    pub fn validate(&self) -> Result<(), DataError> {
        if self.seasons.is_empty() {
            return Err(DataError::InvalidSeasonTable("no seasons".into()));
        }
        if let Some(s) = self.seasons.iter().find(|s| s.start == s.end) {
            return Err(DataError::InvalidSeasonTable(format!("season `{}` is empty", s.name)));
        }
        let mut day = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        while day.year() == 2020 {
            let md = MonthDay::of(day);
            match self.seasons.iter().filter(|s| s.contains(md)).count() {
                0 => return Err(DataError::UncoveredDate(day)),
                1 => {}
                _ => return Err(DataError::OverlappingSeasons(day)),
            }
            day = day.succ_opt().unwrap();
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.seasons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seasons.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.seasons.iter().map(|s| s.name.as_str())
    }

    /// Index of the season containing `date`. Assumes a validated table.
    pub fn season_of(&self, date: NaiveDate) -> usize {
        let md = MonthDay::of(date);
        self.seasons.iter().position(|s| s.contains(md)).expect("validated season table covers every date")
    }
}

/// Calendar predictors of one hourly record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CalendarFeatures {
    pub hour: u32,
    pub month: u32,
    /// Monday = 0 … Sunday = 6.
    pub day_of_week: u32,
    pub day_of_month: u32,
    pub year: i32,
    pub is_holiday_or_weekend: bool,
    /// Index into the [`SeasonTable`] used for labelling.
    pub season: usize,
}

impl CalendarFeatures {
    pub fn of(ts: NaiveDateTime, holidays: &std::collections::BTreeSet<NaiveDate>, table: &SeasonTable) -> Self {
        let date = ts.date();
        let weekend = matches!(date.weekday(), Weekday::Sat | Weekday::Sun);
        Self {
            hour: ts.hour(),
            month: date.month(),
            day_of_week: date.weekday().num_days_from_monday(),
            day_of_month: date.day(),
            year: date.year(),
            is_holiday_or_weekend: weekend || holidays.contains(&date),
            season: table.season_of(date),
        }
    }
}

/// One [`CalendarFeatures`] per record of `series`.
pub fn label_calendar(series: &DemandSeries, table: &SeasonTable) -> Result<Vec<CalendarFeatures>, DataError> {
    table.validate()?;
    Ok(series.records().map(|(ts, _)| CalendarFeatures::of(ts, series.holidays(), table)).collect())
}
