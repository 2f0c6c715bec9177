use chrono::{NaiveDate, Timelike};
use serde::{Deserialize, Serialize};

use super::{CalendarFeatures, DataError, DemandSeries, MinMaxScaler};
use crate::Matrix;

/// Lag structure of the design matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    /// Reference days before the target day.
    pub lag_days: Vec<u32>,
    /// Consecutive hourly demands taken from each reference day, ending at
    /// the target hour of that day (inclusive).
    pub lag_window: usize,
    /// Width of the season one-hot block.
    pub n_seasons: usize,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self { lag_days: vec![1, 2, 7, 30], lag_window: 28, n_seasons: 7 }
    }
}

impl FeatureConfig {
    pub const CALENDAR_SCALARS: usize = 6;

    pub fn width(&self) -> usize {
        Self::CALENDAR_SCALARS + self.n_seasons + self.lag_days.len() * self.lag_window
    }

    pub fn feature_names(&self) -> Vec<String> {
        let mut names: Vec<String> = ["hour", "month", "day_of_week", "day_of_month", "year", "holiday_or_weekend"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        names.extend((0..self.n_seasons).map(|k| format!("season_{k}")));
        for d in &self.lag_days {
            for back in (0..self.lag_window).rev() {
                names.push(format!("lag_{d}d_minus_{back}h"));
            }
        }
        names
    }

    fn validate(&self) -> Result<(), DataError> {
        if self.lag_days.is_empty() || self.lag_days.contains(&0) {
            return Err(DataError::InvalidParameter("lag_days must be non-empty and >= 1".into()));
        }
        if self.lag_window == 0 {
            return Err(DataError::InvalidParameter("lag_window must be >= 1".into()));
        }
        if self.n_seasons == 0 {
            return Err(DataError::InvalidParameter("n_seasons must be >= 1".into()));
        }
        Ok(())
    }
}

/// Design matrix for one target hour, rows in date order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub x: Matrix,
    /// Raw demand at `(dates[i], target_hour)`.
    pub targets: Vec<f64>,
    pub dates: Vec<NaiveDate>,
    pub feature_names: Vec<String>,
    pub target_hour: u32,
    /// Set once the rows have been scaled.
    pub scaler: Option<MinMaxScaler>,
}

impl FeatureMatrix {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn width(&self) -> usize {
        self.x.ncols()
    }

    pub fn select(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            x: self.x.select_rows(idx),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
            dates: idx.iter().map(|&i| self.dates[i]).collect(),
            feature_names: self.feature_names.clone(),
            target_hour: self.target_hour,
            scaler: self.scaler.clone(),
        }
    }

    /// Fits a feature scaler on these (training) rows.
    pub fn fit_scaler(&self) -> Result<MinMaxScaler, DataError> {
        MinMaxScaler::fit(&self.x)
    }

    pub fn apply_scaler(&self, scaler: &MinMaxScaler) -> Result<FeatureMatrix, DataError> {
        Ok(FeatureMatrix { x: scaler.transform(&self.x)?, scaler: Some(scaler.clone()), ..self.clone() })
    }
}

/// Builds the design matrix for `target_hour`.
///
/// Each row holds the calendar features of `(D, target_hour)` followed,
/// for each `d` in `lag_days`, by the `lag_window` hourly demands ending at
/// hour `target_hour` of day `D - d` (oldest first). Dates lacking any lag
/// are dropped.
pub fn build_features(
    series: &DemandSeries,
    calendar: &[CalendarFeatures],
    target_hour: u32,
    config: &FeatureConfig,
) -> Result<FeatureMatrix, DataError> {
    config.validate()?;
    if target_hour > 23 {
        return Err(DataError::InvalidParameter(format!("target_hour {target_hour} > 23")));
    }
    if calendar.len() != series.len() {
        return Err(DataError::DimensionMismatch { expected: series.len(), found: calendar.len() });
    }
    if let Some(c) = calendar.iter().find(|c| c.season >= config.n_seasons) {
        return Err(DataError::InvalidParameter(format!(
            "season index {} exceeds n_seasons {}",
            c.season, config.n_seasons
        )));
    }
    let demand = series.demand();
    let width = config.width();
    let mut data = Vec::new();
    let mut targets = Vec::new();
    let mut dates = Vec::new();

    let first = (24 + target_hour as usize - series.start().hour() as usize) % 24;
    for i in (first..series.len()).step_by(24) {
        let cal = &calendar[i];
        debug_assert_eq!(cal.hour, target_hour);
        let windows: Option<Vec<usize>> = config
            .lag_days
            .iter()
            .map(|&d| {
                let end = i.checked_sub(24 * d as usize)?;
                end.checked_sub(config.lag_window - 1)
            })
            .collect();
        let Some(starts) = windows else { continue };

        data.extend_from_slice(&[
            f64::from(cal.hour),
            f64::from(cal.month),
            f64::from(cal.day_of_week),
            f64::from(cal.day_of_month),
            f64::from(cal.year),
            if cal.is_holiday_or_weekend { 1.0 } else { 0.0 },
        ]);
        data.extend((0..config.n_seasons).map(|k| if k == cal.season { 1.0 } else { 0.0 }));
        for s in starts {
            data.extend_from_slice(&demand[s..s + config.lag_window]);
        }
        targets.push(demand[i]);
        dates.push(series.timestamp(i).date());
    }
    if targets.is_empty() {
        return Err(DataError::SeriesTooShort);
    }
    Ok(FeatureMatrix {
        x: Matrix::new(targets.len(), width, data),
        targets,
        dates,
        feature_names: config.feature_names(),
        target_hour,
        scaler: None,
    })
}

/// Splits rows into those dated before `boundary` and those on or after it.
pub fn split_train_test(
    matrix: &FeatureMatrix,
    boundary: NaiveDate,
) -> Result<(FeatureMatrix, FeatureMatrix), DataError> {
    let (train, test): (Vec<usize>, Vec<usize>) = (0..matrix.len()).partition(|&i| matrix.dates[i] < boundary);
    if train.is_empty() || test.is_empty() {
        return Err(DataError::EmptySplit { train: train.len(), test: test.len() });
    }
    Ok((matrix.select(&train), matrix.select(&test)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{label_calendar, synth_demand, SeasonTable, SynthParams};

    fn series(days: usize) -> DemandSeries {
        synth_demand(&SynthParams { n_days: days, seed: 3, ..Default::default() }).unwrap()
    }

    fn build(s: &DemandSeries, hour: u32, cfg: &FeatureConfig) -> Result<FeatureMatrix, DataError> {
        let cal = label_calendar(s, &SeasonTable::default()).unwrap();
        build_features(s, &cal, hour, cfg)
    }

    #[test]
    fn default_width_and_names() {
        let cfg = FeatureConfig::default();
        assert_eq!(cfg.lag_days.len() * cfg.lag_window, 112);
        assert_eq!(cfg.width(), 6 + 7 + 112);
        assert_eq!(cfg.feature_names().len(), cfg.width());
    }

    #[test]
    fn single_lag_is_previous_day_same_hour() {
        let s = series(5);
        let cfg = FeatureConfig { lag_days: vec![1], lag_window: 1, n_seasons: 7 };
        let m = build(&s, 12, &cfg).unwrap();
        assert_eq!(m.len(), 4);
        for i in 0..m.len() {
            let ts = m.dates[i].and_hms_opt(12, 0, 0).unwrap();
            let prev = s.demand_at(ts - chrono::Duration::days(1)).unwrap();
            assert_eq!(m.x.get(i, m.width() - 1), prev);
            assert_eq!(m.targets[i], s.demand_at(ts).unwrap());
        }
    }

    /// Counts dates whose every lag timestamp exists, by direct enumeration
    /// over the calendar rather than index arithmetic.
    fn enumerate_complete_dates(s: &DemandSeries, hour: u32, cfg: &FeatureConfig) -> usize {
        let mut count = 0;
        let mut date = s.start().date();
        while date <= s.end().date() {
            let target = date.and_hms_opt(hour, 0, 0).unwrap();
            let ok = s.demand_at(target).is_some()
                && cfg.lag_days.iter().all(|&d| {
                    let anchor = target - chrono::Duration::days(i64::from(d));
                    (0..cfg.lag_window as i64).all(|b| s.demand_at(anchor - chrono::Duration::hours(b)).is_some())
                });
            count += usize::from(ok);
            date = date.succ_opt().unwrap();
        }
        count
    }

    #[test]
    fn row_count_matches_enumeration() {
        let s = series(100);
        let cfg = FeatureConfig::default();
        for hour in [0, 3, 12, 23] {
            let m = build(&s, hour, &cfg).unwrap();
            assert_eq!(m.len(), enumerate_complete_dates(&s, hour, &cfg));
        }
        // The 28-hour window ending on day D-30 reaches back into day D-31.
        assert_eq!(build(&s, 12, &cfg).unwrap().len(), 69);
    }

    #[test]
    fn lags_never_reach_the_target_day() {
        let s = series(40);
        let m = build(&s, 23, &FeatureConfig::default()).unwrap();
        let base = FeatureConfig::CALENDAR_SCALARS + 7;
        for i in 0..m.len() {
            // the newest lag of day D-1 is exactly 24 h before the target
            let ts = m.dates[i].and_hms_opt(23, 0, 0).unwrap() - chrono::Duration::hours(24);
            assert_eq!(m.x.get(i, base + 27), s.demand_at(ts).unwrap());
        }
    }

    #[test]
    fn deterministic_and_too_short() {
        let s = series(40);
        let cfg = FeatureConfig::default();
        assert_eq!(build(&s, 7, &cfg).unwrap(), build(&s, 7, &cfg).unwrap());
        let short = series(20);
        assert!(matches!(build(&short, 7, &cfg), Err(DataError::SeriesTooShort)));
    }

    #[test]
    fn split_counts_and_empty_sides() {
        let s = series(100);
        let m = build(&s, 12, &FeatureConfig::default()).unwrap();
        let boundary = m.dates[50];
        let (train, test) = split_train_test(&m, boundary).unwrap();
        assert_eq!((train.len(), test.len()), (50, m.len() - 50));
        assert!(train.dates.iter().all(|d| *d < boundary));
        assert!(test.dates.iter().all(|d| *d >= boundary));
        let before = m.dates[0];
        assert!(matches!(split_train_test(&m, before), Err(DataError::EmptySplit { .. })));
        let after = m.dates[m.len() - 1].succ_opt().unwrap();
        assert!(matches!(split_train_test(&m, after), Err(DataError::EmptySplit { .. })));
    }
}
