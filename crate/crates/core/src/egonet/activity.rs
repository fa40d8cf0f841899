//! Activity filters that decide whether a user's history is reliable enough
//! to extract an ego network from.

use chrono::{DateTime, Datelike, NaiveDate};
use serde::{Deserialize, Serialize};

use super::EgonetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct YearMonth {
    pub year: i32,
    pub month: u32,
}

impl YearMonth {
    pub fn of_timestamp(ts: i64) -> Option<Self> {
        let dt = DateTime::from_timestamp(ts, 0)?;
        Some(Self { year: dt.year(), month: dt.month() })
    }

    pub fn next(self) -> Self {
        if self.month == 12 {
            Self { year: self.year + 1, month: 1 }
        } else {
            Self { year: self.year, month: self.month + 1 }
        }
    }

    pub fn days(self) -> u32 {
        let first = NaiveDate::from_ymd_opt(self.year, self.month, 1);
        let next = self.next();
        let next_first = NaiveDate::from_ymd_opt(next.year, next.month, 1);
        match (first, next_first) {
            (Some(a), Some(b)) => (b - a).num_days() as u32,
            _ => 30,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthActivity {
    pub days: u32,
    pub tweets: u64,
}

/// Per-month posting counts over the span of a user's activity, including
/// months in which the user posted nothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityProfile {
    pub first_ts: i64,
    pub last_ts: i64,
    pub months: Vec<MonthActivity>,
}

impl ActivityProfile {
    /// Buckets post timestamps (UTC seconds) into calendar months.
    pub fn from_timestamps(timestamps: &[i64]) -> Result<Self, EgonetError> {
        let first = *timestamps.iter().min().ok_or(EgonetError::EmptyProfile)?;
        let last = *timestamps.iter().max().unwrap();
        let start = YearMonth::of_timestamp(first).ok_or(EgonetError::InvalidTimestamp(first))?;
        let end = YearMonth::of_timestamp(last).ok_or(EgonetError::InvalidTimestamp(last))?;
        let mut months = Vec::new();
        let mut index = std::collections::HashMap::new();
        let mut ym = start;
        loop {
            index.insert(ym, months.len());
            months.push(MonthActivity { days: ym.days(), tweets: 0 });
            if ym == end {
                break;
            }
            ym = ym.next();
        }
        for &ts in timestamps {
            let ym = YearMonth::of_timestamp(ts).ok_or(EgonetError::InvalidTimestamp(ts))?;
            months[index[&ym]].tweets += 1;
        }
        Ok(Self { first_ts: first, last_ts: last, months })
    }

    pub fn from_months(months: Vec<MonthActivity>) -> Self {
        Self { first_ts: 0, last_ts: 0, months }
    }

    pub fn months_active(&self) -> usize {
        self.months.len()
    }
}

/// True when at least `min_fraction` of the profile's months reach an average
/// of `min_rate` posts per day.
pub fn regularity_filter(
    profile: &ActivityProfile,
    min_rate: f64,
    min_fraction: f64,
) -> Result<bool, EgonetError> {
    if profile.months.is_empty() {
        return Err(EgonetError::EmptyProfile);
    }
    let regular = profile
        .months
        .iter()
        .filter(|m| m.tweets as f64 >= min_rate * m.days as f64)
        .count();
    Ok(regular as f64 >= min_fraction * profile.months.len() as f64)
}

/// True when the history is still at least `min_span` months long after
/// dropping the first `burn_in` months.
pub fn stationarity_filter(
    profile: &ActivityProfile,
    burn_in: usize,
    min_span: usize,
) -> Result<bool, EgonetError> {
    if profile.months.is_empty() {
        return Err(EgonetError::EmptyProfile);
    }
    Ok(profile.months_active().saturating_sub(burn_in) >= min_span)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActivityFilter {
    pub min_rate: f64,
    pub min_fraction: f64,
    pub burn_in: usize,
    pub min_span: usize,
}

impl Default for ActivityFilter {
    fn default() -> Self {
        Self { min_rate: 1.0 / 3.0, min_fraction: 0.5, burn_in: 6, min_span: 12 }
    }
}

impl ActivityFilter {
    pub fn accepts(&self, profile: &ActivityProfile) -> Result<bool, EgonetError> {
        Ok(regularity_filter(profile, self.min_rate, self.min_fraction)?
            && stationarity_filter(profile, self.burn_in, self.min_span)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform(n: usize, days: u32, tweets: u64) -> Vec<MonthActivity> {
        vec![MonthActivity { days, tweets }; n]
    }

    #[test]
    fn regularity_examples() {
        let busy = ActivityProfile::from_months(uniform(12, 31, 31));
        assert!(regularity_filter(&busy, 1.0 / 3.0, 0.5).unwrap());

        let silent = ActivityProfile::from_months(uniform(12, 31, 0));
        assert!(!regularity_filter(&silent, 1.0 / 3.0, 0.5).unwrap());

        // 12 >= 30 / 3 holds for half of the 20 months: exactly at the 50% bar.
        let mut months = uniform(10, 30, 12);
        months.extend(uniform(10, 30, 5));
        let half = ActivityProfile::from_months(months);
        assert!(regularity_filter(&half, 1.0 / 3.0, 0.5).unwrap());
        assert!(!regularity_filter(&half, 1.0 / 3.0, 0.51).unwrap());

        let empty = ActivityProfile::from_months(Vec::new());
        assert_eq!(regularity_filter(&empty, 1.0 / 3.0, 0.5), Err(EgonetError::EmptyProfile));
    }

    #[test]
    fn stationarity_examples() {
        let p = |n| ActivityProfile::from_months(uniform(n, 30, 20));
        assert!(stationarity_filter(&p(24), 6, 12).unwrap());
        assert!(!stationarity_filter(&p(3), 6, 12).unwrap());
        assert!(stationarity_filter(&p(18), 6, 12).unwrap());
        assert!(!stationarity_filter(&p(17), 6, 12).unwrap());
        assert_eq!(
            stationarity_filter(&ActivityProfile::from_months(vec![]), 6, 12),
            Err(EgonetError::EmptyProfile)
        );
    }

    #[test]
    fn profile_from_timestamps_counts_silent_months() {
        // 2020-01-15, 2020-01-20, 2020-04-02 (UTC).
        let ts = [1_579_046_400, 1_579_478_400, 1_585_785_600];
        let p = ActivityProfile::from_timestamps(&ts).unwrap();
        assert_eq!(p.months_active(), 4);
        let counts: Vec<u64> = p.months.iter().map(|m| m.tweets).collect();
        assert_eq!(counts, vec![2, 0, 0, 1]);
        let days: Vec<u32> = p.months.iter().map(|m| m.days).collect();
        assert_eq!(days, vec![31, 29, 31, 30]);
        assert_eq!(ActivityProfile::from_timestamps(&[]), Err(EgonetError::EmptyProfile));
    }
}
