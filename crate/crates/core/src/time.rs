//! Minimal UTC calendar arithmetic on a half-hour grid.

use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::Error;

pub const MINUTES_PER_SLOT: i64 = 30;
pub const MINUTES_PER_DAY: i64 = 24 * 60;

/// A proleptic Gregorian calendar date.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CivilDate {
    pub year: i32,
    pub month: u8,
    pub day: u8,
}

impl CivilDate {
    pub fn new(year: i32, month: u8, day: u8) -> Option<Self> {
        if !(1..=12).contains(&month) || day == 0 || day > days_in_month(year, month) {
            return None;
        }
        Some(Self { year, month, day })
    }

    /// Days since 1970-01-01.
    pub fn days_since_epoch(self) -> i64 {
        // Hinnant's days_from_civil.
        let y = i64::from(self.year) - i64::from(self.month <= 2);
        let era = if y >= 0 { y } else { y - 399 } / 400;
        let yoe = y - era * 400;
        let m = i64::from(self.month);
        let mp = if m > 2 { m - 3 } else { m + 9 };
        let doy = (153 * mp + 2) / 5 + i64::from(self.day) - 1;
        let doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
        era * 146_097 + doe - 719_468
    }

    pub fn from_days_since_epoch(days: i64) -> Self {
        let z = days + 719_468;
        let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
        let doe = z - era * 146_097;
        let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
        let y = yoe + era * 400;
        let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        let mp = (5 * doy + 2) / 153;
        let day = (doy - (153 * mp + 2) / 5 + 1) as u8;
        let month = if mp < 10 { mp + 3 } else { mp - 9 } as u8;
        let year = (y + i64::from(month <= 2)) as i32;
        Self { year, month, day }
    }

    /// November through March inclusive.
    pub fn is_winter(self) -> bool {
        self.month >= 11 || self.month <= 3
    }

    /// June through August inclusive.
    pub fn is_summer(self) -> bool {
        (6..=8).contains(&self.month)
    }
}

pub fn is_leap_year(year: i32) -> bool {
    (year % 4 == 0 && year % 100 != 0) || year % 400 == 0
}

pub fn days_in_month(year: i32, month: u8) -> u8 {
    match month {
        1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
        4 | 6 | 9 | 11 => 30,
        2 if is_leap_year(year) => 29,
        2 => 28,
        _ => 0,
    }
}

/// A UTC instant with minute resolution, stored as minutes since the Unix epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(i64);

impl Timestamp {
    pub const fn from_unix_minutes(minutes: i64) -> Self {
        Self(minutes)
    }

    pub fn from_civil(date: CivilDate, hour: u8, minute: u8) -> Self {
        Self(date.days_since_epoch() * MINUTES_PER_DAY + i64::from(hour) * 60 + i64::from(minute))
    }

    /// Midnight of the given date. Panics on an invalid date.
    pub fn midnight(year: i32, month: u8, day: u8) -> Self {
        let date = CivilDate::new(year, month, day).expect("invalid calendar date");
        Self::from_civil(date, 0, 0)
    }

    pub const fn unix_minutes(self) -> i64 {
        self.0
    }

    pub fn is_slot_aligned(self) -> bool {
        self.0.rem_euclid(MINUTES_PER_SLOT) == 0
    }

    pub fn add_slots(self, slots: i64) -> Self {
        Self(self.0 + slots * MINUTES_PER_SLOT)
    }

    pub fn add_days(self, days: i64) -> Self {
        Self(self.0 + days * MINUTES_PER_DAY)
    }

    /// Signed number of whole slots from `self` to `later`, if they share the grid.
    pub fn slots_until(self, later: Timestamp) -> Option<i64> {
        let diff = later.0 - self.0;
        (diff % MINUTES_PER_SLOT == 0).then_some(diff / MINUTES_PER_SLOT)
    }

    pub fn date(self) -> CivilDate {
        CivilDate::from_days_since_epoch(self.0.div_euclid(MINUTES_PER_DAY))
    }

    pub fn hour(self) -> u8 {
        (self.0.rem_euclid(MINUTES_PER_DAY) / 60) as u8
    }

    pub fn minute(self) -> u8 {
        (self.0.rem_euclid(60)) as u8
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = self.date();
        write!(
            f,
            "{:04}-{:02}-{:02}T{:02}:{:02}:00Z",
            d.year,
            d.month,
            d.day,
            self.hour(),
            self.minute()
        )
    }
}

fn digits(s: &str) -> Option<i64> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Parses the canonical `YYYY-MM-DDTHH:MM[:SS]Z` form written by `Display`.
impl FromStr for Timestamp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || Error::Parse { line: None, message: alloc::format!("bad timestamp `{s}`") };
        let body = s.strip_suffix('Z').ok_or_else(bad)?;
        let (date, time) = body.split_once('T').ok_or_else(bad)?;
        let mut dp = date.splitn(3, '-');
        let year = digits(dp.next().ok_or_else(bad)?).ok_or_else(bad)? as i32;
        let month = digits(dp.next().ok_or_else(bad)?).ok_or_else(bad)? as u8;
        let day = digits(dp.next().ok_or_else(bad)?).ok_or_else(bad)? as u8;
        let mut tp = time.split(':');
        let hour = digits(tp.next().ok_or_else(bad)?).ok_or_else(bad)?;
        let minute = digits(tp.next().ok_or_else(bad)?).ok_or_else(bad)?;
        if let Some(sec) = tp.next() {
            if digits(sec) != Some(0) {
                return Err(bad());
            }
        }
        if hour > 23 || minute > 59 {
            return Err(bad());
        }
        let date = CivilDate::new(year, month, day).ok_or_else(bad)?;
        Ok(Self::from_civil(date, hour as u8, minute as u8))
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = <alloc::string::String as Deserialize>::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn epoch_round_trip() {
        assert_eq!(CivilDate::new(1970, 1, 1).unwrap().days_since_epoch(), 0);
        assert_eq!(CivilDate::new(2000, 3, 1).unwrap().days_since_epoch(), 11_017);
        for days in -800_000..800_000i64 {
            if days % 997 != 0 {
                continue;
            }
            let d = CivilDate::from_days_since_epoch(days);
            assert_eq!(d.days_since_epoch(), days);
        }
    }

    #[test]
    fn display_parse() {
        let t = Timestamp::from_civil(CivilDate::new(2022, 10, 31).unwrap(), 23, 30);
        let s = t.to_string();
        assert_eq!(s, "2022-10-31T23:30:00Z");
        assert_eq!(s.parse::<Timestamp>().unwrap(), t);
        assert!(t.is_slot_aligned());
        assert_eq!(t.add_slots(1).date(), CivilDate::new(2022, 11, 1).unwrap());
        assert!("2022-02-30T00:00:00Z".parse::<Timestamp>().is_err());
        assert!("2022-01-01T00:00:15Z".parse::<Timestamp>().is_err());
    }

    #[test]
    fn seasons() {
        assert!(CivilDate::new(2023, 3, 31).unwrap().is_winter());
        assert!(!CivilDate::new(2023, 4, 1).unwrap().is_winter());
        assert!(CivilDate::new(2022, 11, 1).unwrap().is_winter());
        assert!(CivilDate::new(2023, 7, 14).unwrap().is_summer());
    }
}
