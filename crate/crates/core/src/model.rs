//! Domain types for half-hourly load curves and the datasets that group them.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::time::{CivilDate, Timestamp};

pub const SLOTS_PER_DAY: usize = 48;
pub const DAYS_PER_WEEK: usize = 7;
pub const SLOTS_PER_WEEK: usize = SLOTS_PER_DAY * DAYS_PER_WEEK;
pub const MIN_DAYS: usize = DAYS_PER_WEEK;
pub const DEFAULT_DAYS: usize = 365;

/// Plausible outdoor temperature range at ingestion, in °C.
pub const TEMPERATURE_BOUNDS: (f64, f64) = (-45.0, 55.0);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub enum ContractedPower {
    Kva6,
    Kva9,
    Kva12,
}

impl ContractedPower {
    pub const ALL: [ContractedPower; 3] = [Self::Kva6, Self::Kva9, Self::Kva12];

    pub fn kva(self) -> u32 {
        match self {
            Self::Kva6 => 6,
            Self::Kva9 => 9,
            Self::Kva12 => 12,
        }
    }

    pub fn from_kva(kva: u32) -> Option<Self> {
        match kva {
            6 => Some(Self::Kva6),
            9 => Some(Self::Kva9),
            12 => Some(Self::Kva12),
            _ => None,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl TryFrom<u32> for ContractedPower {
    type Error = String;

    fn try_from(kva: u32) -> Result<Self, String> {
        Self::from_kva(kva).ok_or_else(|| format!("contracted power must be 6, 9 or 12 kVA, got {kva}"))
    }
}

impl From<ContractedPower> for u32 {
    fn from(p: ContractedPower) -> u32 {
        p.kva()
    }
}

impl fmt::Display for ContractedPower {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}kVA", self.kva())
    }
}

/// Time-of-use tariff class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeOfUse {
    Midday,
    Night,
    Misc,
}

impl TimeOfUse {
    pub const ALL: [TimeOfUse; 3] = [Self::Midday, Self::Night, Self::Misc];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Midday => "midday",
            Self::Night => "night",
            Self::Misc => "misc",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl FromStr for TimeOfUse {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "midday" => Ok(Self::Midday),
            "night" => Ok(Self::Night),
            "misc" => Ok(Self::Misc),
            other => Err(Error::Parse {
                line: None,
                message: format!("time-of-use must be midday, night or misc, got `{other}`"),
            }),
        }
    }
}

impl fmt::Display for TimeOfUse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Test,
    Synthetic,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Train => "train",
            Self::Test => "test",
            Self::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One meter's half-hourly energy readings (kWh per slot).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadCurve {
    pub meter_id: String,
    pub start: Timestamp,
    pub values: Vec<f64>,
    pub power: ContractedPower,
    pub tou: TimeOfUse,
    pub station_id: String,
}

impl LoadCurve {
    pub fn n_days(&self) -> usize {
        self.values.len() / SLOTS_PER_DAY
    }

    pub fn category(&self) -> Category {
        Category::new(self.power, self.tou)
    }

    /// Calendar date of day `d` of the curve (the date of its first slot).
    pub fn day_date(&self, d: usize) -> CivilDate {
        self.start.add_days(d as i64).date()
    }

    pub fn days(&self) -> core::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(SLOTS_PER_DAY)
    }
}

/// Outdoor temperature (°C) per half-hour slot for one weather station.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSeries {
    pub station_id: String,
    pub start: Timestamp,
    pub values: Vec<f64>,
}

impl TemperatureSeries {
    /// The readings covering `window`, if the series spans it on the same grid.
    pub fn covering(&self, window: &Window) -> Option<&[f64]> {
        let offset = self.start.slots_until(window.start)?;
        if offset < 0 {
            return None;
        }
        let offset = offset as usize;
        self.values.get(offset..offset + window.n_slots())
    }
}

/// The common audit window of a dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub start: Timestamp,
    pub n_days: usize,
}

impl Window {
    pub fn new(start: Timestamp, n_days: usize) -> Self {
        Self { start, n_days }
    }

    pub fn n_slots(&self) -> usize {
        self.n_days * SLOTS_PER_DAY
    }

    pub fn day_date(&self, d: usize) -> CivilDate {
        self.start.add_days(d as i64).date()
    }

    pub fn day_dates(&self) -> impl Iterator<Item = CivilDate> + '_ {
        (0..self.n_days).map(|d| self.day_date(d))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignedDataset {
    pub role: Role,
    pub window: Window,
    pub curves: Vec<LoadCurve>,
    pub temperatures: BTreeMap<String, TemperatureSeries>,
}

impl AlignedDataset {
    pub fn new(role: Role, window: Window) -> Self {
        Self { role, window, curves: Vec::new(), temperatures: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    /// Temperature readings aligned with the window for a curve's station.
    pub fn temperature_for(&self, curve: &LoadCurve) -> Option<&[f64]> {
        self.temperatures.get(&curve.station_id)?.covering(&self.window)
    }

    /// A dataset with the same role, window and temperatures but other curves.
    pub fn with_curves(&self, curves: Vec<LoadCurve>) -> Self {
        Self {
            role: self.role,
            window: self.window,
            curves,
            temperatures: self.temperatures.clone(),
        }
    }

    pub fn select(&self, indices: &[usize]) -> Self {
        self.with_curves(indices.iter().map(|&i| self.curves[i].clone()).collect())
    }

    pub fn series(&self) -> Vec<&[f64]> {
        self.curves.iter().map(|c| c.values.as_slice()).collect()
    }
}

/// A (contracted power, time-of-use) cell, either coordinate possibly wildcarded.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Category {
    pub power: Option<ContractedPower>,
    pub tou: Option<TimeOfUse>,
}

impl Category {
    pub const ALL: Category = Category { power: None, tou: None };

    pub fn new(power: ContractedPower, tou: TimeOfUse) -> Self {
        Self { power: Some(power), tou: Some(tou) }
    }

    pub fn is_all(&self) -> bool {
        self.power.is_none() && self.tou.is_none()
    }

    pub fn contains(&self, curve: &LoadCurve) -> bool {
        self.power.is_none_or(|p| p == curve.power) && self.tou.is_none_or(|t| t == curve.tou)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_all() {
            return f.write_str("all");
        }
        match self.power {
            Some(p) => write!(f, "{p}")?,
            None => f.write_str("*")?,
        }
        match self.tou {
            Some(t) => write!(f, "/{t}"),
            None => f.write_str("/*"),
        }
    }
}

impl FromStr for Category {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        if s == "all" {
            return Ok(Self::ALL);
        }
        let bad = || Error::Parse { line: None, message: format!("bad category `{s}`") };
        let (p, t) = s.split_once('/').ok_or_else(bad)?;
        let power = match p {
            "*" => None,
            p => {
                let kva = p.strip_suffix("kVA").ok_or_else(bad)?.parse().map_err(|_| bad())?;
                Some(ContractedPower::from_kva(kva).ok_or_else(bad)?)
            }
        };
        let tou = match t {
            "*" => None,
            t => Some(t.parse()?),
        };
        Ok(Self { power, tou })
    }
}

impl Serialize for Category {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Category {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Splits a dataset into its (power, tou) cells plus the `all` aggregate.
pub fn partition_by_category(ds: &AlignedDataset) -> BTreeMap<Category, AlignedDataset> {
    let mut groups: BTreeMap<Category, Vec<LoadCurve>> = BTreeMap::new();
    for curve in &ds.curves {
        groups.entry(curve.category()).or_default().push(curve.clone());
    }
    let mut parts: BTreeMap<Category, AlignedDataset> =
        groups.into_iter().map(|(cat, curves)| (cat, ds.with_curves(curves))).collect();
    parts.insert(Category::ALL, ds.clone());
    parts
}

/// One broken invariant found by [`validate`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub meter_id: Option<String>,
    pub field: String,
    pub reason: String,
}

impl Violation {
    fn new(meter_id: Option<&str>, field: &str, reason: String) -> Self {
        Self { meter_id: meter_id.map(ToString::to_string), field: field.to_string(), reason }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.meter_id {
            Some(id) => write!(f, "{id}: {}: {}", self.field, self.reason),
            None => write!(f, "{}: {}", self.field, self.reason),
        }
    }
}

/// Checks every dataset invariant; an empty result means the dataset is usable.
pub fn validate(ds: &AlignedDataset) -> Vec<Violation> {
    let mut out = Vec::new();
    let window = &ds.window;
    if window.n_days < MIN_DAYS {
        out.push(Violation::new(
            None,
            "window",
            format!("window spans {} days, at least {MIN_DAYS} required", window.n_days),
        ));
    }
    if !window.start.is_slot_aligned() {
        out.push(Violation::new(None, "window", format!("start {} is not on a half-hour boundary", window.start)));
    }

    for (key, temp) in &ds.temperatures {
        let sid = Some(key.as_str());
        if temp.station_id != *key {
            out.push(Violation::new(sid, "station_id", format!("keyed as `{key}` but named `{}`", temp.station_id)));
        }
        if let Some(i) = temp.values.iter().position(|v| !v.is_finite()) {
            out.push(Violation::new(sid, "temp_c", format!("non-finite temperature at slot {i}")));
        }
        let (lo, hi) = TEMPERATURE_BOUNDS;
        if let Some((i, v)) = temp.values.iter().enumerate().find(|(_, v)| v.is_finite() && !(lo..=hi).contains(*v)) {
            out.push(Violation::new(sid, "temp_c", format!("temperature {v} at slot {i} outside [{lo}, {hi}]")));
        }
    }

    let mut seen = BTreeSet::new();
    for curve in &ds.curves {
        let id = Some(curve.meter_id.as_str());
        if !seen.insert(curve.meter_id.as_str()) {
            out.push(Violation::new(id, "meter_id", "duplicate meter id".to_string()));
        }
        if !curve.start.is_slot_aligned() {
            out.push(Violation::new(id, "start", format!("{} is not on a half-hour boundary", curve.start)));
        }
        if curve.start != window.start {
            out.push(Violation::new(id, "start", format!("starts at {}, window starts at {}", curve.start, window.start)));
        }
        let len = curve.values.len();
        if len % SLOTS_PER_DAY != 0 {
            out.push(Violation::new(id, "values", format!("length {len} is not a multiple of {SLOTS_PER_DAY}")));
        } else if len / SLOTS_PER_DAY < MIN_DAYS {
            out.push(Violation::new(id, "values", format!("{} days, at least {MIN_DAYS} required", len / SLOTS_PER_DAY)));
        }
        if len != window.n_slots() {
            out.push(Violation::new(id, "values", format!("length {len}, window has {} slots", window.n_slots())));
        }
        if let Some(i) = curve.values.iter().position(|v| !v.is_finite()) {
            out.push(Violation::new(id, "values", format!("non-finite reading at slot {i}")));
        }
        if let Some((i, v)) = curve.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            out.push(Violation::new(id, "values", format!("negative reading {v} at slot {i}")));
        }
        match ds.temperatures.get(&curve.station_id) {
            None => out.push(Violation::new(
                id,
                "station_id",
                format!("no temperature series for station `{}`", curve.station_id),
            )),
            Some(t) if t.covering(window).is_none() => out.push(Violation::new(
                id,
                "station_id",
                format!("temperature series for station `{}` does not cover the window", curve.station_id),
            )),
            Some(_) => {}
        }
    }
    out
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn curve(id: &str, power: ContractedPower, tou: TimeOfUse, values: Vec<f64>, start: Timestamp) -> LoadCurve {
        LoadCurve { meter_id: id.into(), start, values, power, tou, station_id: "S1".into() }
    }

    pub fn dataset(curves: Vec<LoadCurve>, n_days: usize, start: Timestamp, temp: f64) -> AlignedDataset {
        let window = Window::new(start, n_days);
        let mut ds = AlignedDataset::new(Role::Test, window);
        ds.temperatures.insert(
            "S1".into(),
            TemperatureSeries { station_id: "S1".into(), start, values: alloc::vec![temp; window.n_slots()] },
        );
        ds.curves = curves;
        ds
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use alloc::vec;
    use ContractedPower::*;
    use TimeOfUse::*;

    fn start() -> Timestamp {
        Timestamp::midnight(2022, 10, 1)
    }

    fn flat(id: &str, p: ContractedPower, t: TimeOfUse) -> LoadCurve {
        curve(id, p, t, vec![0.5; 7 * 48], start())
    }

    #[test]
    fn partition_two_categories() {
        let ds = dataset(vec![flat("a", Kva6, Night), flat("b", Kva9, Night)], 7, start(), 10.0);
        let parts = partition_by_category(&ds);
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[&Category::ALL].len(), 2);
        assert_eq!(parts[&Category::new(Kva6, Night)].curves[0].meter_id, "a");
        assert_eq!(parts[&Category::new(Kva9, Night)].curves[0].meter_id, "b");
    }

    #[test]
    fn partition_single_and_empty() {
        let ds = dataset(vec![flat("a", Kva6, Night), flat("b", Kva6, Night)], 7, start(), 10.0);
        let parts = partition_by_category(&ds);
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[&Category::new(Kva6, Night)].len(), 2);

        let empty = dataset(vec![], 7, start(), 10.0);
        let parts = partition_by_category(&empty);
        assert_eq!(parts.len(), 1);
        assert!(parts[&Category::ALL].is_empty());
    }

    #[test]
    fn partition_is_loss_free() {
        let cats = [(Kva6, Night), (Kva9, Midday), (Kva12, Misc), (Kva6, Misc)];
        let curves: Vec<_> = (0..12)
            .map(|i| {
                let (p, t) = cats[i % cats.len()];
                flat(&format!("m{i}"), p, t)
            })
            .collect();
        let ds = dataset(curves, 7, start(), 10.0);
        let parts = partition_by_category(&ds);
        let mut ids: Vec<_> = parts
            .iter()
            .filter(|(c, _)| !c.is_all())
            .flat_map(|(c, part)| {
                assert!(part.curves.iter().all(|x| c.contains(x)));
                part.curves.iter().map(|x| x.meter_id.clone())
            })
            .collect();
        ids.sort();
        let mut expected: Vec<_> = ds.curves.iter().map(|c| c.meter_id.clone()).collect();
        expected.sort();
        assert_eq!(ids, expected);
        // Idempotent on each part.
        for (c, part) in parts.iter().filter(|(c, _)| !c.is_all()) {
            let again = partition_by_category(part);
            assert_eq!(again[c], *part);
        }
    }

    #[test]
    fn validate_reports_violations() {
        let good: Vec<_> = (0..10).map(|i| flat(&format!("m{i}"), Kva6, Night)).collect();
        assert!(validate(&dataset(good.clone(), 7, start(), 10.0)).is_empty());

        let mut neg = good.clone();
        neg[3].values[5] = -0.1;
        let v = validate(&dataset(neg, 7, start(), 10.0));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].meter_id.as_deref(), Some("m3"));

        let mut orphan = good.clone();
        orphan[0].station_id = "nowhere".into();
        let v = validate(&dataset(orphan, 7, start(), 10.0));
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].field, "station_id");

        let mut dup = good;
        dup[1].meter_id = "m0".into();
        assert_eq!(validate(&dataset(dup, 7, start(), 10.0)).len(), 1);
    }

    #[test]
    fn validate_window_and_temperature_bounds() {
        let short = curve("a", Kva6, Night, vec![1.0; 6 * 48], start());
        let v = validate(&dataset(vec![short], 6, start(), 10.0));
        assert!(v.iter().any(|x| x.field == "window"));

        let v = validate(&dataset(vec![flat("a", Kva6, Night)], 7, start(), 60.0));
        assert!(v.iter().any(|x| x.field == "temp_c"));
    }

    #[test]
    fn category_text_round_trip() {
        for c in [Category::ALL, Category::new(Kva12, Midday), Category { power: Some(Kva9), tou: None }] {
            assert_eq!(c.to_string().parse::<Category>().unwrap(), c);
        }
        assert_eq!(Category::new(Kva6, Night).to_string(), "6kVA/night");
    }
}
