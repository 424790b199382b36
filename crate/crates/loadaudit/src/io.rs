//! CSV datasets, manifests, score files, plot tables and the JSON report.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime};
use loadaudit_core::privacy::{AttackScoreSet, ScoreEntry};
use loadaudit_core::report::MetricReport;
use loadaudit_core::{
    validate, AlignedDataset, ContractedPower, LoadCurve, Role, TemperatureSeries, TimeOfUse, Timestamp, Window,
};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MANIFEST_FORMAT_VERSION: u32 = 1;

/// Locates the three CSV files of one dataset. Relative paths are resolved
/// against the manifest's directory.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub role: Role,
    pub load_path: PathBuf,
    pub temperature_path: PathBuf,
    pub metadata_path: PathBuf,
}

impl DatasetManifest {
    fn resolved(mut self, base: &Path) -> Self {
        for p in [&mut self.load_path, &mut self.temperature_path, &mut self.metadata_path] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        self
    }
}

pub fn read_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let m: DatasetManifest = serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })?;
    if m.format_version != MANIFEST_FORMAT_VERSION {
        return Err(Error::Schema {
            path: path.into(),
            message: format!("format_version {} is not supported (expected {MANIFEST_FORMAT_VERSION})", m.format_version),
        });
    }
    Ok(m.resolved(path.parent().unwrap_or(Path::new("."))))
}

/// Accepts RFC 3339 (`2021-01-04T00:30:00Z`, offsets allowed) or a naive
/// `YYYY-MM-DD[ T]HH:MM[:SS]` taken as UTC.
pub fn parse_timestamp(s: &str) -> std::result::Result<Timestamp, String> {
    let s = s.trim();
    let secs = match DateTime::parse_from_rfc3339(s) {
        Ok(dt) => dt.timestamp(),
        Err(_) => ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"]
            .iter()
            .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
            .map(|dt| dt.and_utc().timestamp())
            .ok_or_else(|| format!("unrecognised timestamp `{s}`"))?,
    };
    if secs % 60 != 0 {
        return Err(format!("timestamp `{s}` has non-zero seconds"));
    }
    let ts = Timestamp::from_unix_minutes(secs.div_euclid(60));
    if !ts.is_slot_aligned() {
        return Err(format!("timestamp `{s}` is not on a half-hour boundary"));
    }
    Ok(ts)
}

struct Table {
    path: PathBuf,
    reader: csv::Reader<File>,
    columns: Vec<usize>,
}

impl Table {
    fn open(path: &Path, required: &[&str]) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
        let headers = reader.headers().map_err(|source| Error::Csv { path: path.into(), source })?.clone();
        let columns = required
            .iter()
            .map(|name| {
                headers.iter().position(|h| h == *name).ok_or_else(|| Error::Schema {
                    path: path.into(),
                    message: format!("missing column `{name}`"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { path: path.into(), reader, columns })
    }

    /// Visits each data row as `(line, fields)` in required-column order.
    fn for_each(mut self, mut f: impl FnMut(&Path, u64, &[&str]) -> Result<()>) -> Result<()> {
        let mut record = csv::StringRecord::new();
        loop {
            match self.reader.read_record(&mut record) {
                Ok(false) => return Ok(()),
                Ok(true) => {}
                Err(e) => {
                    let line = e.position().map_or(0, |p| p.line());
                    return Err(Error::Parse { path: self.path, line, message: e.to_string() });
                }
            }
            let line = record.position().map_or(0, |p| p.line());
            let fields: Vec<&str> = self.columns.iter().map(|&i| record.get(i).unwrap_or("")).collect();
            f(&self.path, line, &fields)?;
        }
    }
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse { path: path.into(), line, message: message.into() }
}

fn parse_number(path: &Path, line: u64, field: &str, s: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|_| parse_err(path, line, format!("{field} `{s}` is not a number")))
}

type Readings = BTreeMap<String, BTreeMap<Timestamp, f64>>;

fn read_long(path: &Path, columns: [&str; 3]) -> Result<Readings> {
    let mut out: Readings = BTreeMap::new();
    Table::open(path, &columns)?.for_each(|p, line, f| {
        if f[0].is_empty() {
            return Err(parse_err(p, line, format!("empty {}", columns[0])));
        }
        let ts = parse_timestamp(f[1]).map_err(|m| parse_err(p, line, m))?;
        let v = parse_number(p, line, columns[2], f[2])?;
        if out.entry(f[0].to_string()).or_default().insert(ts, v).is_some() {
            return Err(parse_err(p, line, format!("duplicate reading for `{}` at {ts}", f[0])));
        }
        Ok(())
    })?;
    Ok(out)
}

/// A contiguous half-hourly series; gaps are rejected, never imputed.
fn contiguous(path: &Path, key: &str, readings: &BTreeMap<Timestamp, f64>) -> Result<(Timestamp, Vec<f64>)> {
    let start = *readings.keys().next().expect("grouped readings are non-empty");
    let mut values = Vec::with_capacity(readings.len());
    for (i, (ts, v)) in readings.iter().enumerate() {
        if *ts != start.add_slots(i as i64) {
            return Err(Error::Schema {
                path: path.into(),
                message: format!("`{key}` has a gap before {ts} (expected {})", start.add_slots(i as i64)),
            });
        }
        values.push(*v);
    }
    Ok((start, values))
}

struct Meta {
    power: ContractedPower,
    tou: TimeOfUse,
    station_id: String,
}

fn read_metadata(path: &Path) -> Result<BTreeMap<String, Meta>> {
    let mut out = BTreeMap::new();
    Table::open(path, &["meter_id", "power_kva", "tou", "station_id"])?.for_each(|p, line, f| {
        let schema = |message: String| Error::Schema { path: p.into(), message: format!("line {line}: {message}") };
        let kva: u32 = f[1].parse().map_err(|_| schema(format!("power_kva `{}` is not an integer", f[1])))?;
        let power = ContractedPower::from_kva(kva).ok_or_else(|| schema(format!("power_kva {kva} is not one of 6, 9, 12")))?;
        let tou: TimeOfUse = f[2].parse().map_err(|_| schema(format!("tou `{}` is not one of midday, night, misc", f[2])))?;
        let meta = Meta { power, tou, station_id: f[3].to_string() };
        if out.insert(f[0].to_string(), meta).is_some() {
            return Err(parse_err(p, line, format!("duplicate metadata for `{}`", f[0])));
        }
        Ok(())
    })?;
    Ok(out)
}

/// Reads and validates one dataset. Row order in any file does not matter.
pub fn read_dataset(m: &DatasetManifest) -> Result<AlignedDataset> {
    let loads = read_long(&m.load_path, ["meter_id", "timestamp", "kwh"])?;
    let temps = read_long(&m.temperature_path, ["station_id", "timestamp", "temp_c"])?;
    let meta = read_metadata(&m.metadata_path)?;

    if loads.is_empty() {
        return Err(Error::Schema { path: m.load_path.clone(), message: "no load readings".into() });
    }
    for id in meta.keys().filter(|id| !loads.contains_key(*id)) {
        return Err(Error::Schema { path: m.metadata_path.clone(), message: format!("meter `{id}` has metadata but no readings") });
    }

    let mut curves = Vec::with_capacity(loads.len());
    for (id, readings) in &loads {
        let info = meta.get(id).ok_or_else(|| Error::Schema {
            path: m.metadata_path.clone(),
            message: format!("meter `{id}` has readings but no metadata"),
        })?;
        let (start, values) = contiguous(&m.load_path, id, readings)?;
        curves.push(LoadCurve { meter_id: id.clone(), start, values, power: info.power, tou: info.tou, station_id: info.station_id.clone() });
    }
    let first = &curves[0];
    if first.values.len() % loadaudit_core::model::SLOTS_PER_DAY != 0 {
        return Err(Error::Alignment(format!("meter `{}` does not cover a whole number of days", first.meter_id)));
    }
    let window = Window::new(first.start, first.values.len() / loadaudit_core::model::SLOTS_PER_DAY);
    if let Some(c) = curves.iter().find(|c| c.start != window.start || c.values.len() != window.n_slots()) {
        return Err(Error::Alignment(format!(
            "meter `{}` covers {} slots from {}, but `{}` covers {} from {}",
            c.meter_id,
            c.values.len(),
            c.start,
            first.meter_id,
            window.n_slots(),
            window.start
        )));
    }

    let mut ds = AlignedDataset::new(m.role, window);
    for (id, readings) in &temps {
        let (start, values) = contiguous(&m.temperature_path, id, readings)?;
        ds.temperatures.insert(id.clone(), TemperatureSeries { station_id: id.clone(), start, values });
    }
    ds.curves = curves;
    if let Some(c) = ds.curves.iter().find(|c| ds.temperature_for(c).is_none()) {
        return Err(Error::Alignment(format!(
            "meter `{}`: station `{}` has no temperature series covering {} days from {}",
            c.meter_id, c.station_id, window.n_days, window.start
        )));
    }
    let violations = validate(&ds);
    if !violations.is_empty() {
        return Err(Error::Validation(violations));
    }
    Ok(ds)
}

pub fn read_dataset_from(manifest: &Path) -> Result<AlignedDataset> {
    read_dataset(&read_manifest(manifest)?)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(create(path)?))
}

/// Writes a table of rows; every cell is already formatted.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let wrap = |source| Error::Csv { path: path.into(), source };
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(wrap)?;
    for row in rows {
        w.write_record(&row).map_err(wrap)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Shortest representation that parses back to the same value.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Writes the three CSV files and a manifest named `<stem>.manifest.json` into
/// `dir`; returns the manifest path.
pub fn write_dataset(ds: &AlignedDataset, dir: &Path, stem: &str) -> Result<PathBuf> {
    let load = format!("{stem}_load.csv");
    let temperature = format!("{stem}_temperature.csv");
    let metadata = format!("{stem}_metadata.csv");
    write_csv(
        &dir.join(&load),
        &["meter_id", "timestamp", "kwh"],
        ds.curves.iter().flat_map(|c| {
            c.values.iter().enumerate().map(move |(i, v)| vec![c.meter_id.clone(), c.start.add_slots(i as i64).to_string(), num(*v)])
        }),
    )?;
    write_csv(
        &dir.join(&temperature),
        &["station_id", "timestamp", "temp_c"],
        ds.temperatures.values().flat_map(|t| {
            t.values.iter().enumerate().map(move |(i, v)| vec![t.station_id.clone(), t.start.add_slots(i as i64).to_string(), num(*v)])
        }),
    )?;
    write_csv(
        &dir.join(&metadata),
        &["meter_id", "power_kva", "tou", "station_id"],
        ds.curves.iter().map(|c| vec![c.meter_id.clone(), c.power.kva().to_string(), c.tou.to_string(), c.station_id.clone()]),
    )?;
    let manifest = DatasetManifest {
        format_version: MANIFEST_FORMAT_VERSION,
        role: ds.role,
        load_path: load.into(),
        temperature_path: temperature.into(),
        metadata_path: metadata.into(),
    };
    let path = dir.join(format!("{stem}.manifest.json"));
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &manifest).map_err(|source| Error::Json { path: path.clone(), source })?;
    writeln!(w).and_then(|_| w.flush()).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn parse_flag(s: &str) -> Option<bool> {
    match s.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" => Some(true),
        "0" | "false" | "no" => Some(false),
        _ => None,
    }
}

/// Reads `meter_id,score,is_member` rows, e.g. per-sample reconstruction errors
/// for a white-box attack.
pub fn read_score_file(path: &Path) -> Result<AttackScoreSet> {
    let mut seen = BTreeSet::new();
    let mut entries = Vec::new();
    Table::open(path, &["meter_id", "score", "is_member"])?.for_each(|p, line, f| {
        let score = parse_number(p, line, "score", f[1])?;
        if !score.is_finite() {
            return Err(parse_err(p, line, format!("score `{}` is not finite", f[1])));
        }
        let is_member = parse_flag(f[2]).ok_or_else(|| parse_err(p, line, format!("is_member `{}` is not a boolean", f[2])))?;
        if !seen.insert(f[0].to_string()) {
            return Err(parse_err(p, line, format!("duplicate meter_id `{}`", f[0])));
        }
        entries.push(ScoreEntry { meter_id: f[0].to_string(), score, is_member });
        Ok(())
    })?;
    entries.sort_by(|a, b| a.meter_id.cmp(&b.meter_id));
    Ok(AttackScoreSet { entries })
}

pub fn write_score_file(path: &Path, set: &AttackScoreSet) -> Result<()> {
    write_csv(
        path,
        &["meter_id", "score", "is_member"],
        set.entries.iter().map(|e| vec![e.meter_id.clone(), num(e.score), u8::from(e.is_member).to_string()]),
    )
}

/// Pretty JSON in which every float carries 17 significant digits.
struct ReportFormatter(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for ReportFormatter {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> std::io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> std::io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn report_to_string(report: &MetricReport) -> Result<String> {
    let bad = [&report.fidelity, &report.utility, &report.privacy, &report.thermo]
        .into_iter()
        .flatten()
        .flat_map(|s| &s.metrics)
        .find(|m| !m.value.is_finite() || m.std.is_some_and(|s| !s.is_finite()));
    if let Some(m) = bad {
        return Err(Error::Core(loadaudit_core::Error::InvalidArgument(format!(
            "metric {} for {} is not finite",
            m.name, m.category
        ))));
    }
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ReportFormatter(serde_json::ser::PrettyFormatter::new()));
    report.serialize(&mut ser).map_err(|source| Error::Json { path: PathBuf::from("<report>"), source })?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_report(report: &MetricReport, path: &Path) -> Result<()> {
    let text = report_to_string(report)?;
    let mut w = create(path)?;
    w.write_all(text.as_bytes()).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn read_report(path: &Path) -> Result<MetricReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|source| Error::Json { path: path.into(), source })
}
