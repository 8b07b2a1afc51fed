//! CSV readers and writers for the dataset files.
//!
//! Parsers take the file contents as a string so they can be exercised without
//! touching the file system; [`read_to_string`] attaches the path to I/O errors.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use chrono::{Datelike, NaiveDateTime, Timelike};

use crate::carbon::{FuelPriceStats, LmpSeries, MonthlyFuelStats};
use crate::domain::{FuelType, LoadSeries, TimeGrid};
use crate::{Error, Result};

pub const LOAD_HEADER: [&str; 3] = ["timestamp", "transformer_id", "kw"];
pub const FUEL_HEADER: [&str; 2] = ["fuel", "emission_factor_kg_per_mwh"];
pub const LMP_HEADER: [&str; 2] = ["timestamp", "lmp_usd_per_mwh"];
pub const FUEL_STATS_HEADER: [&str; 4] = ["month", "fuel", "mu", "nu"];
pub const TEMPERATURE_HEADER: [&str; 2] = ["timestamp", "temp_c"];
pub const TRANSFORMER_HEADER: [&str; 2] = ["transformer_id", "capacity_kw"];

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

pub fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_string(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::io(path, e))
}

/// Whole-second timestamps in ISO-8601 form; an RFC 3339 offset is dropped and
/// the local wall time kept.
pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT)
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%d %H:%M:%S"))
        .or_else(|_| NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M"))
        .ok()
        .or_else(|| chrono::DateTime::parse_from_rfc3339(s).ok().map(|d| d.naive_local()))
        .filter(|t| t.nanosecond() == 0)
}

/// `start` plus `minutes`, or `None` past the representable range.
pub fn offset_minutes(start: NaiveDateTime, minutes: i64) -> Option<NaiveDateTime> {
    chrono::TimeDelta::try_minutes(minutes).and_then(|d| start.checked_add_signed(d))
}

pub fn format_timestamp(t: NaiveDateTime) -> String {
    t.format(TIMESTAMP_FORMAT).to_string()
}

/// Records of a headed CSV with 1-based line numbers.
fn records(name: &str, text: &str, header: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let found = reader.headers().map_err(|e| Error::parse(name, 1, e.to_string()))?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::parse(
            name,
            1,
            format!("expected header {:?}, found {:?}", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::parse(name, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != header.len() {
            return Err(Error::parse(name, line, format!("expected {} fields, found {}", header.len(), rec.len())));
        }
        out.push((line, rec));
    }
    Ok(out)
}

fn field_f64(name: &str, line: usize, rec: &csv::StringRecord, i: usize, what: &str) -> Result<f64> {
    let raw = &rec[i];
    let v: f64 = raw
        .parse()
        .map_err(|_| Error::parse(name, line, format!("{what} {raw:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(name, line, format!("{what} {raw:?} is not finite")));
    }
    Ok(v)
}

fn field_time(name: &str, line: usize, rec: &csv::StringRecord, i: usize) -> Result<NaiveDateTime> {
    parse_timestamp(&rec[i]).ok_or_else(|| Error::parse(name, line, format!("bad timestamp {:?}", &rec[i])))
}

fn field_name(name: &str, line: usize, rec: &csv::StringRecord, i: usize, what: &str) -> Result<String> {
    let s = &rec[i];
    if s.is_empty() {
        return Err(Error::parse(name, line, format!("empty {what}")));
    }
    if s.contains([',', '"', '\n', '\r']) {
        return Err(Error::parse(name, line, format!("{what} {s:?} contains a comma, quote or line break")));
    }
    Ok(s.to_string())
}

/// Load measurements for a fleet, aligned on one grid that starts at midnight.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadTable {
    pub start: NaiveDateTime,
    pub grid: TimeGrid,
    pub series: Vec<LoadSeries>,
    /// Negative readings replaced by 0.
    pub negatives_clamped: usize,
}

/// Parses `timestamp,transformer_id,kw`. Rows of one transformer must be
/// contiguous and evenly spaced; every transformer must cover the same whole days.
pub fn parse_load_csv(text: &str) -> Result<LoadTable> {
    const NAME: &str = "load csv";
    let rows = records(NAME, text, &LOAD_HEADER)?;
    if rows.is_empty() {
        return Err(Error::Empty("load csv"));
    }
    let mut groups: Vec<(String, Vec<(usize, NaiveDateTime, f64)>)> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (line, rec) in &rows {
        let ts = field_time(NAME, *line, rec, 0)?;
        let id = field_name(NAME, *line, rec, 1, "transformer id")?;
        let kw = field_f64(NAME, *line, rec, 2, "kw")?;
        match groups.last_mut() {
            Some((last, g)) if *last == id => g.push((*line, ts, kw)),
            _ => {
                if seen.contains_key(&id) {
                    return Err(Error::parse(NAME, *line, format!("rows for {id} are not contiguous")));
                }
                seen.insert(id.clone(), groups.len());
                groups.push((id, vec![(*line, ts, kw)]));
            }
        }
    }

    let first = &groups[0].1;
    if first.len() < 2 {
        return Err(Error::parse(NAME, first[0].0, "need at least two readings to infer the slot length"));
    }
    let step = first[1].1 - first[0].1;
    let minutes = step.num_minutes();
    if minutes <= 0 || step.num_seconds() != minutes * 60 || 1440 % minutes != 0 {
        return Err(Error::parse(NAME, first[1].0, format!("slot length of {step} does not divide a day")));
    }
    let start = first[0].1;
    if start.time() != chrono::NaiveTime::MIN {
        return Err(Error::parse(NAME, first[0].0, "first reading must be at midnight"));
    }
    let slots_per_day = (1440 / minutes) as usize;
    let len = first.len();
    if len % slots_per_day != 0 {
        return Err(Error::parse(NAME, first[len - 1].0, format!("{len} readings do not cover whole days")));
    }
    let grid = TimeGrid::new(slots_per_day, len / slots_per_day)?;

    let mut series = Vec::with_capacity(groups.len());
    let mut negatives_clamped = 0;
    for (id, g) in groups {
        if g.len() != len {
            return Err(Error::parse(NAME, g.last().map_or(0, |r| r.0), format!("{id} has {} readings, expected {len}", g.len())));
        }
        for (k, (line, ts, _)) in g.iter().enumerate() {
            let expected = (k as i64).checked_mul(minutes).and_then(|m| offset_minutes(start, m));
            if expected != Some(*ts) {
                return Err(Error::parse(NAME, *line, format!("{id}: readings are not evenly spaced from {}", format_timestamp(start))));
            }
        }
        let (s, clamped) = LoadSeries::from_raw(id, g.into_iter().map(|r| r.2).collect())?;
        negatives_clamped += clamped;
        series.push(s);
    }
    Ok(LoadTable {
        start,
        grid,
        series,
        negatives_clamped,
    })
}

pub fn write_load_csv(start: NaiveDateTime, grid: &TimeGrid, series: &[LoadSeries]) -> String {
    let step = chrono::TimeDelta::minutes(grid.slot_minutes() as i64);
    let mut out = LOAD_HEADER.join(",");
    out.push('\n');
    for s in series {
        for (k, v) in s.values().iter().enumerate() {
            let _ = writeln!(out, "{},{},{}", format_timestamp(start + step * k as i32), s.transformer_id, v);
        }
    }
    out
}

pub fn parse_fuel_table(text: &str) -> Result<Vec<FuelType>> {
    const NAME: &str = "fuel table";
    let mut out: Vec<FuelType> = Vec::new();
    for (line, rec) in records(NAME, text, &FUEL_HEADER)? {
        let fuel = field_name(NAME, line, &rec, 0, "fuel")?;
        if out.iter().any(|f| f.name == fuel) {
            return Err(Error::parse(NAME, line, format!("duplicate fuel {fuel}")));
        }
        let ef = field_f64(NAME, line, &rec, 1, "emission factor")?;
        out.push(FuelType::new(fuel, ef).map_err(|e| Error::parse(NAME, line, e.to_string()))?);
    }
    if out.is_empty() {
        return Err(Error::Empty("fuel table"));
    }
    Ok(out)
}

pub fn write_fuel_table(fuels: &[FuelType]) -> String {
    let mut out = FUEL_HEADER.join(",");
    out.push('\n');
    for f in fuels {
        let _ = writeln!(out, "{},{}", f.name, f.emission_factor());
    }
    out
}

/// Hourly prices with the calendar month of each hour.
#[derive(Debug, Clone, PartialEq)]
pub struct LmpTable {
    pub start: NaiveDateTime,
    pub prices: LmpSeries,
    pub month_of_hour: Vec<u32>,
}

pub fn parse_lmp_csv(text: &str) -> Result<LmpTable> {
    const NAME: &str = "lmp csv";
    let rows = records(NAME, text, &LMP_HEADER)?;
    let mut values = Vec::with_capacity(rows.len());
    let mut months = Vec::with_capacity(rows.len());
    let mut start = None;
    for (k, (line, rec)) in rows.iter().enumerate() {
        let ts = field_time(NAME, *line, rec, 0)?;
        let s = *start.get_or_insert(ts);
        if k == 0 && (ts.minute() != 0 || ts.second() != 0) {
            return Err(Error::parse(NAME, *line, "prices must start on the hour"));
        }
        if offset_minutes(s, 60 * k as i64) != Some(ts) {
            return Err(Error::parse(NAME, *line, "prices must be hourly and consecutive"));
        }
        values.push(field_f64(NAME, *line, rec, 1, "price")?);
        months.push(ts.month());
    }
    let start = start.ok_or(Error::Empty("lmp csv"))?;
    Ok(LmpTable {
        start,
        prices: LmpSeries::new(values)?,
        month_of_hour: months,
    })
}

pub fn write_lmp_csv(start: NaiveDateTime, prices: &[f64]) -> String {
    let mut out = LMP_HEADER.join(",");
    out.push('\n');
    for (k, p) in prices.iter().enumerate() {
        let _ = writeln!(out, "{},{}", format_timestamp(start + chrono::TimeDelta::hours(k as i64)), p);
    }
    out
}

pub fn parse_fuel_stats_csv(text: &str) -> Result<MonthlyFuelStats> {
    const NAME: &str = "fuel stats csv";
    let mut table = MonthlyFuelStats::default();
    let mut any = false;
    for (line, rec) in records(NAME, text, &FUEL_STATS_HEADER)? {
        let month: u32 = rec[0]
            .parse()
            .map_err(|_| Error::parse(NAME, line, format!("month {:?} is not an integer", &rec[0])))?;
        let fuel = field_name(NAME, line, &rec, 1, "fuel")?;
        let mu = field_f64(NAME, line, &rec, 2, "mu")?;
        let nu = field_f64(NAME, line, &rec, 3, "nu")?;
        let stats = FuelPriceStats::new(fuel, mu, nu).map_err(|e| Error::parse(NAME, line, e.to_string()))?;
        table.insert(month, stats).map_err(|e| Error::parse(NAME, line, e.to_string()))?;
        any = true;
    }
    if !any {
        return Err(Error::Empty("fuel stats csv"));
    }
    Ok(table)
}

pub fn write_fuel_stats_csv(table: &MonthlyFuelStats) -> String {
    let mut out = FUEL_STATS_HEADER.join(",");
    out.push('\n');
    for (month, s) in table.iter() {
        let _ = writeln!(out, "{},{},{},{}", month, s.fuel, s.mean_cost(), s.std_cost());
    }
    out
}

/// Evenly spaced temperature readings.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureTable {
    pub start: NaiveDateTime,
    pub step_minutes: u32,
    pub values: Vec<f64>,
}

impl TemperatureTable {
    /// Temperature for each slot of `grid` starting at `start`, holding the last
    /// reading at or before the slot.
    pub fn align(&self, start: NaiveDateTime, grid: &TimeGrid) -> Result<Vec<f64>> {
        let offset = (start - self.start).num_minutes();
        if offset < 0 {
            return Err(Error::InsufficientHistory("temperature starts after the load data".into()));
        }
        let slot = grid.slot_minutes() as i64;
        let step = self.step_minutes as i64;
        (0..grid.len() as i64)
            .map(|k| {
                let idx = ((offset + k * slot) / step) as usize;
                self.values
                    .get(idx)
                    .copied()
                    .ok_or_else(|| Error::InsufficientHistory("temperature ends before the load data".into()))
            })
            .collect()
    }
}

pub fn parse_temperature_csv(text: &str) -> Result<TemperatureTable> {
    const NAME: &str = "temperature csv";
    let rows = records(NAME, text, &TEMPERATURE_HEADER)?;
    let mut times = Vec::with_capacity(rows.len());
    let mut values = Vec::with_capacity(rows.len());
    for (line, rec) in &rows {
        times.push((*line, field_time(NAME, *line, rec, 0)?));
        values.push(field_f64(NAME, *line, rec, 1, "temperature")?);
    }
    let Some(&(_, start)) = times.first() else {
        return Err(Error::Empty("temperature csv"));
    };
    let step_minutes = if times.len() > 1 {
        let d = times[1].1 - start;
        if d.num_minutes() <= 0 || d.num_minutes() > 1440 || d.num_seconds() % 60 != 0 {
            return Err(Error::parse(NAME, times[1].0, "temperature readings must be spaced by whole minutes"));
        }
        d.num_minutes()
    } else {
        60
    };
    for (k, (line, ts)) in times.iter().enumerate() {
        let expected = step_minutes.checked_mul(k as i64).and_then(|m| offset_minutes(start, m));
        if expected != Some(*ts) {
            return Err(Error::parse(NAME, *line, "temperature readings must be evenly spaced"));
        }
    }
    Ok(TemperatureTable {
        start,
        step_minutes: step_minutes as u32,
        values,
    })
}

pub fn write_temperature_csv(start: NaiveDateTime, step_minutes: u32, values: &[f64]) -> String {
    let mut out = TEMPERATURE_HEADER.join(",");
    out.push('\n');
    for (k, v) in values.iter().enumerate() {
        let ts = start + chrono::TimeDelta::minutes(step_minutes as i64 * k as i64);
        let _ = writeln!(out, "{},{}", format_timestamp(ts), v);
    }
    out
}

pub fn parse_transformers_csv(text: &str) -> Result<Vec<(String, f64)>> {
    const NAME: &str = "transformers csv";
    let mut out: Vec<(String, f64)> = Vec::new();
    for (line, rec) in records(NAME, text, &TRANSFORMER_HEADER)? {
        let id = field_name(NAME, line, &rec, 0, "transformer id")?;
        if out.iter().any(|(x, _)| *x == id) {
            return Err(Error::parse(NAME, line, format!("duplicate transformer {id}")));
        }
        let cap = field_f64(NAME, line, &rec, 1, "capacity")?;
        if cap <= 0.0 {
            return Err(Error::parse(NAME, line, format!("capacity of {id} must be positive")));
        }
        out.push((id, cap));
    }
    if out.is_empty() {
        return Err(Error::Empty("transformers csv"));
    }
    Ok(out)
}

pub fn write_transformers_csv(rows: &[(String, f64)]) -> String {
    let mut out = TRANSFORMER_HEADER.join(",");
    out.push('\n');
    for (id, cap) in rows {
        let _ = writeln!(out, "{id},{cap}");
    }
    out
}

/// Day of week of a date, Monday = 0.
pub fn day_of_week(t: NaiveDateTime) -> u8 {
    t.weekday().num_days_from_monday() as u8
}
