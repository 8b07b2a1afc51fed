//! Seeded synthetic fleet: transformer loads, temperature, prices and fuel statistics.
//!
//! Residential load per home is a morning and an evening bump on a base level, with
//! the morning bump moved later and a midday bump added at weekends. Heating and
//! cooling add a temperature term, and multiplicative AR(1) noise roughens it.
//! Prices follow the aggregate load, with occasional spikes that are more likely
//! when the fleet is busy.

use std::f64::consts::PI;
use std::path::Path;

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::carbon::{FuelPriceStats, LmpSeries, MonthlyFuelStats};
use crate::config::DataPaths;
use crate::domain::{LoadSeries, TimeGrid};
use crate::io;
use crate::sim::{slot_costs, Dataset};
use crate::{Error, Result};

/// Random stream used for synthesis.
pub(crate) const SYNTH_STREAM: u64 = 2;

/// Standard distribution transformer ratings, kVA.
pub const STANDARD_KVA: [f64; 10] = [25.0, 37.5, 50.0, 75.0, 100.0, 167.0, 250.0, 333.0, 500.0, 750.0];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticSpec {
    pub n_transformers: usize,
    pub days: usize,
    pub start_date: NaiveDate,
    pub slot_minutes: u32,
    /// Inclusive range of homes served by one transformer.
    pub homes_min: usize,
    pub homes_max: usize,
    /// Ratings to choose from, kVA.
    pub capacities_kva: Vec<f64>,
    pub power_factor: f64,
    /// Standard deviation of the multiplicative AR(1) load noise; 0 makes the load
    /// weekly periodic when the seasonal temperature swing is also 0.
    pub noise_level: f64,
    pub ar_coefficient: f64,
    /// Fraction of transformers with rooftop solar behind them.
    pub solar_fraction: f64,
    /// Seasonal temperature swing around the mean, degrees C.
    pub temperature_amplitude_c: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_transformers: 100,
            days: 56 + 365,
            start_date: NaiveDate::from_ymd_opt(2023, 1, 2).expect("valid date"),
            slot_minutes: 5,
            homes_min: 3,
            homes_max: 60,
            capacities_kva: STANDARD_KVA.to_vec(),
            power_factor: 0.9,
            noise_level: 0.12,
            ar_coefficient: 0.95,
            solar_fraction: 0.0,
            temperature_amplitude_c: 11.0,
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_transformers == 0 || self.days == 0 {
            return Err(Error::Config("synthetic fleet needs at least one transformer and one day".into()));
        }
        TimeGrid::new(
            (1440 / self.slot_minutes.max(1)) as usize,
            self.days,
        )
        .and_then(|g| {
            if g.slot_minutes() == self.slot_minutes {
                Ok(())
            } else {
                Err(Error::Config(format!("slot length {} does not divide a day", self.slot_minutes)))
            }
        })?;
        if self.homes_min == 0 || self.homes_min > self.homes_max {
            return Err(Error::Config(format!("homes range {}..={} is empty", self.homes_min, self.homes_max)));
        }
        if self.capacities_kva.is_empty()
            || self.capacities_kva.iter().any(|&c| !(25.0..=750.0).contains(&c))
        {
            return Err(Error::Config("transformer ratings must lie in 25..=750 kVA".into()));
        }
        if !(self.power_factor > 0.0 && self.power_factor <= 1.0) {
            return Err(Error::Config(format!("power factor {} outside (0, 1]", self.power_factor)));
        }
        if !(self.noise_level.is_finite() && self.noise_level >= 0.0) {
            return Err(Error::Config("noise level must be nonnegative".into()));
        }
        if !(0.0..1.0).contains(&self.ar_coefficient) {
            return Err(Error::Config("AR coefficient must lie in [0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.solar_fraction) {
            return Err(Error::Config("solar fraction must lie in [0, 1]".into()));
        }
        if !(self.temperature_amplitude_c.is_finite() && self.temperature_amplitude_c >= 0.0) {
            return Err(Error::Config("temperature amplitude must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn start(&self) -> NaiveDateTime {
        self.start_date.and_hms_opt(0, 0, 0).expect("midnight exists")
    }
}

/// Generated inputs, kept in memory; [`SyntheticData::write`] stores them as the
/// usual input files.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub start: NaiveDateTime,
    pub grid: TimeGrid,
    pub loads: Vec<LoadSeries>,
    pub capacities_kw: Vec<f64>,
    /// Hourly prices, $/MWh.
    pub lmp: Vec<f64>,
    /// Hourly temperature, degrees C.
    pub temperature: Vec<f64>,
    pub fuel_stats: MonthlyFuelStats,
}

/// Per-home load at `hour` of a weekday or weekend day, kW, before the temperature term.
fn home_profile(hour: f64, weekend: bool) -> f64 {
    let bump = |centre: f64, width: f64| (-0.5 * ((hour - centre) / width).powi(2)).exp();
    if weekend {
        0.5 + 0.9 * bump(9.5, 1.8) + 0.35 * bump(13.5, 2.5) + 1.4 * bump(19.0, 2.0)
    } else {
        0.5 + 0.8 * bump(7.5, 1.2) + 1.5 * bump(19.0, 2.0)
    }
}

/// Heating below 12 C and cooling above 22 C, kW per home.
fn thermal_load(temp_c: f64) -> f64 {
    0.04 * (12.0 - temp_c).max(0.0) + 0.08 * (temp_c - 22.0).max(0.0)
}

/// Rounds to `decimals` places. Dividing by the power of ten gives the shortest
/// decimal form when written out, which multiplying by a step does not.
fn round_to(v: f64, decimals: i32) -> f64 {
    let k = 10f64.powi(decimals);
    (v * k).round() / k
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticData> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(SYNTH_STREAM);
    let start = spec.start();
    let grid = TimeGrid::new((1440 / spec.slot_minutes) as usize, spec.days)?;
    let hours = spec.days * 24;
    let slots_per_hour = (60 / spec.slot_minutes.min(60)) as usize;
    let slot_hours = grid.slot_hours();
    let first_dow = io::day_of_week(start) as usize;

    // Temperature: seasonal cosine, daily swing peaking mid-afternoon, AR(1) weather.
    let mut weather = 0.0;
    let temperature: Vec<f64> = (0..hours)
        .map(|h| {
            let day_of_year = (start + chrono::TimeDelta::hours(h as i64)).ordinal0() as f64;
            let seasonal = -spec.temperature_amplitude_c * (2.0 * PI * (day_of_year - 20.0) / 365.0).cos();
            let daily = 5.0 * (2.0 * PI * ((h % 24) as f64 - 15.0) / 24.0).cos();
            let e: f64 = rng.sample(StandardNormal);
            weather = 0.97 * weather + spec.noise_level * 2.0 * e;
            round_to(14.0 + seasonal + daily + weather, 2)
        })
        .collect();

    let mut loads = Vec::with_capacity(spec.n_transformers);
    let mut capacities_kw = Vec::with_capacity(spec.n_transformers);
    let mut aggregate = vec![0.0; grid.len()];
    let innovation = spec.noise_level * (1.0 - spec.ar_coefficient.powi(2)).sqrt();
    for i in 0..spec.n_transformers {
        let homes = rng.random_range(spec.homes_min..=spec.homes_max) as f64;
        let scale = homes * rng.random_range(0.8..1.2);
        let shift_h: f64 = rng.random_range(-0.5..0.5);
        let has_solar = rng.random::<f64>() < spec.solar_fraction;
        let solar_kw = if has_solar { homes * rng.random_range(1.0..3.0) } else { 0.0 };
        // Rated for the typical evening peak with some units deliberately tight.
        let design_peak = scale * (2.0 + thermal_load(14.0 - spec.temperature_amplitude_c - 5.0));
        let ratio = rng.random_range(0.85..1.4);
        let kva = spec
            .capacities_kva
            .iter()
            .copied()
            .find(|&c| c * spec.power_factor >= ratio * design_peak)
            .unwrap_or_else(|| spec.capacities_kva.iter().copied().fold(f64::MIN, f64::max));
        capacities_kw.push(kva * spec.power_factor);

        let mut noise = 0.0;
        let values: Vec<f64> = (0..grid.len())
            .map(|k| {
                let day = k / grid.slots_per_day();
                let weekend = (first_dow + day) % 7 >= 5;
                let hour = (k % grid.slots_per_day()) as f64 * slot_hours;
                let temp = temperature[k / slots_per_hour];
                let mut kw = scale * (home_profile(hour - shift_h, weekend) + thermal_load(temp));
                if solar_kw > 0.0 {
                    let season = 0.75 + 0.25 * (2.0 * PI * (day as f64 - 172.0) / 365.0).cos();
                    kw -= solar_kw * season * (PI * (hour - 6.0) / 12.0).sin().max(0.0);
                }
                if spec.noise_level > 0.0 {
                    let e: f64 = rng.sample(StandardNormal);
                    noise = spec.ar_coefficient * noise + innovation * e;
                    kw *= 1.0 + noise;
                }
                round_to(kw.max(0.0), 3)
            })
            .collect();
        for (a, v) in aggregate.iter_mut().zip(&values) {
            *a += v;
        }
        loads.push(LoadSeries::new(format!("T{:03}", i + 1), values)?);
    }

    // Prices: linear in normalised aggregate load, spikes more likely near the peak.
    let hourly_agg: Vec<f64> = aggregate
        .chunks(slots_per_hour)
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let mean_agg = hourly_agg.iter().sum::<f64>() / hourly_agg.len() as f64;
    let spike = Exp::new(1.0 / 60.0).expect("positive rate");
    let lmp = hourly_agg
        .iter()
        .map(|&a| {
            let a = if mean_agg > 0.0 { a / mean_agg } else { 1.0 };
            let e: f64 = rng.sample(StandardNormal);
            let mut p = 8.0 + 26.0 * a + 2.0 * e;
            if rng.random::<f64>() < (0.01 * a.powi(4)).min(0.2) {
                p += 40.0 + rng.sample(spike);
            }
            round_to(p, 2)
        })
        .collect();

    Ok(SyntheticData {
        start,
        grid,
        loads,
        capacities_kw,
        lmp,
        temperature,
        fuel_stats: fuel_stats(),
    })
}

/// Monthly fuel cost statistics, $/MWh: coal cheapest, gas in the middle with a
/// winter premium, oil on the expensive tail.
pub fn fuel_stats() -> MonthlyFuelStats {
    let mut t = MonthlyFuelStats::default();
    for m in 1..=12u32 {
        let winter = (2.0 * PI * (m as f64 - 1.0) / 12.0).cos();
        let rows = [
            ("coal", 24.0, 5.0),
            ("gas", 40.0 + 4.0 * winter, 8.0),
            ("oil", 110.0, 30.0),
        ];
        for (fuel, mu, nu) in rows {
            t.insert(m, FuelPriceStats::new(fuel, round_to(mu, 2), nu).expect("valid stats"))
                .expect("distinct fuels and valid month");
        }
    }
    t
}

impl SyntheticData {
    /// Dataset with the default emission factors, as a run would load it from disk.
    pub fn dataset(&self) -> Result<Dataset> {
        let lmp = io::LmpTable {
            start: self.start,
            prices: LmpSeries::new(self.lmp.clone())?,
            month_of_hour: (0..self.lmp.len())
                .map(|h| (self.start + chrono::TimeDelta::hours(h as i64)).month())
                .collect(),
        };
        let cost = slot_costs(&lmp, &self.fuel_stats, &crate::domain::default_fuels(), self.start, &self.grid)?;
        let temperature = io::TemperatureTable {
            start: self.start,
            step_minutes: 60,
            values: self.temperature.clone(),
        }
        .align(self.start, &self.grid)?;
        Dataset::new(
            self.start,
            self.grid.clone(),
            self.loads.clone(),
            self.capacities_kw.clone(),
            cost,
            Some(temperature),
        )
    }

    /// Writes the input files into `dir` and returns their paths.
    pub fn write(&self, dir: &Path) -> Result<DataPaths> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir.to_path_buf(), e))?;
        let paths = DataPaths::under(dir);
        io::write_string(&paths.loads, &io::write_load_csv(self.start, &self.grid, &self.loads))?;
        let rows: Vec<(String, f64)> = self
            .loads
            .iter()
            .zip(&self.capacities_kw)
            .map(|(l, &c)| (l.transformer_id.clone(), c))
            .collect();
        io::write_string(&paths.transformers, &io::write_transformers_csv(&rows))?;
        io::write_string(&paths.lmp, &io::write_lmp_csv(self.start, &self.lmp))?;
        io::write_string(&paths.fuel_stats, &io::write_fuel_stats_csv(&self.fuel_stats))?;
        let temp_path = paths.temperature.as_ref().expect("synthetic layout has temperature");
        io::write_string(temp_path, &io::write_temperature_csv(self.start, 60, &self.temperature))?;
        Ok(paths)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            n_transformers: 4,
            days: 15,
            seed,
            ..SyntheticSpec::default()
        }
    }

    #[test]
    fn seeded_and_sized() {
        let a = generate(&small(1)).unwrap();
        assert_eq!(a, generate(&small(1)).unwrap());
        assert_ne!(a.loads, generate(&small(2)).unwrap().loads);
        assert_eq!(a.loads.len(), 4);
        assert_eq!(a.loads[0].len(), 15 * 288);
        assert_eq!(a.lmp.len(), 15 * 24);
        assert!(a.loads.iter().all(|l| l.values().iter().all(|&v| v >= 0.0)));
        for c in &a.capacities_kw {
            assert!(STANDARD_KVA.iter().any(|k| (k * 0.9 - c).abs() < 1e-9));
        }
    }

    #[test]
    fn noise_free_load_repeats_weekly() {
        let spec = SyntheticSpec {
            noise_level: 0.0,
            temperature_amplitude_c: 0.0,
            ..small(3)
        };
        let d = generate(&spec).unwrap();
        let week = 7 * 288;
        for l in &d.loads {
            let v = l.values();
            for k in 0..v.len() - week {
                assert_eq!(v[k], v[k + week]);
            }
        }
    }

    #[test]
    fn solar_lowers_midday_load() {
        let base = small(5);
        let sunny = SyntheticSpec {
            solar_fraction: 1.0,
            noise_level: 0.0,
            ..base.clone()
        };
        let dark = SyntheticSpec {
            noise_level: 0.0,
            ..base
        };
        let (s, d) = (generate(&sunny).unwrap(), generate(&dark).unwrap());
        let noon = 12 * 12;
        let total = |x: &SyntheticData| x.loads.iter().map(|l| l.values()[noon]).sum::<f64>();
        assert!(total(&s) < total(&d));
    }

    #[test]
    fn rejects_bad_specs() {
        for spec in [
            SyntheticSpec { n_transformers: 0, ..small(1) },
            SyntheticSpec { homes_min: 10, homes_max: 5, ..small(1) },
            SyntheticSpec { capacities_kva: vec![1000.0], ..small(1) },
            SyntheticSpec { slot_minutes: 7, ..small(1) },
            SyntheticSpec { ar_coefficient: 1.0, ..small(1) },
        ] {
            assert!(matches!(generate(&spec), Err(Error::Config(_))), "{spec:?}");
        }
    }

    #[test]
    fn written_files_load_back_to_the_same_dataset() {
        let data = generate(&small(9)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let paths = data.write(dir.path()).unwrap();
        let loaded = Dataset::load(&paths, 5).unwrap();
        assert_eq!(loaded, data.dataset().unwrap());
    }
}
