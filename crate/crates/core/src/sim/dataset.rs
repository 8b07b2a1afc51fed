use chrono::NaiveDateTime;

use crate::carbon::{expand_to_slots, marginal_factors_monthly, MonthlyFuelStats};
use crate::config::DataPaths;
use crate::domain::{default_fuels, emission_cost_series, FuelType, LoadSeries, TimeGrid};
use crate::io;
use crate::{Error, Result};

/// Everything a simulation reads: loads, transformer ratings and the emission
/// intensity on one shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub start: NaiveDateTime,
    pub grid: TimeGrid,
    pub loads: Vec<LoadSeries>,
    /// Transformer capacity in kW, aligned with `loads`.
    pub capacities_kw: Vec<f64>,
    /// Marginal emission intensity per slot, kg/MWh.
    pub cost: Vec<f64>,
    pub temperature: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(
        start: NaiveDateTime,
        grid: TimeGrid,
        loads: Vec<LoadSeries>,
        capacities_kw: Vec<f64>,
        cost: Vec<f64>,
        temperature: Option<Vec<f64>>,
    ) -> Result<Self> {
        if loads.is_empty() {
            return Err(Error::Empty("transformer loads"));
        }
        if capacities_kw.len() != loads.len() {
            return Err(Error::LengthMismatch {
                what: "transformer capacities",
                expected: loads.len(),
                actual: capacities_kw.len(),
            });
        }
        for l in &loads {
            l.check_grid(&grid)?;
        }
        if cost.len() != grid.len() {
            return Err(Error::LengthMismatch {
                what: "emission cost series",
                expected: grid.len(),
                actual: cost.len(),
            });
        }
        if let Some(t) = &temperature {
            if t.len() != grid.len() {
                return Err(Error::LengthMismatch {
                    what: "temperature series",
                    expected: grid.len(),
                    actual: t.len(),
                });
            }
        }
        Ok(Dataset {
            start,
            grid,
            loads,
            capacities_kw,
            cost,
            temperature,
        })
    }

    /// Reads and aligns every input file named in `paths`.
    pub fn load(paths: &DataPaths, slot_minutes: u32) -> Result<Self> {
        let table = io::parse_load_csv(&io::read_to_string(&paths.loads)?)?;
        if table.grid.slot_minutes() != slot_minutes {
            return Err(Error::Config(format!(
                "load data has {}-minute slots, configuration expects {slot_minutes}",
                table.grid.slot_minutes()
            )));
        }
        if table.negatives_clamped > 0 {
            log::warn!("{} negative load readings replaced by 0", table.negatives_clamped);
        }
        let ratings = io::parse_transformers_csv(&io::read_to_string(&paths.transformers)?)?;
        let capacities_kw = table
            .series
            .iter()
            .map(|s| {
                ratings
                    .iter()
                    .find(|(id, _)| *id == s.transformer_id)
                    .map(|(_, c)| *c)
                    .ok_or_else(|| Error::Config(format!("no capacity listed for transformer {}", s.transformer_id)))
            })
            .collect::<Result<Vec<f64>>>()?;

        let lmp = io::parse_lmp_csv(&io::read_to_string(&paths.lmp)?)?;
        let stats = io::parse_fuel_stats_csv(&io::read_to_string(&paths.fuel_stats)?)?;
        let fuels = match &paths.fuel_table {
            Some(p) => io::parse_fuel_table(&io::read_to_string(p)?)?,
            None => default_fuels(),
        };
        let cost = slot_costs(&lmp, &stats, &fuels, table.start, &table.grid)?;

        let temperature = match &paths.temperature {
            Some(p) => Some(io::parse_temperature_csv(&io::read_to_string(p)?)?.align(table.start, &table.grid)?),
            None => None,
        };
        Dataset::new(table.start, table.grid, table.series, capacities_kw, cost, temperature)
    }

    pub fn days(&self) -> usize {
        self.grid.horizon_days()
    }

    pub fn slots_per_day(&self) -> usize {
        self.grid.slots_per_day()
    }

    /// Day of week of the first day, Monday = 0.
    pub fn first_day_of_week(&self) -> u8 {
        io::day_of_week(self.start)
    }

    pub fn day_cost(&self, day: usize) -> &[f64] {
        &self.cost[self.grid.day_range(day)]
    }

    /// Storage-free emissions of every transformer over `day`, kg.
    pub fn baseline_kg(&self, day: usize) -> f64 {
        let dt = self.grid.slot_hours();
        let cost = self.day_cost(day);
        self.loads
            .iter()
            .map(|l| {
                l.values()[self.grid.day_range(day)]
                    .iter()
                    .zip(cost)
                    .map(|(l, c)| c * l * dt)
                    .sum::<f64>()
                    / 1000.0
            })
            .sum()
    }
}

/// Per-slot emission intensity for `grid` from hourly prices.
pub fn slot_costs(
    lmp: &io::LmpTable,
    stats: &MonthlyFuelStats,
    fuels: &[FuelType],
    start: NaiveDateTime,
    grid: &TimeGrid,
) -> Result<Vec<f64>> {
    let offset = (start - lmp.start).num_minutes();
    if offset < 0 || offset % 60 != 0 {
        return Err(Error::InsufficientHistory(
            "prices must start on the hour at or before the first load reading".into(),
        ));
    }
    let first = (offset / 60) as usize;
    let hours = grid.horizon_days() * 24;
    if lmp.prices.len() < first + hours {
        return Err(Error::InsufficientHistory(format!(
            "prices cover {} hours, loads need {}",
            lmp.prices.len().saturating_sub(first),
            hours
        )));
    }
    let window = crate::carbon::LmpSeries::new(lmp.prices.values()[first..first + hours].to_vec())?;
    let factors = marginal_factors_monthly(&window, &lmp.month_of_hour[first..first + hours], stats)?;
    let hourly = emission_cost_series(&factors, fuels)?;
    expand_to_slots(&hourly, grid)
}
