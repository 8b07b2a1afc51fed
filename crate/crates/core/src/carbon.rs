//! Marginal fuel attribution from locational marginal prices.
//!
//! Each marginal fuel is described by the mean and standard deviation of its
//! generation cost. A price `p` is mapped to a Gaussian membership per fuel and the
//! memberships are normalised into marginal factors that sum to one.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{MarginalFactorSeries, TimeGrid};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuelPriceStats {
    pub fuel: String,
    mean_cost: f64,
    std_cost: f64,
}

impl FuelPriceStats {
    pub fn new(fuel: impl Into<String>, mean_cost: f64, std_cost: f64) -> Result<Self> {
        if !mean_cost.is_finite() {
            return Err(Error::Config(format!("fuel mean cost must be finite, got {mean_cost}")));
        }
        if !(std_cost.is_finite() && std_cost > 0.0) {
            return Err(Error::Config(format!(
                "fuel cost standard deviation must be positive, got {std_cost}"
            )));
        }
        Ok(FuelPriceStats {
            fuel: fuel.into(),
            mean_cost,
            std_cost,
        })
    }

    pub fn mean_cost(&self) -> f64 {
        self.mean_cost
    }

    pub fn std_cost(&self) -> f64 {
        self.std_cost
    }

    /// Standardised distance of a price from this fuel's mean cost.
    fn z(&self, price: f64) -> f64 {
        (price - self.mean_cost) / self.std_cost
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LmpSeries {
    values: Vec<f64>,
}

impl LmpSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::OutOfRange(format!("non-finite price {v}")));
        }
        Ok(LmpSeries { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Gaussian membership `exp(-(p - mu)^2 / (2 nu^2))`.
pub fn membership(price: f64, stats: &FuelPriceStats) -> f64 {
    let z = stats.z(price);
    (-0.5 * z * z).exp()
}

/// Marginal factors for every price in `lmp`.
///
/// Normalisation is carried out in log space so that prices far from every fuel's
/// mean still produce the limiting distribution instead of `0/0`.
pub fn marginal_factors(lmp: &LmpSeries, stats: &[FuelPriceStats]) -> Result<MarginalFactorSeries> {
    if stats.is_empty() {
        return Err(Error::Empty("fuel price statistics"));
    }
    if lmp.is_empty() {
        return Err(Error::Empty("LMP series"));
    }
    let mut weights = vec![Vec::with_capacity(lmp.len()); stats.len()];
    let mut buf = vec![0.0; stats.len()];
    for &p in lmp.values() {
        normalized_memberships(p, stats, &mut buf);
        for (row, w) in weights.iter_mut().zip(&buf) {
            row.push(*w);
        }
    }
    MarginalFactorSeries::new(stats.iter().map(|s| s.fuel.clone()).collect(), weights)
}

fn normalized_memberships(price: f64, stats: &[FuelPriceStats], out: &mut [f64]) {
    let mut best = f64::NEG_INFINITY;
    for (o, s) in out.iter_mut().zip(stats) {
        let z = s.z(price);
        *o = -0.5 * z * z;
        best = best.max(*o);
    }
    let mut sum = 0.0;
    for o in out.iter_mut() {
        *o = (*o - best).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

/// Holds each hourly value constant over the slots of that hour.
pub fn expand_to_slots(hourly: &[f64], grid: &TimeGrid) -> Result<Vec<f64>> {
    if grid.slots_per_day() % 24 != 0 {
        return Err(Error::Config(format!(
            "{} slots per day cannot be aligned to hours",
            grid.slots_per_day()
        )));
    }
    let per_hour = grid.slots_per_day() / 24;
    if hourly.len() * per_hour != grid.len() {
        return Err(Error::LengthMismatch {
            what: "hourly series",
            expected: grid.len() / per_hour,
            actual: hourly.len(),
        });
    }
    Ok(hourly
        .iter()
        .flat_map(|&v| std::iter::repeat_n(v, per_hour))
        .collect())
}

/// Fuel-price statistics keyed by month of year (1-12).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MonthlyFuelStats {
    months: BTreeMap<u32, Vec<FuelPriceStats>>,
}

impl MonthlyFuelStats {
    pub fn insert(&mut self, month: u32, stats: FuelPriceStats) -> Result<()> {
        if !(1..=12).contains(&month) {
            return Err(Error::OutOfRange(format!("month {month} not in 1..=12")));
        }
        let row = self.months.entry(month).or_default();
        if row.iter().any(|s| s.fuel == stats.fuel) {
            return Err(Error::Config(format!(
                "duplicate statistics for fuel '{}' in month {month}",
                stats.fuel
            )));
        }
        row.push(stats);
        Ok(())
    }

    /// The same statistics for every month.
    pub fn uniform(stats: Vec<FuelPriceStats>) -> Self {
        MonthlyFuelStats {
            months: (1..=12).map(|m| (m, stats.clone())).collect(),
        }
    }

    pub fn month(&self, month: u32) -> Result<&[FuelPriceStats]> {
        self.months
            .get(&month)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::Config(format!("no fuel statistics for month {month}")))
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, &FuelPriceStats)> {
        self.months
            .iter()
            .flat_map(|(m, rows)| rows.iter().map(move |s| (*m, s)))
    }
}

/// Marginal factors for an hourly price series where `month_of_hour[h]` selects the
/// active statistics row. Every month must list the same fuels in the same order.
pub fn marginal_factors_monthly(
    lmp: &LmpSeries,
    month_of_hour: &[u32],
    table: &MonthlyFuelStats,
) -> Result<MarginalFactorSeries> {
    if month_of_hour.len() != lmp.len() {
        return Err(Error::LengthMismatch {
            what: "month labels",
            expected: lmp.len(),
            actual: month_of_hour.len(),
        });
    }
    let first = month_of_hour.first().ok_or(Error::Empty("LMP series"))?;
    let fuels: Vec<String> = table.month(*first)?.iter().map(|s| s.fuel.clone()).collect();
    let mut parts = Vec::new();
    let mut start = 0;
    while start < lmp.len() {
        let month = month_of_hour[start];
        let mut end = start;
        while end < lmp.len() && month_of_hour[end] == month {
            end += 1;
        }
        let stats = table.month(month)?;
        if stats.iter().map(|s| &s.fuel).ne(fuels.iter()) {
            return Err(Error::Config(format!("month {month} lists a different fuel set")));
        }
        let chunk = LmpSeries::new(lmp.values()[start..end].to_vec())?;
        parts.push(marginal_factors(&chunk, stats)?);
        start = end;
    }
    MarginalFactorSeries::concat(&parts)
}
