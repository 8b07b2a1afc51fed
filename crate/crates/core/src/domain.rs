//! Core value types and emission accounting.
//!
//! Units used throughout the crate:
//!
//! * loads, transformer capacity and rate limits are powers in kW;
//! * storage capacity, state of charge and charge decisions are energies in kWh,
//!   with one charge decision per slot (positive charges, negative discharges);
//! * emission intensities are kg CO2 per MWh, emissions are kg.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const MINUTES_PER_DAY: u32 = 1440;

/// Absolute tolerance (kWh) used when checking schedules against physical limits.
pub const VIOLATION_TOLERANCE_KWH: f64 = 1e-6;

/// Uniform slotting of a multi-day horizon.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeGrid {
    slots_per_day: usize,
    slot_minutes: u32,
    horizon_days: usize,
}

impl TimeGrid {
    pub fn new(slots_per_day: usize, horizon_days: usize) -> Result<Self> {
        if slots_per_day == 0 || MINUTES_PER_DAY as usize % slots_per_day != 0 {
            return Err(Error::Config(format!(
                "slots_per_day must divide 1440, got {slots_per_day}"
            )));
        }
        if horizon_days == 0 {
            return Err(Error::Config("horizon_days must be positive".into()));
        }
        Ok(TimeGrid {
            slots_per_day,
            slot_minutes: MINUTES_PER_DAY / slots_per_day as u32,
            horizon_days,
        })
    }

    /// The 5-minute settlement grid.
    pub fn five_minute(horizon_days: usize) -> Result<Self> {
        Self::new(288, horizon_days)
    }

    pub fn slots_per_day(&self) -> usize {
        self.slots_per_day
    }

    pub fn slot_minutes(&self) -> u32 {
        self.slot_minutes
    }

    pub fn horizon_days(&self) -> usize {
        self.horizon_days
    }

    pub fn slot_hours(&self) -> f64 {
        f64::from(self.slot_minutes) / 60.0
    }

    /// Total number of slots in the horizon.
    pub fn len(&self) -> usize {
        self.slots_per_day * self.horizon_days
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The same slotting restricted to a single day.
    pub fn one_day(&self) -> TimeGrid {
        TimeGrid {
            horizon_days: 1,
            ..*self
        }
    }

    pub fn with_horizon(&self, horizon_days: usize) -> Result<TimeGrid> {
        Self::new(self.slots_per_day, horizon_days)
    }

    /// Slot range covering `day`.
    pub fn day_range(&self, day: usize) -> std::ops::Range<usize> {
        day * self.slots_per_day..(day + 1) * self.slots_per_day
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transformer {
    pub id: String,
    capacity_kw: f64,
    overload_margin_kw: f64,
}

impl Transformer {
    pub fn new(id: impl Into<String>, capacity_kw: f64, overload_margin_kw: f64) -> Result<Self> {
        if !(capacity_kw.is_finite() && capacity_kw > 0.0) {
            return Err(Error::Config(format!(
                "transformer capacity must be positive, got {capacity_kw}"
            )));
        }
        if !(overload_margin_kw.is_finite()
            && overload_margin_kw >= 0.0
            && overload_margin_kw < capacity_kw)
        {
            return Err(Error::Config(format!(
                "overload margin must lie in [0, capacity), got {overload_margin_kw}"
            )));
        }
        Ok(Transformer {
            id: id.into(),
            capacity_kw,
            overload_margin_kw,
        })
    }

    /// Transformer whose overload margin is `fraction` of its capacity.
    pub fn with_margin_fraction(
        id: impl Into<String>,
        capacity_kw: f64,
        fraction: f64,
    ) -> Result<Self> {
        Self::new(id, capacity_kw, capacity_kw * fraction)
    }

    pub fn capacity_kw(&self) -> f64 {
        self.capacity_kw
    }

    pub fn overload_margin_kw(&self) -> f64 {
        self.overload_margin_kw
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StorageUnit {
    capacity_kwh: f64,
    rate_limit_kw: f64,
    initial_soc_kwh: f64,
}

impl StorageUnit {
    pub fn new(capacity_kwh: f64, rate_limit_kw: f64, initial_soc_kwh: f64) -> Result<Self> {
        if !(capacity_kwh.is_finite() && capacity_kwh >= 0.0) {
            return Err(Error::Config(format!(
                "storage capacity must be nonnegative, got {capacity_kwh}"
            )));
        }
        if !(rate_limit_kw.is_finite() && rate_limit_kw >= 0.0) {
            return Err(Error::Config(format!(
                "rate limit must be nonnegative, got {rate_limit_kw}"
            )));
        }
        if !(initial_soc_kwh.is_finite() && (0.0..=capacity_kwh).contains(&initial_soc_kwh)) {
            return Err(Error::Config(format!(
                "initial state of charge {initial_soc_kwh} outside [0, {capacity_kwh}]"
            )));
        }
        Ok(StorageUnit {
            capacity_kwh,
            rate_limit_kw,
            initial_soc_kwh,
        })
    }

    /// A unit charged to half its capacity.
    pub fn half_full(capacity_kwh: f64, rate_limit_kw: f64) -> Result<Self> {
        Self::new(capacity_kwh, rate_limit_kw, capacity_kwh / 2.0)
    }

    /// Transformer without storage.
    pub fn none() -> Self {
        StorageUnit {
            capacity_kwh: 0.0,
            rate_limit_kw: 0.0,
            initial_soc_kwh: 0.0,
        }
    }

    pub fn capacity_kwh(&self) -> f64 {
        self.capacity_kwh
    }

    pub fn rate_limit_kw(&self) -> f64 {
        self.rate_limit_kw
    }

    pub fn initial_soc_kwh(&self) -> f64 {
        self.initial_soc_kwh
    }

    pub fn with_initial_soc(&self, soc_kwh: f64) -> Result<Self> {
        Self::new(self.capacity_kwh, self.rate_limit_kw, soc_kwh)
    }

    /// Largest energy that can move in or out during one slot.
    pub fn slot_rate_kwh(&self, grid: &TimeGrid) -> f64 {
        self.rate_limit_kw * grid.slot_hours()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadSeries {
    pub transformer_id: String,
    values: Vec<f64>,
}

impl LoadSeries {
    /// Builds a series from raw metered values, clamping net exports to zero.
    ///
    /// Returns the series and the number of clamped samples.
    pub fn from_raw(transformer_id: impl Into<String>, mut values: Vec<f64>) -> Result<(Self, usize)> {
        let mut clamped = 0;
        for v in values.iter_mut() {
            if !v.is_finite() {
                return Err(Error::OutOfRange(format!("non-finite load sample {v}")));
            }
            if *v < 0.0 {
                *v = 0.0;
                clamped += 1;
            }
        }
        Ok((
            LoadSeries {
                transformer_id: transformer_id.into(),
                values,
            },
            clamped,
        ))
    }

    /// Builds a series that must already be nonnegative.
    pub fn new(transformer_id: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::OutOfRange(format!("load sample {v} is not a nonnegative number")));
        }
        Ok(LoadSeries {
            transformer_id: transformer_id.into(),
            values,
        })
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

    pub fn max(&self) -> Option<f64> {
        self.values.iter().copied().reduce(f64::max)
    }

    pub fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        if self.len() != grid.len() {
            return Err(Error::LengthMismatch {
                what: "load series",
                expected: grid.len(),
                actual: self.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuelType {
    pub name: String,
    emission_factor_kg_per_mwh: f64,
}

impl FuelType {
    pub fn new(name: impl Into<String>, emission_factor_kg_per_mwh: f64) -> Result<Self> {
        if !(emission_factor_kg_per_mwh.is_finite() && emission_factor_kg_per_mwh >= 0.0) {
            return Err(Error::Config(format!(
                "emission factor must be nonnegative, got {emission_factor_kg_per_mwh}"
            )));
        }
        Ok(FuelType {
            name: name.into(),
            emission_factor_kg_per_mwh,
        })
    }

    pub fn emission_factor(&self) -> f64 {
        self.emission_factor_kg_per_mwh
    }
}

/// ISO New England emission factors (kg CO2 per MWh).
pub fn default_fuels() -> Vec<FuelType> {
    [
        ("coal", 962.97),
        ("gas", 395.53),
        ("oil", 933.94),
        ("nuclear", 0.0),
        ("hydro", 0.0),
        ("solar_wind", 0.0),
    ]
    .into_iter()
    .map(|(name, w)| FuelType {
        name: name.to_string(),
        emission_factor_kg_per_mwh: w,
    })
    .collect()
}

/// Per-fuel marginal weights, one row per fuel, one column per slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalFactorSeries {
    fuels: Vec<String>,
    weights: Vec<Vec<f64>>,
}

impl MarginalFactorSeries {
    const SUM_TOLERANCE: f64 = 1e-9;

    pub fn new(fuels: Vec<String>, weights: Vec<Vec<f64>>) -> Result<Self> {
        if fuels.is_empty() {
            return Err(Error::Empty("marginal factor fuels"));
        }
        if fuels.len() != weights.len() {
            return Err(Error::LengthMismatch {
                what: "marginal factor rows",
                expected: fuels.len(),
                actual: weights.len(),
            });
        }
        let slots = weights[0].len();
        for row in &weights {
            if row.len() != slots {
                return Err(Error::LengthMismatch {
                    what: "marginal factor slots",
                    expected: slots,
                    actual: row.len(),
                });
            }
        }
        for t in 0..slots {
            let mut sum = 0.0;
            for row in &weights {
                if !(row[t] >= 0.0) {
                    return Err(Error::OutOfRange(format!(
                        "negative marginal factor {} at slot {t}",
                        row[t]
                    )));
                }
                sum += row[t];
            }
            if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
                return Err(Error::OutOfRange(format!(
                    "marginal factors sum to {sum} at slot {t}"
                )));
            }
        }
        Ok(MarginalFactorSeries { fuels, weights })
    }

    /// Every slot fully attributed to a single fuel.
    pub fn single(fuel: impl Into<String>, slots: usize) -> Self {
        MarginalFactorSeries {
            fuels: vec![fuel.into()],
            weights: vec![vec![1.0; slots]],
        }
    }

    pub fn fuels(&self) -> &[String] {
        &self.fuels
    }

    pub fn weights(&self, fuel_index: usize) -> &[f64] {
        &self.weights[fuel_index]
    }

    pub fn slots(&self) -> usize {
        self.weights[0].len()
    }

    pub fn concat(parts: &[MarginalFactorSeries]) -> Result<Self> {
        let first = parts.first().ok_or(Error::Empty("marginal factor parts"))?;
        let mut weights = vec![Vec::new(); first.fuels.len()];
        for part in parts {
            if part.fuels != first.fuels {
                return Err(Error::Config("marginal factor parts use different fuels".into()));
            }
            for (dst, src) in weights.iter_mut().zip(&part.weights) {
                dst.extend_from_slice(src);
            }
        }
        Ok(MarginalFactorSeries {
            fuels: first.fuels.clone(),
            weights,
        })
    }
}

/// Marginal carbon intensity `c(t) = sum_f w_f * lambda_f(t)` in kg/MWh.
pub fn emission_cost_series(factors: &MarginalFactorSeries, fuels: &[FuelType]) -> Result<Vec<f64>> {
    let mut cost = vec![0.0; factors.slots()];
    for (k, name) in factors.fuels().iter().enumerate() {
        let fuel = fuels
            .iter()
            .find(|f| &f.name == name)
            .ok_or_else(|| Error::Config(format!("no emission factor for fuel '{name}'")))?;
        let w = fuel.emission_factor();
        for (c, lambda) in cost.iter_mut().zip(factors.weights(k)) {
            *c += w * lambda;
        }
    }
    Ok(cost)
}

/// Charge decisions and the state-of-charge trajectory of one storage unit.
///
/// `soc_kwh` has one more entry than `charge_kwh`: `soc[t]` is the level at the
/// start of slot `t` and `soc[t + 1] = soc[t] + charge[t]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitSchedule {
    charge_kwh: Vec<f64>,
    soc_kwh: Vec<f64>,
}

impl UnitSchedule {
    pub fn from_charges(initial_soc_kwh: f64, charge_kwh: Vec<f64>) -> Self {
        let mut soc_kwh = Vec::with_capacity(charge_kwh.len() + 1);
        let mut s = initial_soc_kwh;
        soc_kwh.push(s);
        for x in &charge_kwh {
            s += x;
            soc_kwh.push(s);
        }
        UnitSchedule { charge_kwh, soc_kwh }
    }

    pub fn idle(soc_kwh: f64, slots: usize) -> Self {
        Self::from_charges(soc_kwh, vec![0.0; slots])
    }

    pub fn charge(&self) -> &[f64] {
        &self.charge_kwh
    }

    pub fn soc(&self) -> &[f64] {
        &self.soc_kwh
    }

    pub fn initial_soc(&self) -> f64 {
        self.soc_kwh[0]
    }

    pub fn final_soc(&self) -> f64 {
        *self.soc_kwh.last().expect("soc has at least one entry")
    }

    pub fn len(&self) -> usize {
        self.charge_kwh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charge_kwh.is_empty()
    }
}

/// Storage schedule for a fleet of transformers sharing one time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub units: Vec<UnitSchedule>,
}

impl Schedule {
    pub fn new(units: Vec<UnitSchedule>) -> Self {
        Schedule { units }
    }

    pub fn slots(&self) -> usize {
        self.units.first().map_or(0, UnitSchedule::len)
    }

    /// Aggregate charge `x(t) = sum_i x_i(t)` seen by the grid.
    pub fn aggregate(&self) -> Vec<f64> {
        let mut total = vec![0.0; self.slots()];
        for unit in &self.units {
            for (acc, x) in total.iter_mut().zip(unit.charge()) {
                *acc += x;
            }
        }
        total
    }
}

/// Emission change caused by the schedule, in kg. Negative values are reductions.
pub fn schedule_emission_delta(schedule: &Schedule, cost: &[f64]) -> Result<f64> {
    for unit in &schedule.units {
        if unit.len() != cost.len() {
            return Err(Error::LengthMismatch {
                what: "schedule vs cost series",
                expected: cost.len(),
                actual: unit.len(),
            });
        }
    }
    Ok(charge_emission_delta(&schedule.aggregate(), cost))
}

/// `sum_t c(t) x(t) / 1000` for equal-length slices.
pub(crate) fn charge_emission_delta(charge_kwh: &[f64], cost: &[f64]) -> f64 {
    charge_kwh.iter().zip(cost).map(|(x, c)| c * x).sum::<f64>() / 1000.0
}

/// Storage capacity that sustains the peak load for `hours`.
pub fn size_storage(load: &LoadSeries, hours: f64) -> Result<f64> {
    if !(hours.is_finite() && hours >= 0.0) {
        return Err(Error::OutOfRange(format!("battery hours must be nonnegative, got {hours}")));
    }
    let peak = load.max().ok_or(Error::Empty("load series"))?;
    Ok(hours * peak)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    /// Stored state of charge does not follow the charge decisions.
    SocEvolution,
    SocAboveCapacity,
    SocBelowZero,
    RateLimit,
    /// Discharge larger than the load it serves.
    DischargeAboveLoad,
    /// Charging pushes the transformer past capacity minus its overload margin.
    TransformerHeadroom,
    /// Start or end of day differs from the required boundary level.
    Boundary,
    Length,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::SocEvolution => "state of charge does not follow charge decisions",
            ViolationKind::SocAboveCapacity => "state of charge above storage capacity",
            ViolationKind::SocBelowZero => "state of charge below zero",
            ViolationKind::RateLimit => "charge/discharge rate limit exceeded",
            ViolationKind::DischargeAboveLoad => "discharge exceeds transformer load",
            ViolationKind::TransformerHeadroom => "charging exceeds transformer headroom",
            ViolationKind::Boundary => "boundary state of charge not met",
            ViolationKind::Length => "schedule length does not match the load series",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub slot: Option<usize>,
    /// Size of the breach in kWh.
    pub excess: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.slot {
            Some(t) => write!(f, "slot {t}: {} by {:.6} kWh", self.kind, self.excess),
            None => write!(f, "{} by {:.6} kWh", self.kind, self.excess),
        }
    }
}

/// Required state of charge at the day boundaries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocBoundary {
    pub start_kwh: f64,
    /// `None` leaves the end-of-day level free (realized schedules).
    pub end_kwh: Option<f64>,
}

impl SocBoundary {
    pub fn cyclic(soc_kwh: f64) -> Self {
        SocBoundary {
            start_kwh: soc_kwh,
            end_kwh: Some(soc_kwh),
        }
    }

    pub fn start_only(soc_kwh: f64) -> Self {
        SocBoundary {
            start_kwh: soc_kwh,
            end_kwh: None,
        }
    }
}

/// Checks one unit's schedule against the physical limits for the given actual loads.
///
/// A transformer whose load already exceeds capacity minus margin only requires the
/// unit not to charge in that slot; discharging remains allowed.
pub fn validate_schedule(
    schedule: &UnitSchedule,
    actual_load_kw: &[f64],
    grid: &TimeGrid,
    transformer: &Transformer,
    storage: &StorageUnit,
    boundary: SocBoundary,
) -> Vec<Violation> {
    let tol = VIOLATION_TOLERANCE_KWH;
    let mut out = Vec::new();
    if schedule.len() != actual_load_kw.len() || schedule.soc().len() != schedule.len() + 1 {
        out.push(Violation {
            kind: ViolationKind::Length,
            slot: None,
            excess: 0.0,
        });
        return out;
    }
    let dt = grid.slot_hours();
    let cap = storage.capacity_kwh();
    let rate = storage.slot_rate_kwh(grid);
    let soc = schedule.soc();

    let mut push = |kind, slot, excess: f64| {
        if excess > tol {
            out.push(Violation { kind, slot, excess });
        }
    };

    for (t, &s) in soc.iter().enumerate() {
        push(ViolationKind::SocAboveCapacity, Some(t), s - cap);
        push(ViolationKind::SocBelowZero, Some(t), -s);
    }
    for (t, (&x, &load)) in schedule.charge().iter().zip(actual_load_kw).enumerate() {
        push(ViolationKind::SocEvolution, Some(t), (soc[t] + x - soc[t + 1]).abs());
        push(ViolationKind::RateLimit, Some(t), x.abs() - rate);
        push(ViolationKind::DischargeAboveLoad, Some(t), -x - load * dt);
        let headroom = (transformer.capacity_kw() - load - transformer.overload_margin_kw()) * dt;
        push(ViolationKind::TransformerHeadroom, Some(t), x - headroom.max(0.0));
    }
    push(ViolationKind::Boundary, Some(0), (soc[0] - boundary.start_kwh).abs());
    if let Some(end) = boundary.end_kwh {
        push(ViolationKind::Boundary, Some(schedule.len()), (schedule.final_soc() - end).abs());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fuel_factors(pairs: &[(&str, f64)]) -> MarginalFactorSeries {
        MarginalFactorSeries::new(
            pairs.iter().map(|(n, _)| n.to_string()).collect(),
            pairs.iter().map(|(_, w)| vec![*w]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn time_grid_defaults() {
        let g = TimeGrid::five_minute(3).unwrap();
        assert_eq!(g.slot_minutes(), 5);
        assert_eq!(g.slots_per_day() * g.slot_minutes() as usize, 1440);
        assert_eq!(g.len(), 864);
        assert_eq!(g.day_range(1), 288..576);
        assert!(TimeGrid::new(7, 1).is_err());
        assert!(TimeGrid::new(288, 0).is_err());
    }

    #[test]
    fn equal_mix_average_intensity() {
        // The often-quoted 339.49 kg/MWh does not follow from the table values;
        // 0.25 * (962.97 + 395.53) is 339.625.
        let f = fuel_factors(&[("coal", 0.25), ("gas", 0.25), ("nuclear", 0.25), ("hydro", 0.25)]);
        let c = emission_cost_series(&f, &default_fuels()).unwrap();
        assert!((c[0] - 339.625).abs() < 1e-9);
        assert!((c[0] - 339.49).abs() < 0.2);
    }

    #[test]
    fn single_fuel_intensities() {
        let fuels = default_fuels();
        let c = emission_cost_series(&MarginalFactorSeries::single("nuclear", 3), &fuels).unwrap();
        assert_eq!(c, vec![0.0; 3]);
        let c = emission_cost_series(&MarginalFactorSeries::single("gas", 2), &fuels).unwrap();
        assert_eq!(c, vec![395.53; 2]);
    }

    #[test]
    fn unknown_fuel_is_config_error() {
        let err = emission_cost_series(&MarginalFactorSeries::single("peat", 1), &default_fuels());
        assert!(matches!(err, Err(Error::Config(_))));
    }

    #[test]
    fn marginal_factor_series_rejects_bad_sums() {
        assert!(MarginalFactorSeries::new(vec!["a".into(), "b".into()], vec![vec![0.5], vec![0.6]]).is_err());
        assert!(MarginalFactorSeries::new(vec!["a".into(), "b".into()], vec![vec![1.5], vec![-0.5]]).is_err());
    }

    #[test]
    fn emission_delta_examples() {
        let idle = Schedule::new(vec![UnitSchedule::idle(5.0, 4)]);
        assert_eq!(schedule_emission_delta(&idle, &[100.0; 4]).unwrap(), 0.0);

        let one = Schedule::new(vec![UnitSchedule::from_charges(100.0, vec![-100.0])]);
        let d = schedule_emission_delta(&one, &[962.97]).unwrap();
        assert!((d + 96.297).abs() < 1e-12);

        let two = Schedule::new(vec![UnitSchedule::from_charges(0.0, vec![100.0, -100.0])]);
        let d = schedule_emission_delta(&two, &[0.0, 962.97]).unwrap();
        assert!((d + 96.297).abs() < 1e-12);

        assert!(schedule_emission_delta(&two, &[1.0]).is_err());
    }

    #[test]
    fn storage_sizing() {
        let load = LoadSeries::new("t", vec![10.0, 50.0, 20.0]).unwrap();
        assert_eq!(size_storage(&load, 1.0).unwrap(), 50.0);
        assert_eq!(size_storage(&load, 0.5).unwrap(), 25.0);
        assert_eq!(size_storage(&load, 0.0).unwrap(), 0.0);
        let empty = LoadSeries::new("t", vec![]).unwrap();
        assert!(matches!(size_storage(&empty, 1.0), Err(Error::Empty(_))));
    }

    #[test]
    fn raw_loads_are_clamped() {
        let (s, n) = LoadSeries::from_raw("t", vec![1.0, -2.0, 3.0, -0.1]).unwrap();
        assert_eq!(n, 2);
        assert_eq!(s.values(), &[1.0, 0.0, 3.0, 0.0]);
        assert!(LoadSeries::new("t", vec![-1.0]).is_err());
    }

    #[test]
    fn constructor_invariants() {
        assert!(Transformer::new("t", 100.0, 100.0).is_err());
        assert!(Transformer::new("t", 0.0, 0.0).is_err());
        assert!(StorageUnit::new(10.0, 5.0, 11.0).is_err());
        assert!(StorageUnit::new(-1.0, 5.0, 0.0).is_err());
        assert!(FuelType::new("x", -1.0).is_err());
        let none = StorageUnit::none();
        assert_eq!(none.capacity_kwh(), 0.0);
    }

    fn validation_fixture() -> (TimeGrid, Transformer, StorageUnit) {
        let grid = TimeGrid::new(4, 1).unwrap(); // 6 h slots
        let tr = Transformer::with_margin_fraction("t", 100.0, 0.01).unwrap();
        let st = StorageUnit::half_full(60.0, 10.0).unwrap();
        (grid, tr, st)
    }

    #[test]
    fn idle_schedule_is_valid() {
        let (grid, tr, st) = validation_fixture();
        let sched = UnitSchedule::idle(30.0, 4);
        let v = validate_schedule(&sched, &[40.0, 50.0, 60.0, 20.0], &grid, &tr, &st, SocBoundary::cyclic(30.0));
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn discharge_above_load_is_flagged() {
        let (grid, tr, _) = validation_fixture();
        let st = StorageUnit::half_full(1000.0, 1000.0).unwrap();
        let loads = [1.0, 50.0, 60.0, 20.0];
        // 1 kW over 6 h is 6 kWh; discharge 7 kWh.
        let x = vec![-7.0, 7.0, 0.0, 0.0];
        let sched = UnitSchedule::from_charges(500.0, x);
        let v = validate_schedule(&sched, &loads, &grid, &tr, &st, SocBoundary::cyclic(500.0));
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].kind, ViolationKind::DischargeAboveLoad);
        assert_eq!(v[0].slot, Some(0));
    }

    #[test]
    fn charging_at_full_load_breaches_headroom() {
        let (grid, tr, st) = validation_fixture();
        let loads = [100.0, 50.0, 60.0, 20.0];
        let sched = UnitSchedule::from_charges(30.0, vec![1.0, -1.0, 0.0, 0.0]);
        let v = validate_schedule(&sched, &loads, &grid, &tr, &st, SocBoundary::cyclic(30.0));
        assert_eq!(v.len(), 1, "{v:?}");
        assert_eq!(v[0].kind, ViolationKind::TransformerHeadroom);

        // Idling (or discharging) while overloaded is acceptable.
        let sched = UnitSchedule::from_charges(30.0, vec![-1.0, 1.0, 0.0, 0.0]);
        let v = validate_schedule(&sched, &loads, &grid, &tr, &st, SocBoundary::cyclic(30.0));
        assert!(v.is_empty(), "{v:?}");
    }

    #[test]
    fn soc_rate_and_boundary_breaches() {
        let (grid, tr, st) = validation_fixture();
        let loads = [40.0; 4];
        // rate limit is 10 kW * 6 h = 60 kWh per slot
        let sched = UnitSchedule::from_charges(30.0, vec![35.0, -35.0, -31.0, 0.0]);
        let kinds: Vec<_> = validate_schedule(&sched, &loads, &grid, &tr, &st, SocBoundary::cyclic(30.0))
            .into_iter()
            .map(|v| v.kind)
            .collect();
        assert!(kinds.contains(&ViolationKind::SocAboveCapacity));
        assert!(kinds.contains(&ViolationKind::SocBelowZero));
        assert!(kinds.contains(&ViolationKind::Boundary));

        let free_end = validate_schedule(
            &UnitSchedule::from_charges(30.0, vec![10.0, 0.0, 0.0, 0.0]),
            &loads,
            &grid,
            &tr,
            &st,
            SocBoundary::start_only(30.0),
        );
        assert!(free_end.is_empty());
    }
}
