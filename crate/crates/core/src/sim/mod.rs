//! Day-by-day simulation of the scheduling policies.
//!
//! Each day a policy plans a schedule from what it knows, the plan is clamped
//! slot by slot against the loads that actually occur, and the realized schedule
//! is accounted against the storage-free grid. The state of charge carries over
//! from one day to the next.

mod dataset;
mod forecasts;
mod horizon;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dataset::{slot_costs, Dataset};
pub use forecasts::{prepare_forecasts, ForecastSet};
pub use horizon::{
    mape_csv, run, run_horizon, select_storage_sites, storage_for, sweep, AnnualReport, DaySummary, MapeSummary,
    PolicyTotals, SweepAxis, SweepRow, SweepTable, MIN_WARMUP_DAYS,
};

use crate::domain::{validate_schedule, SocBoundary, StorageUnit, TimeGrid, Transformer, UnitSchedule, Violation};
use crate::optimize::{solve, EassInstance, Formulation, SolverBackend, UnitInput};
use crate::Result;

/// Realized charge differing from the plan by more than this counts as an adjustment.
pub const ADJUSTMENT_TOLERANCE_KWH: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Policy {
    /// Plans with the actual loads of the day.
    OfflineOptimal,
    /// Plans with the forecast taken at face value.
    OnlineLp,
    /// Plans with yesterday's loads and emission intensity.
    PreDay,
    /// Plans against the budgeted worst case around the forecast.
    RobustRo,
}

impl Policy {
    pub const ALL: [Policy; 4] = [Policy::OfflineOptimal, Policy::OnlineLp, Policy::PreDay, Policy::RobustRo];

    pub fn name(self) -> &'static str {
        match self {
            Policy::OfflineOptimal => "offline_optimal",
            Policy::OnlineLp => "online_lp",
            Policy::PreDay => "pre_day",
            Policy::RobustRo => "robust_ro",
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| crate::Error::Config(format!("unknown policy {s:?}")))
    }
}

impl std::fmt::Display for Policy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Clamps one planned charge into what the unit and transformer allow given the
/// actual load and current state of charge.
///
/// When the transformer is already past capacity minus margin, charging is cut to 0
/// but discharging stays allowed.
pub fn project_feasible(
    planned_kwh: f64,
    actual_load_kw: f64,
    soc_kwh: f64,
    transformer: &Transformer,
    storage: &StorageUnit,
    grid: &TimeGrid,
) -> f64 {
    let dt = grid.slot_hours();
    let rate = storage.slot_rate_kwh(grid);
    let lo = (-rate).max(-soc_kwh).max(-actual_load_kw * dt).min(0.0);
    let headroom = (transformer.capacity_kw() - actual_load_kw - transformer.overload_margin_kw()) * dt;
    let hi = rate.min(storage.capacity_kwh() - soc_kwh).min(headroom).max(0.0);
    planned_kwh.clamp(lo, hi)
}

/// Projects a whole day, updating the state of charge from realized values.
/// Returns the realized schedule and the number of slots that moved.
pub fn project_day(
    planned_kwh: &[f64],
    actual_load_kw: &[f64],
    initial_soc_kwh: f64,
    transformer: &Transformer,
    storage: &StorageUnit,
    grid: &TimeGrid,
) -> (UnitSchedule, usize) {
    let mut soc = initial_soc_kwh;
    let mut adjustments = 0;
    let mut realized = Vec::with_capacity(planned_kwh.len());
    for (&x, &l) in planned_kwh.iter().zip(actual_load_kw) {
        let r = project_feasible(x, l, soc, transformer, storage, grid);
        if (r - x).abs() > ADJUSTMENT_TOLERANCE_KWH {
            adjustments += 1;
        }
        soc += r;
        realized.push(r);
    }
    (UnitSchedule::from_charges(initial_soc_kwh, realized), adjustments)
}

/// Emissions avoided over a day, kg.
///
/// Energy left in (or taken from) the store at the end of the day is credited (or
/// charged) at the day's mean intensity, so a unit that ends fuller is not
/// penalised for charging energy it has not yet used.
pub fn daily_savings(realized_kwh: &[f64], cost: &[f64], soc_start_kwh: f64, soc_end_kwh: f64) -> f64 {
    let emitted = crate::domain::charge_emission_delta(realized_kwh, cost);
    -emitted + soc_correction(cost, soc_start_kwh, soc_end_kwh)
}

/// Value of the change in stored energy at the mean intensity of `cost`, kg.
pub fn soc_correction(cost: &[f64], soc_start_kwh: f64, soc_end_kwh: f64) -> f64 {
    if cost.is_empty() {
        return 0.0;
    }
    let mean = cost.iter().sum::<f64>() / cost.len() as f64;
    (soc_end_kwh - soc_start_kwh) * mean / 1000.0
}

/// What is known about one transformer on one day.
#[derive(Debug, Clone)]
pub struct UnitDay<'a> {
    pub transformer: &'a Transformer,
    /// Storage with the state of charge at the start of the day.
    pub storage: StorageUnit,
    pub actual_kw: &'a [f64],
    pub forecast_kw: &'a [f64],
    pub sigma_kw: &'a [f64],
    pub previous_kw: Option<&'a [f64]>,
}

/// Day-wide inputs shared by all units.
#[derive(Debug, Clone)]
pub struct DayContext<'a> {
    /// One-day grid.
    pub grid: TimeGrid,
    pub cost: &'a [f64],
    pub previous_cost: Option<&'a [f64]>,
    pub gamma: f64,
    pub solver: SolverBackend,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitDayResult {
    pub planned_kwh: Vec<f64>,
    pub realized: UnitSchedule,
    /// `sum c * x / 1000` of the realized schedule, kg.
    pub emission_delta_kg: f64,
    pub soc_correction_kg: f64,
    pub savings_kg: f64,
    pub violations: Vec<Violation>,
    /// Slots where the realized charge differs from the plan.
    pub adjustments: usize,
    /// The end-of-day target was outside the reachable range and was moved.
    pub boundary_clamped: bool,
    /// Slots planned with charging disallowed because of an overloaded transformer.
    pub relaxed_slots: usize,
    /// The policy had nothing to plan with, so the unit stayed idle.
    pub skipped: bool,
}

/// Plans, realizes and accounts one unit for one day.
pub fn run_unit_day(policy: Policy, ctx: &DayContext<'_>, unit: &UnitDay<'_>) -> Result<UnitDayResult> {
    let t_len = ctx.grid.slots_per_day();
    let start = unit.storage.initial_soc_kwh();
    let (plan_load, plan_sigma, plan_cost, form) = match policy {
        Policy::OfflineOptimal => (Some(unit.actual_kw), None, Some(ctx.cost), Formulation::Nominal),
        Policy::OnlineLp => (Some(unit.forecast_kw), None, Some(ctx.cost), Formulation::Nominal),
        Policy::PreDay => (unit.previous_kw, None, ctx.previous_cost, Formulation::Nominal),
        Policy::RobustRo => (Some(unit.forecast_kw), Some(unit.sigma_kw), Some(ctx.cost), Formulation::Robust),
    };

    let mut boundary_clamped = false;
    let mut relaxed_slots = 0;
    let mut skipped = false;
    let planned: Vec<f64> = match (plan_load, plan_cost) {
        _ if unit.storage.capacity_kwh() == 0.0 => vec![0.0; t_len],
        (Some(load), Some(cost)) => {
            let mut input = UnitInput::new(unit.transformer.clone(), unit.storage, load.to_vec());
            if let Some(s) = plan_sigma {
                input = input.with_sigma(s.to_vec());
            }
            let mut inst = EassInstance::new(ctx.grid.clone(), vec![input], cost.to_vec(), ctx.gamma)?;
            boundary_clamped = inst.clamp_boundaries_to_reachable(form)?[0];
            let sol = solve(&inst, form, ctx.solver)?;
            relaxed_slots = sol.relaxed_slots[0].len();
            if sol.is_optimal() {
                sol.schedule.units[0].charge().to_vec()
            } else {
                log::warn!(
                    "{} plan for {} infeasible: {}",
                    policy,
                    unit.transformer.id,
                    sol.certificate.unwrap_or_default()
                );
                vec![0.0; t_len]
            }
        }
        _ => {
            skipped = true;
            vec![0.0; t_len]
        }
    };

    let (realized, adjustments) = project_day(&planned, unit.actual_kw, start, unit.transformer, &unit.storage, &ctx.grid);
    let violations = validate_schedule(
        &realized,
        unit.actual_kw,
        &ctx.grid,
        unit.transformer,
        &unit.storage,
        SocBoundary::start_only(start),
    );
    let emission_delta_kg = crate::domain::charge_emission_delta(realized.charge(), ctx.cost);
    let soc_correction_kg = soc_correction(ctx.cost, start, realized.final_soc());
    let savings_kg = daily_savings(realized.charge(), ctx.cost, start, realized.final_soc());
    Ok(UnitDayResult {
        planned_kwh: planned,
        realized,
        emission_delta_kg,
        soc_correction_kg,
        savings_kg,
        violations,
        adjustments,
        boundary_clamped,
        relaxed_slots,
        skipped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayResult {
    pub policy: Policy,
    pub units: Vec<UnitDayResult>,
    pub savings_kg: f64,
    pub emission_delta_kg: f64,
    pub violations: usize,
    pub adjustments: usize,
    /// Set when the policy could not plan, e.g. PreDay without a previous day.
    pub note: Option<String>,
}

/// Runs one policy over every unit for one day. Units are processed in parallel
/// and summed in their given order.
pub fn run_day(policy: Policy, ctx: &DayContext<'_>, units: &[UnitDay<'_>]) -> Result<DayResult> {
    let results: Vec<UnitDayResult> = units
        .par_iter()
        .map(|u| run_unit_day(policy, ctx, u))
        .collect::<Result<_>>()?;
    let note = results
        .iter()
        .any(|r| r.skipped)
        .then(|| format!("{policy} had no previous day to plan from; units left idle"));
    Ok(DayResult {
        policy,
        savings_kg: results.iter().map(|r| r.savings_kg).sum(),
        emission_delta_kg: results.iter().map(|r| r.emission_delta_kg).sum(),
        violations: results.iter().map(|r| r.violations.len()).sum(),
        adjustments: results.iter().map(|r| r.adjustments).sum(),
        units: results,
        note,
    })
}
