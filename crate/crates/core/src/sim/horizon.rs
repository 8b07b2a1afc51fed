use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use super::forecasts::{prepare_forecasts, ForecastSet};
use super::{run_unit_day, DayContext, Policy, UnitDay};
use crate::config::RunConfig;
use crate::domain::{LoadSeries, StorageUnit, Transformer};
use crate::{Error, Result};

/// Shortest history the rolling forecaster is allowed to start from.
pub const MIN_WARMUP_DAYS: usize = 56;

/// Random stream used to pick the transformers that receive storage.
pub(crate) const PENETRATION_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DaySummary {
    pub day: usize,
    pub policy: Policy,
    pub savings_kg: f64,
    /// Storage-free emissions of every transformer on this day.
    pub baseline_kg: f64,
    pub savings_pct: f64,
    pub violations: usize,
    pub adjustments: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyTotals {
    pub policy: Policy,
    pub baseline_kg: f64,
    pub savings_kg: f64,
    pub savings_pct: f64,
    pub violations: usize,
    pub adjustments: usize,
    /// Unit-days whose end-of-day target had to be moved into the reachable range.
    pub boundary_clamped: usize,
    /// Slots planned with charging disallowed because of forecast overload.
    pub relaxed_slots: usize,
    pub skipped_days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapeSummary {
    /// Transformers with a defined error (some nonzero actual load).
    pub transformers: usize,
    pub mean_pct: f64,
    pub median_pct: f64,
    pub min_pct: f64,
    pub max_pct: f64,
    /// Mean error of copying the previous day, over the same transformers.
    pub persistence_mean_pct: f64,
}

impl MapeSummary {
    pub fn from_forecasts(f: &ForecastSet) -> Self {
        let pairs: Vec<(f64, f64)> = f
            .mape
            .iter()
            .zip(&f.persistence_mape)
            .filter_map(|(m, p)| Some((m.as_ref()?.percent, p.as_ref()?.percent)))
            .collect();
        if pairs.is_empty() {
            return MapeSummary {
                transformers: 0,
                mean_pct: f64::NAN,
                median_pct: f64::NAN,
                min_pct: f64::NAN,
                max_pct: f64::NAN,
                persistence_mean_pct: f64::NAN,
            };
        }
        let mut m: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        m.sort_by(f64::total_cmp);
        let n = m.len();
        let median = if n % 2 == 1 { m[n / 2] } else { 0.5 * (m[n / 2 - 1] + m[n / 2]) };
        MapeSummary {
            transformers: n,
            mean_pct: m.iter().sum::<f64>() / n as f64,
            median_pct: median,
            min_pct: m[0],
            max_pct: m[n - 1],
            persistence_mean_pct: pairs.iter().map(|p| p.1).sum::<f64>() / n as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnualReport {
    pub first_day: usize,
    pub horizon_days: usize,
    /// Transformers fitted with storage, in data order.
    pub storage_sites: Vec<String>,
    pub totals: Vec<PolicyTotals>,
    pub mape: MapeSummary,
    pub days: Vec<DaySummary>,
}

impl AnnualReport {
    pub fn total_violations(&self) -> usize {
        self.totals.iter().map(|t| t.violations).sum()
    }

    pub fn totals_for(&self, policy: Policy) -> Option<&PolicyTotals> {
        self.totals.iter().find(|t| t.policy == policy)
    }

    pub fn days_for(&self, policy: Policy) -> impl Iterator<Item = &DaySummary> {
        self.days.iter().filter(move |d| d.policy == policy)
    }

    /// `day,policy,savings_kg,savings_pct,violations`, ordered by day then policy.
    pub fn report_csv(&self) -> String {
        let mut rows: Vec<&DaySummary> = self.days.iter().collect();
        rows.sort_by_key(|d| (d.day, d.policy));
        let mut out = String::from("day,policy,savings_kg,savings_pct,violations\n");
        for d in rows {
            let _ = writeln!(out, "{},{},{},{},{}", d.day, d.policy, d.savings_kg, d.savings_pct, d.violations);
        }
        out
    }

    pub fn summary_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Summary<'a> {
            first_day: usize,
            horizon_days: usize,
            storage_sites: &'a [String],
            totals: &'a [PolicyTotals],
            mape: &'a MapeSummary,
            notes: Vec<String>,
        }
        let notes = self
            .days
            .iter()
            .filter_map(|d| d.note.as_ref().map(|n| format!("day {}: {n}", d.day)))
            .collect();
        let s = Summary {
            first_day: self.first_day,
            horizon_days: self.horizon_days,
            storage_sites: &self.storage_sites,
            totals: &self.totals,
            mape: &self.mape,
            notes,
        };
        Ok(serde_json::to_string_pretty(&s)? + "\n")
    }
}

/// Picks `round(penetration * n)` transformers at random from the seed.
pub fn select_storage_sites(n: usize, penetration: f64, seed: u64) -> Vec<bool> {
    let k = ((penetration * n as f64).round() as usize).min(n);
    let mut chosen = vec![false; n];
    if k == n {
        chosen.fill(true);
        return chosen;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(PENETRATION_STREAM);
    for i in rand::seq::index::sample(&mut rng, n, k) {
        chosen[i] = true;
    }
    chosen
}

/// Storage sized from the peak of `load`, starting half full.
///
/// Capacity is `battery_hours` of peak load. The rate limit is `rate_hours` of
/// peak load when given, otherwise a full charge per hour.
pub fn storage_for(load: &LoadSeries, battery_hours: f64, rate_hours: Option<f64>) -> Result<StorageUnit> {
    let peak = load.max().ok_or(Error::Empty("load series"))?;
    let capacity = crate::domain::size_storage(load, battery_hours)?;
    let rate = match rate_hours {
        Some(r) => r * peak,
        None => capacity,
    };
    StorageUnit::half_full(capacity, rate)
}

fn evaluation_span(cfg: &RunConfig, data: &Dataset) -> Result<(usize, usize)> {
    if cfg.warmup_days < MIN_WARMUP_DAYS {
        return Err(Error::InsufficientWarmup(format!(
            "warmup of {} days is shorter than the required {MIN_WARMUP_DAYS}",
            cfg.warmup_days
        )));
    }
    let available = data.days().saturating_sub(cfg.warmup_days);
    let days = cfg.horizon_days.unwrap_or(available);
    if available == 0 || days > available {
        return Err(Error::InsufficientWarmup(format!(
            "{} days of data cannot hold {} warmup days and {} evaluation days",
            data.days(),
            cfg.warmup_days,
            days.max(1)
        )));
    }
    Ok((cfg.warmup_days, days))
}

/// Fits the forecasts and simulates every configured policy.
pub fn run(cfg: &RunConfig, data: &Dataset) -> Result<AnnualReport> {
    cfg.validate()?;
    let (first, days) = evaluation_span(cfg, data)?;
    let forecasts = prepare_forecasts(data, &cfg.forecast, first, days)?;
    run_horizon(cfg, data, &forecasts)
}

#[derive(Debug, Default, Clone, Copy)]
struct UnitDayTally {
    savings_kg: f64,
    violations: usize,
    adjustments: usize,
    boundary_clamped: bool,
    relaxed_slots: usize,
    skipped: bool,
}

/// Simulates every configured policy over the evaluation days covered by `forecasts`.
///
/// Days run in order for each transformer because the state of charge carries over;
/// transformers run in parallel and are summed in data order.
pub fn run_horizon(cfg: &RunConfig, data: &Dataset, forecasts: &ForecastSet) -> Result<AnnualReport> {
    cfg.validate()?;
    let (first, days) = evaluation_span(cfg, data)?;
    if forecasts.first_day != first || forecasts.days < days || forecasts.units() != data.loads.len() {
        return Err(Error::Config(format!(
            "forecasts cover days {}..{} for {} transformers, run needs {first}..{} for {}",
            forecasts.first_day,
            forecasts.first_day + forecasts.days,
            forecasts.units(),
            first + days,
            data.loads.len()
        )));
    }
    let grid = data.grid.one_day();
    let td = data.slots_per_day();
    let n = data.loads.len();
    let sites = select_storage_sites(n, cfg.penetration, cfg.seed);
    let transformers: Vec<Transformer> = data
        .loads
        .iter()
        .zip(&data.capacities_kw)
        .map(|(l, &c)| Transformer::with_margin_fraction(l.transformer_id.clone(), c, cfg.eta_fraction))
        .collect::<Result<_>>()?;
    let storage: Vec<StorageUnit> = data
        .loads
        .iter()
        .zip(&sites)
        .map(|(l, &on)| {
            if on {
                storage_for(l, cfg.battery_hours, cfg.rate_hours)
            } else {
                Ok(StorageUnit::none())
            }
        })
        .collect::<Result<_>>()?;
    let baseline: Vec<f64> = (first..first + days).map(|d| data.baseline_kg(d)).collect();

    let mut policies = cfg.policies.clone();
    policies.sort();
    policies.dedup();

    let mut summaries = Vec::with_capacity(policies.len() * days);
    let mut totals = Vec::with_capacity(policies.len());
    for &policy in &policies {
        let per_unit: Vec<Vec<UnitDayTally>> = (0..n)
            .into_par_iter()
            .map(|u| -> Result<Vec<UnitDayTally>> {
                if storage[u].capacity_kwh() == 0.0 {
                    return Ok(vec![UnitDayTally::default(); days]);
                }
                let values = data.loads[u].values();
                let mut unit_storage = storage[u];
                let mut out = Vec::with_capacity(days);
                for d in first..first + days {
                    let range = data.grid.day_range(d);
                    let ctx = DayContext {
                        grid: grid.clone(),
                        cost: data.day_cost(d),
                        previous_cost: (d > 0).then(|| data.day_cost(d - 1)),
                        gamma: cfg.gamma,
                        solver: cfg.solver,
                    };
                    let day = UnitDay {
                        transformer: &transformers[u],
                        storage: unit_storage,
                        actual_kw: &values[range.clone()],
                        forecast_kw: forecasts.mean(u, d),
                        sigma_kw: forecasts.sigma(u, d),
                        previous_kw: (d > 0).then(|| &values[range.start - td..range.start]),
                    };
                    let r = run_unit_day(policy, &ctx, &day)?;
                    // Clamp away rounding drift so the next day's storage stays valid.
                    let soc = r.realized.final_soc().clamp(0.0, unit_storage.capacity_kwh());
                    unit_storage = unit_storage.with_initial_soc(soc)?;
                    out.push(UnitDayTally {
                        savings_kg: r.savings_kg,
                        violations: r.violations.len(),
                        adjustments: r.adjustments,
                        boundary_clamped: r.boundary_clamped,
                        relaxed_slots: r.relaxed_slots,
                        skipped: r.skipped,
                    });
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;

        let mut total = PolicyTotals {
            policy,
            baseline_kg: 0.0,
            savings_kg: 0.0,
            savings_pct: 0.0,
            violations: 0,
            adjustments: 0,
            boundary_clamped: 0,
            relaxed_slots: 0,
            skipped_days: 0,
        };
        for k in 0..days {
            let mut s = DaySummary {
                day: first + k,
                policy,
                savings_kg: 0.0,
                baseline_kg: baseline[k],
                savings_pct: 0.0,
                violations: 0,
                adjustments: 0,
                note: None,
            };
            let mut skipped = false;
            for unit in &per_unit {
                let t = &unit[k];
                s.savings_kg += t.savings_kg;
                s.violations += t.violations;
                s.adjustments += t.adjustments;
                total.boundary_clamped += usize::from(t.boundary_clamped);
                total.relaxed_slots += t.relaxed_slots;
                skipped |= t.skipped;
            }
            if skipped {
                s.note = Some(format!("{policy} had no previous day to plan from; units left idle"));
                total.skipped_days += 1;
            }
            s.savings_pct = percent(s.savings_kg, s.baseline_kg);
            total.baseline_kg += s.baseline_kg;
            total.savings_kg += s.savings_kg;
            total.violations += s.violations;
            total.adjustments += s.adjustments;
            summaries.push(s);
        }
        total.savings_pct = percent(total.savings_kg, total.baseline_kg);
        log::info!(
            "{policy}: saved {:.1} kg ({:.3}%), {} violations, {} adjustments",
            total.savings_kg,
            total.savings_pct,
            total.violations,
            total.adjustments
        );
        totals.push(total);
    }

    Ok(AnnualReport {
        first_day: first,
        horizon_days: days,
        storage_sites: data
            .loads
            .iter()
            .zip(&sites)
            .filter(|(_, &on)| on)
            .map(|(l, _)| l.transformer_id.clone())
            .collect(),
        totals,
        mape: MapeSummary::from_forecasts(forecasts),
        days: summaries,
    })
}

fn percent(part: f64, whole: f64) -> f64 {
    if whole == 0.0 {
        0.0
    } else {
        100.0 * part / whole
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    BatteryHours,
    RateHours,
    Penetration,
    Gamma,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::BatteryHours => "battery_hours",
            SweepAxis::RateHours => "rate_hours",
            SweepAxis::Penetration => "penetration",
            SweepAxis::Gamma => "gamma",
        }
    }

    /// Copy of `cfg` with this axis set to `value`, validated.
    pub fn apply(self, cfg: &RunConfig, value: f64) -> Result<RunConfig> {
        let mut c = cfg.clone();
        match self {
            SweepAxis::BatteryHours => c.battery_hours = value,
            SweepAxis::RateHours => c.rate_hours = Some(value),
            SweepAxis::Penetration => c.penetration = value,
            SweepAxis::Gamma => c.gamma = value,
        }
        c.validate()?;
        Ok(c)
    }
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "battery_hours" => Ok(SweepAxis::BatteryHours),
            "rate_hours" => Ok(SweepAxis::RateHours),
            "penetration" => Ok(SweepAxis::Penetration),
            "gamma" => Ok(SweepAxis::Gamma),
            other => Err(Error::Config(format!(
                "unknown sweep axis {other:?}; expected battery_hours, rate_hours, penetration or gamma"
            ))),
        }
    }
}

impl std::fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: SweepAxis,
    pub value: f64,
    pub policy: Policy,
    pub savings_pct: f64,
    pub savings_kg: f64,
    pub violations: usize,
    pub adjustments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// `axis,value,policy,savings_pct`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis,value,policy,savings_pct\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.axis, r.value, r.policy, r.savings_pct);
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn get(&self, value: f64, policy: Policy) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.value == value && r.policy == policy)
    }
}

/// One horizon run per value along `axis`. The forecasts do not depend on any
/// swept parameter, so they are fitted once and shared.
pub fn sweep(
    cfg: &RunConfig,
    data: &Dataset,
    forecasts: &ForecastSet,
    axis: SweepAxis,
    values: &[f64],
) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::Config(format!("no values given for the {axis} sweep")));
    }
    let mut rows = Vec::with_capacity(values.len() * cfg.policies.len());
    for &v in values {
        let c = axis.apply(cfg, v)?;
        let report = run_horizon(&c, data, forecasts)?;
        for t in &report.totals {
            rows.push(SweepRow {
                axis,
                value: v,
                policy: t.policy,
                savings_pct: t.savings_pct,
                savings_kg: t.savings_kg,
                violations: t.violations,
                adjustments: t.adjustments,
            });
        }
    }
    Ok(SweepTable { rows })
}

/// `transformer_id,mape_pct,persistence_mape_pct`; undefined errors are left empty.
pub fn mape_csv(data: &Dataset, forecasts: &ForecastSet) -> String {
    let mut out = String::from("transformer_id,mape_pct,persistence_mape_pct\n");
    for (i, l) in data.loads.iter().enumerate() {
        let f = |m: Option<crate::forecast::Mape>| m.map(|m| m.percent.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{}",
            l.transformer_id,
            f(forecasts.mape[i]),
            f(forecasts.persistence_mape[i])
        );
    }
    out
}
