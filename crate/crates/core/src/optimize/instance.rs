use serde::{Deserialize, Serialize};

use crate::domain::{StorageUnit, TimeGrid, Transformer};
use crate::{Error, Result};

/// One transformer with its storage unit and the load picture for the day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitInput {
    pub transformer: Transformer,
    /// Storage with its start-of-day state of charge.
    pub storage: StorageUnit,
    pub load_kw: Vec<f64>,
    pub sigma_kw: Vec<f64>,
    /// Required end-of-day state of charge.
    pub boundary_soc_kwh: f64,
}

impl UnitInput {
    /// Unit with zero deviations that must end the day at half capacity.
    pub fn new(transformer: Transformer, storage: StorageUnit, load_kw: Vec<f64>) -> Self {
        let sigma_kw = vec![0.0; load_kw.len()];
        let boundary_soc_kwh = storage.capacity_kwh() / 2.0;
        UnitInput {
            transformer,
            storage,
            load_kw,
            sigma_kw,
            boundary_soc_kwh,
        }
    }

    pub fn with_sigma(mut self, sigma_kw: Vec<f64>) -> Self {
        self.sigma_kw = sigma_kw;
        self
    }

    pub fn with_boundary(mut self, boundary_soc_kwh: f64) -> Self {
        self.boundary_soc_kwh = boundary_soc_kwh;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formulation {
    /// Forecast loads taken at face value.
    Nominal,
    /// Bounds tightened by the budgeted worst-case deviation.
    Robust,
}

/// One day of storage scheduling for a fleet of transformers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EassInstance {
    pub grid: TimeGrid,
    pub units: Vec<UnitInput>,
    /// Marginal emission intensity per slot, kg/MWh.
    pub cost: Vec<f64>,
    pub gamma: f64,
}

/// Per-slot box on `x_i(t)` in kWh after folding in loads, headroom and rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Worst-case deviation used for each slot (zero for the nominal form).
    pub beta: Vec<f64>,
    /// Slots whose headroom is negative, where charging is simply forbidden.
    pub relaxed: Vec<usize>,
}

impl EassInstance {
    pub fn new(grid: TimeGrid, units: Vec<UnitInput>, cost: Vec<f64>, gamma: f64) -> Result<Self> {
        let inst = EassInstance {
            grid,
            units,
            cost,
            gamma,
        };
        inst.validate()?;
        Ok(inst)
    }

    pub fn slots(&self) -> usize {
        self.grid.slots_per_day()
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.horizon_days() != 1 {
            return Err(Error::Config(format!(
                "an instance covers one day, got {} days",
                self.grid.horizon_days()
            )));
        }
        let t = self.slots();
        if self.cost.len() != t {
            return Err(Error::LengthMismatch {
                what: "emission cost series",
                expected: t,
                actual: self.cost.len(),
            });
        }
        if self.cost.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("emission cost must be finite".into()));
        }
        if !(self.gamma.is_finite() && (0.0..=t as f64).contains(&self.gamma)) {
            return Err(Error::OutOfRange(format!("budget {} outside [0, {t}]", self.gamma)));
        }
        for u in &self.units {
            if u.load_kw.len() != t {
                return Err(Error::LengthMismatch {
                    what: "forecast load",
                    expected: t,
                    actual: u.load_kw.len(),
                });
            }
            if u.sigma_kw.len() != t {
                return Err(Error::LengthMismatch {
                    what: "load deviation",
                    expected: t,
                    actual: u.sigma_kw.len(),
                });
            }
            if u.load_kw.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                return Err(Error::Config(format!("loads of {} must be finite and nonnegative", u.transformer.id)));
            }
            if u.sigma_kw.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                return Err(Error::Config(format!("deviations of {} must be finite and nonnegative", u.transformer.id)));
            }
            let cap = u.storage.capacity_kwh();
            if !(u.boundary_soc_kwh.is_finite() && (0.0..=cap).contains(&u.boundary_soc_kwh)) {
                return Err(Error::Config(format!(
                    "boundary level {} of {} outside [0, {cap}]",
                    u.boundary_soc_kwh, u.transformer.id
                )));
            }
        }
        Ok(())
    }

    pub fn slot_bounds(&self, unit: usize, form: Formulation) -> Result<SlotBounds> {
        let u = &self.units[unit];
        let beta = match form {
            Formulation::Nominal => vec![0.0; self.slots()],
            Formulation::Robust => {
                let z = inner_budget_allocation(&u.sigma_kw, self.gamma)?;
                u.sigma_kw.iter().zip(&z).map(|(s, z)| s * z).collect()
            }
        };
        Ok(box_bounds(&self.grid, &u.transformer, &u.storage, &u.load_kw, &beta))
    }

    /// Interval of end-of-day levels reachable from the start level under `form`.
    pub fn reachable_final_soc(&self, unit: usize, form: Formulation) -> Result<(f64, f64)> {
        let b = self.slot_bounds(unit, form)?;
        let u = &self.units[unit];
        let cap = u.storage.capacity_kwh();
        let (mut lo, mut hi) = (u.storage.initial_soc_kwh(), u.storage.initial_soc_kwh());
        for (l, h) in b.lower.iter().zip(&b.upper) {
            lo = (lo + l).max(0.0);
            hi = (hi + h).min(cap);
        }
        Ok((lo, hi))
    }

    /// Moves every boundary level into its reachable interval. Returns which units moved.
    pub fn clamp_boundaries_to_reachable(&mut self, form: Formulation) -> Result<Vec<bool>> {
        let mut moved = Vec::with_capacity(self.units.len());
        for i in 0..self.units.len() {
            let (lo, hi) = self.reachable_final_soc(i, form)?;
            let target = self.units[i].boundary_soc_kwh;
            let clamped = target.clamp(lo, hi);
            moved.push(clamped != target);
            self.units[i].boundary_soc_kwh = clamped;
        }
        Ok(moved)
    }
}

pub(crate) fn box_bounds(
    grid: &TimeGrid,
    transformer: &Transformer,
    storage: &StorageUnit,
    load_kw: &[f64],
    beta: &[f64],
) -> SlotBounds {
    let dt = grid.slot_hours();
    let rate = storage.slot_rate_kwh(grid);
    let cap = transformer.capacity_kw();
    let eta = transformer.overload_margin_kw();
    let t = load_kw.len();
    let mut lower = Vec::with_capacity(t);
    let mut upper = Vec::with_capacity(t);
    let mut relaxed = Vec::new();
    for k in 0..t {
        let discharge = ((load_kw[k] - beta[k]).max(0.0) * dt).min(rate);
        lower.push(-discharge);
        let headroom = (cap - load_kw[k] - beta[k] - eta) * dt;
        if headroom < 0.0 {
            relaxed.push(k);
            upper.push(0.0);
        } else {
            upper.push(headroom.min(rate));
        }
    }
    SlotBounds {
        lower,
        upper,
        beta: beta.to_vec(),
        relaxed,
    }
}

/// Worst-case allocation of a deviation budget: `max sigma'z` over
/// `sum z <= gamma, 0 <= z <= 1`.
///
/// Slots are taken in decreasing `sigma`, ties by slot index.
pub fn inner_budget_allocation(sigma: &[f64], gamma: f64) -> Result<Vec<f64>> {
    let t = sigma.len();
    if !(gamma.is_finite() && (0.0..=t as f64).contains(&gamma)) {
        return Err(Error::OutOfRange(format!("budget {gamma} outside [0, {t}]")));
    }
    if sigma.iter().any(|s| s.is_nan()) {
        return Err(Error::Config("deviation series contains NaN".into()));
    }
    let mut order: Vec<usize> = (0..t).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));
    let whole = gamma.floor() as usize;
    let frac = gamma - gamma.floor();
    let mut z = vec![0.0; t];
    for (rank, &k) in order.iter().enumerate() {
        if rank < whole {
            z[k] = 1.0;
        } else if rank == whole {
            z[k] = frac;
            break;
        }
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn allocation_examples() {
        assert_eq!(inner_budget_allocation(&[3.0, 1.0, 2.0], 0.0).unwrap(), vec![0.0; 3]);
        assert_eq!(inner_budget_allocation(&[3.0, 1.0, 2.0], 3.0).unwrap(), vec![1.0; 3]);
        let z = inner_budget_allocation(&[3.0, 1.0, 2.0], 1.5).unwrap();
        assert_eq!(z, vec![1.0, 0.0, 0.5]);
        let beta: Vec<f64> = [3.0, 1.0, 2.0].iter().zip(&z).map(|(s, z)| s * z).collect();
        assert_eq!(beta, vec![3.0, 0.0, 1.0]);
        assert_eq!(inner_budget_allocation(&[1.0, 1.0, 1.0], 1.0).unwrap(), vec![1.0, 0.0, 0.0]);
        assert!(matches!(inner_budget_allocation(&[1.0], 1.5), Err(Error::OutOfRange(_))));
        assert!(inner_budget_allocation(&[1.0], -0.1).is_err());
    }

    #[test]
    fn overloaded_slot_forbids_charging() {
        let grid = TimeGrid::new(2, 1).unwrap();
        let tr = Transformer::new("t", 10.0, 1.0).unwrap();
        let st = StorageUnit::half_full(10.0, 20.0).unwrap();
        let b = box_bounds(&grid, &tr, &st, &[12.0, 4.0], &[0.0, 0.0]);
        assert_eq!(b.relaxed, vec![0]);
        assert_eq!(b.upper[0], 0.0);
        // Twelve-hour slots: rate 240 kWh, discharge capped by the load.
        assert_eq!(b.lower[0], -144.0);
        assert_eq!(b.upper[1], 60.0);
        assert_eq!(b.lower[1], -48.0);
    }
}
