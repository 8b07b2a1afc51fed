//! Day-ahead storage scheduling as a linear program.
//!
//! [`build_eass`] and [`build_eass_ro`] emit the generic [`LinearProgram`] that
//! [`solve_lp`] handles. Because every unit's rows involve only its own
//! variables, [`solve`] can also route each unit through a dedicated dynamic
//! program, which is what long simulations use.

mod build;
mod dp;
mod instance;
mod lp;
mod oracle;
mod simplex;

use serde::{Deserialize, Serialize};

pub use build::{build, build_eass, build_eass_ro};
pub use instance::{inner_budget_allocation, EassInstance, Formulation, SlotBounds, UnitInput};
pub use lp::{Comparator, Constraint, LinearProgram, LpSolution, LpStatus};
pub use oracle::{brute_force_oracle, OracleSolution};
pub use simplex::solve_lp;

use crate::domain::{Schedule, UnitSchedule};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverBackend {
    /// General simplex on the full program.
    Simplex,
    /// Per-unit dynamic program.
    #[default]
    Dp,
}

impl std::str::FromStr for SolverBackend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simplex" => Ok(SolverBackend::Simplex),
            "dp" => Ok(SolverBackend::Dp),
            other => Err(Error::Config(format!("unknown solver backend {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    /// Emission change of the plan in kg. NaN when infeasible.
    pub objective_kg: f64,
    /// Charge and state of charge per unit; empty when infeasible.
    pub schedule: Schedule,
    /// Per unit, the slots whose transformer headroom was negative and where
    /// charging was therefore disallowed instead of making the day infeasible.
    pub relaxed_slots: Vec<Vec<usize>>,
    pub certificate: Option<String>,
}

impl Solution {
    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    fn infeasible(relaxed_slots: Vec<Vec<usize>>, why: String) -> Self {
        Solution {
            status: SolveStatus::Infeasible,
            objective_kg: f64::NAN,
            schedule: Schedule::new(Vec::new()),
            relaxed_slots,
            certificate: Some(why),
        }
    }
}

pub fn solve(instance: &EassInstance, form: Formulation, backend: SolverBackend) -> Result<Solution> {
    instance.validate()?;
    let bounds: Vec<SlotBounds> = (0..instance.units.len())
        .map(|i| instance.slot_bounds(i, form))
        .collect::<Result<_>>()?;
    let relaxed: Vec<Vec<usize>> = bounds.iter().map(|b| b.relaxed.clone()).collect();

    let charges: Vec<Vec<f64>> = match backend {
        SolverBackend::Simplex => {
            let lp = build(instance, form)?;
            let sol = solve_lp(&lp)?;
            match sol.status {
                LpStatus::Optimal => {}
                LpStatus::Infeasible => {
                    return Ok(Solution::infeasible(relaxed, sol.certificate.unwrap_or_default()));
                }
                LpStatus::Unbounded => {
                    return Err(Error::Numerical("scheduling program reported unbounded".into()));
                }
            }
            let t = instance.slots();
            sol.values.chunks(t.max(1)).take(instance.units.len()).map(<[f64]>::to_vec).collect()
        }
        SolverBackend::Dp => {
            let cost: Vec<f64> = instance.cost.iter().map(|c| c / 1000.0).collect();
            let mut out = Vec::with_capacity(instance.units.len());
            for (u, b) in instance.units.iter().zip(&bounds) {
                match dp::solve_unit(
                    &cost,
                    &b.lower,
                    &b.upper,
                    u.storage.capacity_kwh(),
                    u.storage.initial_soc_kwh(),
                    u.boundary_soc_kwh,
                ) {
                    Some(x) => out.push(x),
                    None => {
                        return Ok(Solution::infeasible(
                            relaxed,
                            format!(
                                "end-of-day level {} of {} is unreachable",
                                u.boundary_soc_kwh, u.transformer.id
                            ),
                        ));
                    }
                }
            }
            out
        }
    };

    let units: Vec<UnitSchedule> = instance
        .units
        .iter()
        .zip(charges)
        .map(|(u, x)| UnitSchedule::from_charges(u.storage.initial_soc_kwh(), x))
        .collect();
    let schedule = Schedule::new(units);
    let objective_kg = schedule
        .units
        .iter()
        .map(|u| crate::domain::charge_emission_delta(u.charge(), &instance.cost))
        .sum();
    Ok(Solution {
        status: SolveStatus::Optimal,
        objective_kg,
        schedule,
        relaxed_slots: relaxed,
        certificate: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{StorageUnit, TimeGrid, Transformer};

    /// B = 2, one kWh per slot, half full, loads far below a large transformer.
    fn two_slot(cost: [f64; 2]) -> EassInstance {
        let grid = TimeGrid::new(2, 1).unwrap();
        // Twelve-hour slots: a 1/12 kW rate moves 1 kWh per slot.
        let st = StorageUnit::new(2.0, 1.0 / 12.0, 1.0).unwrap();
        let tr = Transformer::new("a", 1000.0, 10.0).unwrap();
        let unit = UnitInput::new(tr, st, vec![50.0, 50.0]);
        EassInstance::new(grid, vec![unit], cost.to_vec(), 0.0).unwrap()
    }

    #[test]
    fn two_slot_example_both_backends() {
        let inst = two_slot([10.0, 5.0]);
        for backend in [SolverBackend::Simplex, SolverBackend::Dp] {
            let sol = solve(&inst, Formulation::Nominal, backend).unwrap();
            assert!(sol.is_optimal());
            assert!((sol.objective_kg + 5.0 / 1000.0).abs() < 1e-12, "{backend:?}");
            let x = sol.schedule.units[0].charge();
            assert!((x[0] + 1.0).abs() < 1e-9 && (x[1] - 1.0).abs() < 1e-9);
            assert_eq!(sol.schedule.units[0].soc().len(), 3);
        }
    }

    #[test]
    fn oracle_agrees_on_two_slot_example() {
        let inst = two_slot([10.0, 5.0]);
        let o = brute_force_oracle(&inst, Formulation::Nominal, 0.5).unwrap().unwrap();
        assert!((o.objective_kg + 0.005).abs() < 1e-9);
        assert_eq!(o.charges, vec![vec![-1.0, 1.0]]);
    }

    #[test]
    fn constant_cost_gives_zero() {
        let inst = two_slot([7.0, 7.0]);
        for backend in [SolverBackend::Simplex, SolverBackend::Dp] {
            let sol = solve(&inst, Formulation::Nominal, backend).unwrap();
            assert_eq!(sol.objective_kg, 0.0);
        }
    }

    #[test]
    fn zero_storage_is_idle() {
        let mut inst = two_slot([10.0, 5.0]);
        inst.units[0].storage = StorageUnit::none();
        inst.units[0].boundary_soc_kwh = 0.0;
        for backend in [SolverBackend::Simplex, SolverBackend::Dp] {
            let sol = solve(&inst, Formulation::Nominal, backend).unwrap();
            assert!(sol.schedule.units[0].charge().iter().all(|x| *x == 0.0));
            assert_eq!(sol.objective_kg, 0.0);
        }
        let o = brute_force_oracle(&inst, Formulation::Nominal, 0.5).unwrap().unwrap();
        assert_eq!(o.objective_kg, 0.0);
    }

    #[test]
    fn robust_rows_match_nominal_at_zero_budget() {
        let mut inst = two_slot([10.0, 5.0]);
        inst.units[0].sigma_kw = vec![3.0, 49.99];
        assert_eq!(build_eass(&inst).unwrap(), build_eass_ro(&inst).unwrap());
        inst.gamma = 1.0;
        assert_ne!(build_eass(&inst).unwrap(), build_eass_ro(&inst).unwrap());
        inst.units[0].sigma_kw = vec![0.0, 0.0];
        assert_eq!(build_eass(&inst).unwrap(), build_eass_ro(&inst).unwrap());
    }

    #[test]
    fn peak_deviation_removes_discharge() {
        let grid = TimeGrid::new(4, 1).unwrap();
        let st = StorageUnit::half_full(100.0, 50.0).unwrap();
        let tr = Transformer::new("a", 1000.0, 10.0).unwrap();
        let load = vec![20.0, 30.0, 40.0, 25.0];
        let sigma = vec![1.0, 2.0, 40.0, 3.0];
        let unit = UnitInput::new(tr, st, load).with_sigma(sigma);
        let inst = EassInstance::new(grid, vec![unit], vec![1.0; 4], 1.0).unwrap();
        let lp = build_eass_ro(&inst).unwrap();
        assert_eq!(lp.lower[2], 0.0);
        assert!(lp.lower[1] < 0.0);
    }

    #[test]
    fn oracle_rejects_large_instances() {
        let grid = TimeGrid::new(12, 1).unwrap();
        let st = StorageUnit::half_full(2.0, 1.0).unwrap();
        let tr = Transformer::new("a", 100.0, 1.0).unwrap();
        let unit = UnitInput::new(tr, st, vec![1.0; 12]);
        let inst = EassInstance::new(grid, vec![unit], vec![1.0; 12], 0.0).unwrap();
        assert!(matches!(
            brute_force_oracle(&inst, Formulation::Nominal, 1.0),
            Err(Error::TooLarge(_))
        ));
    }

    #[test]
    fn backend_names_parse() {
        assert_eq!("dp".parse::<SolverBackend>().unwrap(), SolverBackend::Dp);
        assert_eq!("simplex".parse::<SolverBackend>().unwrap(), SolverBackend::Simplex);
        assert!("glpk".parse::<SolverBackend>().is_err());
    }
}
