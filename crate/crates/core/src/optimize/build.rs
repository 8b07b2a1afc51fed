//! Compiles an instance into the linear program over charge decisions.
//!
//! The state of charge is not a variable: `s(t) = s(0) + sum_{u<t} x(u)`, so the
//! capacity limits become two cumulative-sum rows per slot boundary and the
//! end-of-day level one equality row per unit.

use super::instance::{EassInstance, Formulation};
use super::lp::{Comparator, LinearProgram};
use crate::Result;

pub fn build_eass(instance: &EassInstance) -> Result<LinearProgram> {
    build(instance, Formulation::Nominal)
}

pub fn build_eass_ro(instance: &EassInstance) -> Result<LinearProgram> {
    build(instance, Formulation::Robust)
}

pub fn build(instance: &EassInstance, form: Formulation) -> Result<LinearProgram> {
    instance.validate()?;
    let t_len = instance.slots();
    let mut lp = LinearProgram::new();
    for (i, unit) in instance.units.iter().enumerate() {
        let bounds = instance.slot_bounds(i, form)?;
        let id = &unit.transformer.id;
        let first = lp.num_vars();
        for t in 0..t_len {
            lp.add_var(format!("x[{id}][{t}]"), bounds.lower[t], bounds.upper[t], instance.cost[t] / 1000.0);
        }
        let s0 = unit.storage.initial_soc_kwh();
        let cap = unit.storage.capacity_kwh();
        for t in 1..t_len {
            let prefix: Vec<(usize, f64)> = (first..first + t).map(|j| (j, 1.0)).collect();
            lp.add_constraint(format!("soc_max[{id}][{t}]"), prefix.clone(), Comparator::Le, cap - s0);
            lp.add_constraint(format!("soc_min[{id}][{t}]"), prefix, Comparator::Ge, -s0);
        }
        let all: Vec<(usize, f64)> = (first..first + t_len).map(|j| (j, 1.0)).collect();
        lp.add_constraint(format!("soc_end[{id}]"), all, Comparator::Eq, unit.boundary_soc_kwh - s0);
    }
    Ok(lp)
}
