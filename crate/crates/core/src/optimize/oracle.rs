//! Exhaustive search over a charge lattice, for checking the solvers on tiny days.
//!
//! Bounds are recomputed here from the raw instance data rather than shared
//! with the LP builder, so a mistake in one does not hide in the other.

use super::instance::{EassInstance, Formulation};
use crate::{Error, Result};

const MAX_VARIABLES: usize = 8;
const MAX_LEVELS: usize = 401;
const TOL: f64 = 1e-7;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleSolution {
    /// `charges[i][t]` in kWh.
    pub charges: Vec<Vec<f64>>,
    pub objective_kg: f64,
}

/// Best schedule with every `x_i(t)` a multiple of `grid_step`, or `None` when no
/// lattice schedule is feasible.
///
/// The objective separates by unit, so each unit's lattice is searched on its own.
pub fn brute_force_oracle(
    instance: &EassInstance,
    form: Formulation,
    grid_step: f64,
) -> Result<Option<OracleSolution>> {
    instance.validate()?;
    let t_len = instance.slots();
    if instance.units.len() * t_len > MAX_VARIABLES {
        return Err(Error::TooLarge(format!(
            "{} variables exceed the oracle limit of {MAX_VARIABLES}",
            instance.units.len() * t_len
        )));
    }
    if !(grid_step.is_finite() && grid_step > 0.0) {
        return Err(Error::Config(format!("lattice step must be positive, got {grid_step}")));
    }
    let dt = instance.grid.slot_minutes() as f64 / 60.0;
    let mut charges = Vec::with_capacity(instance.units.len());
    let mut total = 0.0;
    for unit in &instance.units {
        let rate = unit.storage.rate_limit_kw() * dt;
        let cap = unit.storage.capacity_kwh();
        let rate_steps = multiple_of(rate, grid_step, "rate per slot")?;
        multiple_of(cap, grid_step, "storage capacity")?;
        if 2 * rate_steps + 1 > MAX_LEVELS {
            return Err(Error::TooLarge(format!("{} lattice levels per slot", 2 * rate_steps + 1)));
        }
        let beta = match form {
            Formulation::Nominal => vec![0.0; t_len],
            Formulation::Robust => greedy_beta(&unit.sigma_kw, instance.gamma),
        };
        let levels: Vec<Vec<f64>> = (0..t_len)
            .map(|t| {
                let l = unit.load_kw[t];
                let headroom = (unit.transformer.capacity_kw() - l - beta[t] - unit.transformer.overload_margin_kw()) * dt;
                let discharge_cap = (l - beta[t]).max(0.0) * dt;
                (-(rate_steps as i64)..=rate_steps as i64)
                    .map(|k| k as f64 * grid_step)
                    .filter(|&x| -x <= discharge_cap + TOL && x <= headroom.max(0.0) + TOL)
                    .collect()
            })
            .collect();

        let mut search = Search {
            cost: &instance.cost,
            levels: &levels,
            cap,
            target: unit.boundary_soc_kwh,
            current: vec![0.0; t_len],
            best: None,
        };
        search.descend(0, unit.storage.initial_soc_kwh(), 0.0);
        match search.best {
            None => return Ok(None),
            Some((obj, x)) => {
                total += obj;
                charges.push(x);
            }
        }
    }
    Ok(Some(OracleSolution {
        charges,
        objective_kg: total,
    }))
}

fn multiple_of(value: f64, step: f64, what: &str) -> Result<usize> {
    let ratio = value / step;
    if (ratio - ratio.round()).abs() > 1e-9 * (1.0 + ratio.abs()) {
        return Err(Error::Config(format!("lattice step {step} does not divide the {what} {value}")));
    }
    Ok(ratio.round() as usize)
}

/// Deviation allocation by repeatedly picking the largest remaining deviation.
fn greedy_beta(sigma: &[f64], gamma: f64) -> Vec<f64> {
    let mut beta = vec![0.0; sigma.len()];
    let mut taken = vec![false; sigma.len()];
    let mut budget = gamma;
    while budget > 0.0 {
        let mut pick: Option<usize> = None;
        for (t, &s) in sigma.iter().enumerate() {
            if !taken[t] && pick.is_none_or(|p| s > sigma[p]) {
                pick = Some(t);
            }
        }
        let Some(t) = pick else { break };
        let share = budget.min(1.0);
        beta[t] = sigma[t] * share;
        taken[t] = true;
        budget -= share;
    }
    beta
}

struct Search<'a> {
    cost: &'a [f64],
    levels: &'a [Vec<f64>],
    cap: f64,
    target: f64,
    current: Vec<f64>,
    best: Option<(f64, Vec<f64>)>,
}

impl Search<'_> {
    fn descend(&mut self, t: usize, soc: f64, partial: f64) {
        if t == self.levels.len() {
            if (soc - self.target).abs() <= TOL && self.best.as_ref().is_none_or(|(b, _)| partial < *b - 1e-15) {
                self.best = Some((partial, self.current.clone()));
            }
            return;
        }
        for &x in &self.levels[t] {
            let next = soc + x;
            if next < -TOL || next > self.cap + TOL {
                continue;
            }
            self.current[t] = x;
            self.descend(t + 1, next, partial + self.cost[t] * x / 1000.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn greedy_beta_matches_sorted_rule() {
        assert_eq!(greedy_beta(&[3.0, 1.0, 2.0], 1.5), vec![3.0, 0.0, 1.0]);
        assert_eq!(greedy_beta(&[2.0, 2.0], 1.0), vec![2.0, 0.0]);
        assert_eq!(greedy_beta(&[2.0, 5.0], 0.0), vec![0.0, 0.0]);
    }

    #[test]
    fn step_must_divide() {
        assert!(multiple_of(1.0, 0.5, "x").is_ok());
        assert!(multiple_of(1.0, 0.3, "x").is_err());
    }
}
