//! Random small scheduling days whose every bound lands on a 0.5 kWh lattice, so
//! the exhaustive search and the LP solvers share the same optimum.

#![allow(dead_code)]

use eass_core::domain::{StorageUnit, TimeGrid, Transformer};
use eass_core::optimize::{EassInstance, UnitInput};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LATTICE_STEP: f64 = 0.5;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Whole-kWh energies converted to kW for `dt`-hour slots.
fn kw(energy: f64, dt: f64) -> f64 {
    energy / dt
}

pub fn random_unit(rng: &mut ChaCha8Rng, id: usize, t: usize) -> UnitInput {
    let dt = 24.0 / t as f64;
    let cap_e = rng.random_range(4..=12) as f64;
    let margin_e = rng.random_range(0..=1) as f64;
    let transformer = Transformer::new(format!("u{id}"), kw(cap_e, dt), kw(margin_e, dt)).unwrap();
    let b = 2.0 * rng.random_range(0..=4) as f64;
    let rate_e = rng.random_range(1..=3) as f64;
    let soc0 = rng.random_range(0..=b as u32) as f64;
    let storage = StorageUnit::new(b, kw(rate_e, dt), soc0).unwrap();
    let load = (0..t).map(|_| kw(rng.random_range(0..=12) as f64, dt)).collect();
    let sigma = (0..t).map(|_| kw(rng.random_range(0..=4) as f64, dt)).collect();
    UnitInput::new(transformer, storage, load).with_sigma(sigma)
}

/// Fleet of `n` units over a `t`-slot day with integer intensities.
pub fn random_instance(rng: &mut ChaCha8Rng, n: usize, t: usize, gamma: f64) -> EassInstance {
    let grid = TimeGrid::new(t, 1).unwrap();
    let units = (0..n).map(|i| random_unit(rng, i, t)).collect();
    let cost = (0..t).map(|_| rng.random_range(100..=1000) as f64).collect();
    EassInstance::new(grid, units, cost, gamma).unwrap()
}

/// Budgets checked against the oracle: whole, fractional and full.
pub fn gamma_choices(t: usize) -> Vec<f64> {
    let mut g = vec![0.0, 1.0, 2.5, t as f64];
    g.retain(|&x| x <= t as f64);
    g.dedup();
    g
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
