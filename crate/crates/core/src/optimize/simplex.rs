//! Dense bounded-variable primal simplex.
//!
//! Every row `a'x cmp b` becomes a logical variable `r = a'x` with bounds taken
//! from the comparator; rows with identical coefficient vectors share one
//! logical. The tableau stores `B^-1 A` for the augmented matrix `[A | -I]`.

use std::collections::HashMap;

use super::lp::{Comparator, LinearProgram, LpSolution, LpStatus};
use crate::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const COST_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-7;
const DEGENERATE_RUN: usize = 25;
const REFRESH_EVERY: usize = 64;

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    let n = lp.num_vars();

    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut row_lo: Vec<f64> = Vec::new();
    let mut row_hi: Vec<f64> = Vec::new();
    let mut row_names: Vec<Vec<&str>> = Vec::new();
    let mut index: HashMap<Vec<(usize, u64)>, usize> = HashMap::new();

    for c in &lp.constraints {
        let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(c.coeffs.len());
        let mut sorted = c.coeffs.clone();
        sorted.sort_by_key(|&(j, _)| j);
        for (j, a) in sorted {
            match coeffs.last_mut() {
                Some((k, acc)) if *k == j => *acc += a,
                _ => coeffs.push((j, a)),
            }
        }
        coeffs.retain(|&(_, a)| a != 0.0);
        let (lo, hi) = match c.cmp {
            Comparator::Le => (f64::NEG_INFINITY, c.rhs),
            Comparator::Ge => (c.rhs, f64::INFINITY),
            Comparator::Eq => (c.rhs, c.rhs),
        };
        if coeffs.is_empty() {
            if lo > FEAS_TOL || hi < -FEAS_TOL {
                return Ok(infeasible(n, format!("row {} reads 0 {} {}", c.name, c.cmp.symbol(), c.rhs)));
            }
            continue;
        }
        let key: Vec<(usize, u64)> = coeffs.iter().map(|&(j, a)| (j, a.to_bits())).collect();
        match index.get(&key) {
            Some(&k) => {
                row_lo[k] = row_lo[k].max(lo);
                row_hi[k] = row_hi[k].min(hi);
                row_names[k].push(&c.name);
            }
            None => {
                index.insert(key, rows.len());
                rows.push(coeffs);
                row_lo.push(lo);
                row_hi.push(hi);
                row_names.push(vec![&c.name]);
            }
        }
    }
    for k in 0..rows.len() {
        if row_lo[k] > row_hi[k] + FEAS_TOL {
            return Ok(infeasible(
                n,
                format!("rows {} require {} <= a'x <= {}", row_names[k].join(","), row_lo[k], row_hi[k]),
            ));
        }
        if row_lo[k] > row_hi[k] {
            row_hi[k] = row_lo[k];
        }
    }
    for j in 0..n {
        if lp.lower[j] > lp.upper[j] + FEAS_TOL {
            return Ok(infeasible(
                n,
                format!("variable {} has bounds [{}, {}]", lp.var_names[j], lp.lower[j], lp.upper[j]),
            ));
        }
    }

    let mut tab = Tableau::new(lp, &rows, &row_lo, &row_hi);
    let mut iterations = 0;

    if !tab.artificials.is_empty() {
        let mut cost = vec![0.0; tab.ncols];
        for &a in &tab.artificials {
            cost[a] = 1.0;
        }
        match tab.run(&cost, &mut iterations)? {
            Outcome::Optimal => {}
            Outcome::Unbounded => return Err(Error::Numerical("phase one reported unbounded".into())),
        }
        tab.refresh_basic_values();
        let residual: f64 = tab.artificials.iter().map(|&a| tab.value[a]).sum();
        if residual > FEAS_TOL {
            let mut offending: Vec<&str> = Vec::new();
            for &a in &tab.artificials {
                if tab.value[a] > FEAS_TOL {
                    offending.extend(row_names[tab.artificial_row[&a]].iter().copied());
                }
            }
            let mut sol = infeasible(n, format!(
                "phase one residual {residual:.3e} on rows {}",
                offending.join(",")
            ));
            sol.iterations = iterations;
            return Ok(sol);
        }
        for &a in &tab.artificials.clone() {
            tab.upper[a] = 0.0;
            if tab.pos[a].is_none() {
                tab.value[a] = 0.0;
            }
        }
    }

    let mut cost = vec![0.0; tab.ncols];
    cost[..n].copy_from_slice(&lp.objective);
    let outcome = tab.run(&cost, &mut iterations)?;
    tab.refresh_basic_values();
    let mut values: Vec<f64> = tab.value[..n].to_vec();
    for (j, v) in values.iter_mut().enumerate() {
        *v = v.clamp(lp.lower[j], lp.upper[j]);
    }
    let status = match outcome {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
    };
    if status == LpStatus::Optimal {
        let worst = lp.max_violation(&values);
        let scale = 1.0 + lp.constraints.iter().map(|c| c.rhs.abs()).fold(0.0, f64::max);
        if worst > 1e-6 * scale {
            return Err(Error::Numerical(format!("simplex solution violates constraints by {worst:.3e}")));
        }
    }
    Ok(LpSolution {
        status,
        objective: lp.objective_value(&values),
        values,
        certificate: None,
        iterations,
    })
}

fn infeasible(n: usize, why: String) -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        objective: f64::NAN,
        values: vec![f64::NAN; n],
        certificate: Some(why),
        iterations: 0,
    }
}

enum Outcome {
    Optimal,
    Unbounded,
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// Row-major `m x ncols`.
    a: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    value: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<Option<usize>>,
    artificials: Vec<usize>,
    artificial_row: HashMap<usize, usize>,
}

impl Tableau {
    fn new(lp: &LinearProgram, rows: &[Vec<(usize, f64)>], row_lo: &[f64], row_hi: &[f64]) -> Self {
        let n = lp.num_vars();
        let m = rows.len();

        let mut value = Vec::with_capacity(n + 2 * m);
        for j in 0..n {
            let (l, u) = (lp.lower[j], lp.upper[j].max(lp.lower[j]));
            value.push(if l <= 0.0 && 0.0 <= u {
                0.0
            } else if l > 0.0 {
                l
            } else {
                u
            });
        }
        let activity: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().map(|&(j, a)| a * value[j]).sum())
            .collect();

        // Rows whose starting activity is out of range get an artificial.
        let mut needs: Vec<Option<(f64, f64)>> = vec![None; m];
        for k in 0..m {
            let r = activity[k];
            if r < row_lo[k] - FEAS_TOL || r > row_hi[k] + FEAS_TOL {
                let target = if r < row_lo[k] { row_lo[k] } else { row_hi[k] };
                let sign = if target > r { 1.0 } else { -1.0 };
                needs[k] = Some((target, sign));
            }
        }
        let n_art = needs.iter().filter(|x| x.is_some()).count();
        let ncols = n + m + n_art;

        let mut lower = Vec::with_capacity(ncols);
        let mut upper = Vec::with_capacity(ncols);
        lower.extend_from_slice(&lp.lower);
        upper.extend(lp.upper.iter().zip(&lp.lower).map(|(u, l)| u.max(*l)));
        lower.extend_from_slice(row_lo);
        upper.extend_from_slice(row_hi);
        value.extend_from_slice(&activity);
        let mut a = vec![0.0; m * ncols];
        let mut basis = vec![0; m];
        let mut pos = vec![None; ncols];
        let mut artificials = Vec::with_capacity(n_art);
        let mut artificial_row = HashMap::new();
        let mut next_art = n + m;

        for k in 0..m {
            let row = &mut a[k * ncols..(k + 1) * ncols];
            match needs[k] {
                None => {
                    for &(j, coef) in &rows[k] {
                        row[j] = -coef;
                    }
                    row[n + k] = 1.0;
                    basis[k] = n + k;
                    pos[n + k] = Some(k);
                }
                Some((target, sign)) => {
                    let art = next_art;
                    next_art += 1;
                    for &(j, coef) in &rows[k] {
                        row[j] = coef / sign;
                    }
                    row[n + k] = -1.0 / sign;
                    row[art] = 1.0;
                    basis[k] = art;
                    pos[art] = Some(k);
                    value[n + k] = target;
                    artificials.push(art);
                    artificial_row.insert(art, k);
                }
            }
        }
        lower.resize(ncols, 0.0);
        upper.resize(ncols, f64::INFINITY);
        value.resize(ncols, 0.0);

        let mut tab = Self {
            m,
            ncols,
            a,
            lower,
            upper,
            value,
            basis,
            pos,
            artificials,
            artificial_row,
        };
        tab.refresh_basic_values();
        tab
    }

    fn refresh_basic_values(&mut self) {
        for k in 0..self.m {
            let row = &self.a[k * self.ncols..(k + 1) * self.ncols];
            let mut v = 0.0;
            for j in 0..self.ncols {
                if self.pos[j].is_none() && row[j] != 0.0 {
                    v -= row[j] * self.value[j];
                }
            }
            self.value[self.basis[k]] = v;
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for k in 0..self.m {
            let cb = cost[self.basis[k]];
            if cb != 0.0 {
                let row = &self.a[k * self.ncols..(k + 1) * self.ncols];
                for j in 0..self.ncols {
                    d[j] -= cb * row[j];
                }
            }
        }
        for k in 0..self.m {
            d[self.basis[k]] = 0.0;
        }
        d
    }

    fn run(&mut self, cost: &[f64], iterations: &mut usize) -> Result<Outcome> {
        let mut d = self.reduced_costs(cost);
        let limit = 50 * (self.m + self.ncols) + 1000;
        let mut degenerate = 0usize;
        let mut since_refresh = 0usize;
        loop {
            if *iterations > limit {
                return Err(Error::Numerical(format!("simplex exceeded {limit} iterations")));
            }
            let bland = degenerate >= DEGENERATE_RUN;
            let Some((q, dir)) = self.choose_entering(&d, bland) else {
                return Ok(Outcome::Optimal);
            };
            *iterations += 1;

            // Ratio test along direction `dir` for variable q. A nonbasic variable may
            // start strictly inside its bounds, so its own room is measured from its value.
            let mut theta = if dir > 0.0 {
                self.upper[q] - self.value[q]
            } else {
                self.value[q] - self.lower[q]
            };
            let mut leave: Option<(usize, f64)> = None;
            for k in 0..self.m {
                let alpha = self.a[k * self.ncols + q];
                if alpha.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[k];
                // x_b changes by -alpha * dir * step.
                let rate = -alpha * dir;
                let (room, bound) = if rate > 0.0 {
                    (self.upper[b] - self.value[b], self.upper[b])
                } else {
                    (self.value[b] - self.lower[b], self.lower[b])
                };
                if !room.is_finite() {
                    continue;
                }
                let ratio = room.max(0.0) / rate.abs();
                let tie = 1e-12 * (1.0 + ratio.abs());
                let better = match leave {
                    None => ratio < theta - tie,
                    Some((kb, _)) => ratio < theta - tie || (ratio <= theta + tie && self.basis[k] < self.basis[kb]),
                };
                if better {
                    theta = ratio;
                    leave = Some((k, bound));
                }
            }
            if !theta.is_finite() {
                return Ok(Outcome::Unbounded);
            }
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }

            let step = dir * theta;
            if step != 0.0 {
                self.value[q] += step;
                for k in 0..self.m {
                    let alpha = self.a[k * self.ncols + q];
                    if alpha != 0.0 {
                        self.value[self.basis[k]] -= alpha * step;
                    }
                }
            }
            match leave {
                None => {
                    // Bound flip.
                    self.value[q] = if dir > 0.0 { self.upper[q] } else { self.lower[q] };
                }
                Some((r, bound)) => {
                    let out = self.basis[r];
                    self.pivot(r, q, &mut d);
                    self.value[out] = bound;
                    since_refresh += 1;
                    if since_refresh >= REFRESH_EVERY {
                        since_refresh = 0;
                        self.refresh_basic_values();
                        d = self.reduced_costs(cost);
                    }
                }
            }
        }
    }

    fn choose_entering(&self, d: &[f64], bland: bool) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.ncols {
            if self.pos[j].is_some() || self.upper[j] - self.lower[j] <= 0.0 {
                continue;
            }
            let dj = d[j];
            let dir = if dj < -COST_TOL && self.value[j] < self.upper[j] - 1e-12 {
                1.0
            } else if dj > COST_TOL && self.value[j] > self.lower[j] + 1e-12 {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if best.is_none_or(|(_, _, mag)| dj.abs() > mag) {
                best = Some((j, dir, dj.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn pivot(&mut self, r: usize, q: usize, d: &mut [f64]) {
        let nc = self.ncols;
        let piv = self.a[r * nc + q];
        {
            let row = &mut self.a[r * nc..(r + 1) * nc];
            for v in row.iter_mut() {
                *v /= piv;
            }
        }
        let pivot_row: Vec<f64> = self.a[r * nc..(r + 1) * nc].to_vec();
        for k in 0..self.m {
            if k == r {
                continue;
            }
            let f = self.a[k * nc + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.a[k * nc..(k + 1) * nc];
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if *p != 0.0 {
                    *v -= f * p;
                }
            }
            row[q] = 0.0;
        }
        let f = d[q];
        if f != 0.0 {
            for (v, p) in d.iter_mut().zip(&pivot_row) {
                *v -= f * p;
            }
        }
        d[q] = 0.0;
        let out = self.basis[r];
        self.pos[out] = None;
        self.pos[q] = Some(r);
        self.basis[r] = q;
    }
}
