//! Linear program intermediate representation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    Le,
    Ge,
    Eq,
}

impl Comparator {
    pub fn symbol(self) -> &'static str {
        match self {
            Comparator::Le => "<=",
            Comparator::Ge => ">=",
            Comparator::Eq => "=",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    /// Sparse `(variable, coefficient)` pairs.
    pub coeffs: Vec<(usize, f64)>,
    pub cmp: Comparator,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|(j, a)| a * values[*j]).sum()
    }

    /// Amount by which `values` breaks this row (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.activity(values);
        match self.cmp {
            Comparator::Le => (lhs - self.rhs).max(0.0),
            Comparator::Ge => (self.rhs - lhs).max(0.0),
            Comparator::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// `min c'x` subject to row constraints and per-variable bounds.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub var_names: Vec<String>,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, lower: f64, upper: f64, cost: f64) -> usize {
        self.var_names.push(name.into());
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.push(cost);
        self.var_names.len() - 1
    }

    pub fn add_constraint(&mut self, name: impl Into<String>, coeffs: Vec<(usize, f64)>, cmp: Comparator, rhs: f64) {
        self.constraints.push(Constraint {
            name: name.into(),
            coeffs,
            cmp,
            rhs,
        });
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.var_names.len();
        if self.objective.len() != n || self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Config("LP variable arrays have inconsistent lengths".into()));
        }
        for j in 0..n {
            if !self.objective[j].is_finite() {
                return Err(Error::Config(format!("objective coefficient of {} is not finite", self.var_names[j])));
            }
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(Error::Config(format!("invalid bounds on {}", self.var_names[j])));
            }
        }
        for row in &self.constraints {
            if !row.rhs.is_finite() {
                return Err(Error::Config(format!("row {} has a non-finite rhs", row.name)));
            }
            for &(j, a) in &row.coeffs {
                if j >= n || !a.is_finite() {
                    return Err(Error::Config(format!("row {} has an invalid coefficient", row.name)));
                }
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, x)| c * x).sum()
    }

    /// Largest row or bound violation of `values`.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|r| r.violation(values)).fold(0.0, f64::max);
        let bounds = values
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(x, (l, u))| (l - x).max(x - u).max(0.0))
            .fold(0.0, f64::max);
        rows.max(bounds)
    }

    /// Plain-text listing: objective, rows and bounds, one item per line, numbers
    /// in `{:.12e}`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "LP {} variables {} rows", self.num_vars(), self.constraints.len());
        let _ = writeln!(out, "MINIMIZE");
        for (name, c) in self.var_names.iter().zip(&self.objective) {
            if *c != 0.0 {
                let _ = writeln!(out, "  {c:+.12e} {name}");
            }
        }
        let _ = writeln!(out, "SUBJECT TO");
        for row in &self.constraints {
            let _ = write!(out, "  {}:", row.name);
            for &(j, a) in &row.coeffs {
                let _ = write!(out, " {a:+.12e} {}", self.var_names[j]);
            }
            let _ = writeln!(out, " {} {:.12e}", row.cmp.symbol(), row.rhs);
        }
        let _ = writeln!(out, "BOUNDS");
        for ((name, l), u) in self.var_names.iter().zip(&self.lower).zip(&self.upper) {
            let _ = writeln!(out, "  {l:.12e} <= {name} <= {u:.12e}");
        }
        let _ = writeln!(out, "END");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    pub objective: f64,
    pub values: Vec<f64>,
    /// Why no feasible point exists, when infeasible.
    pub certificate: Option<String>,
    pub iterations: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_lists_every_part() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 0.0, 4.0, -1.0);
        let y = lp.add_var("y", -1.0, 1.0, 0.0);
        lp.add_constraint("cap", vec![(x, 1.0), (y, 2.0)], Comparator::Le, 3.0);
        let text = lp.dump();
        assert!(text.starts_with("LP 2 variables 1 rows\n"));
        assert!(text.contains("  -1.000000000000e0 x\n"));
        assert!(text.contains("  cap: +1.000000000000e0 x +2.000000000000e0 y <= 3.000000000000e0\n"));
        assert!(text.contains("  -1.000000000000e0 <= y <= 1.000000000000e0\n"));
        assert!(text.ends_with("END\n"));
    }

    #[test]
    fn violations_and_validation() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var("x", 0.0, 1.0, 1.0);
        lp.add_constraint("eq", vec![(x, 1.0)], Comparator::Eq, 0.5);
        assert_eq!(lp.max_violation(&[0.5]), 0.0);
        assert!((lp.max_violation(&[2.0]) - 1.5).abs() < 1e-15);
        assert!(lp.validate().is_ok());
        lp.add_constraint("bad", vec![(7, 1.0)], Comparator::Le, 0.0);
        assert!(lp.validate().is_err());
    }
}
