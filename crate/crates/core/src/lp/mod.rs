//! A small dense linear-programming toolkit and the optimal buy-one
//! lottery LP built on top of it.

mod buy_one;
mod dd;
mod simplex;

pub use buy_one::{
    build_buy_one_lp, build_buy_one_lp_with, solve_optimal_buy_one, solve_optimal_buy_one_with, AllocationMode,
    BuyOneLpIndex, BuyOneVar, OptimalMenu,
};
pub use simplex::{solve_lp, solve_lp_with, PivotRule, Precision, SimplexOptions};

use std::fmt;

use crate::error::{Error, Result};

/// Primal feasibility tolerance on every constraint of an optimal solution.
pub const FEASIBILITY_TOL: f64 = 1e-7;

/// Optimality is certified once every reduced cost is at most this.
pub const REDUCED_COST_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn lhs(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// How far `x` is from satisfying the constraint (0 when satisfied).
    pub fn violation(&self, x: &[f64]) -> f64 {
        let lhs = self.lhs(x);
        match self.relation {
            Relation::Le => (lhs - self.rhs).max(0.0),
            Relation::Ge => (self.rhs - lhs).max(0.0),
            Relation::Eq => (lhs - self.rhs).abs(),
        }
    }
}

/// `maximize c.x` subject to linear constraints and `x >= lower`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
    lower_bounds: Vec<f64>,
}

impl LinearProgram {
    /// An LP over `num_vars` nonnegative variables with the given objective.
    pub fn maximize(objective: Vec<f64>) -> Result<Self> {
        if objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("objective has non-finite entries".into()));
        }
        let n = objective.len();
        Ok(Self { objective, constraints: Vec::new(), lower_bounds: vec![0.0; n] })
    }

    pub fn with_lower_bounds(mut self, lower: Vec<f64>) -> Result<Self> {
        if lower.len() != self.num_vars() {
            return Err(Error::DimensionMismatch { expected: self.num_vars(), got: lower.len() });
        }
        if lower.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidParameter("lower bounds must be finite".into()));
        }
        self.lower_bounds = lower;
        Ok(self)
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Result<()> {
        if coeffs.len() != self.num_vars() {
            return Err(Error::DimensionMismatch { expected: self.num_vars(), got: coeffs.len() });
        }
        if coeffs.iter().any(|c| !c.is_finite()) || !rhs.is_finite() {
            return Err(Error::InvalidParameter("constraint has non-finite entries".into()));
        }
        self.constraints.push(Constraint { coeffs, relation, rhs });
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower_bounds
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Largest constraint or bound violation of `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let rows = self.constraints.iter().map(|c| c.violation(x));
        let bounds = self.lower_bounds.iter().zip(x).map(|(l, v)| (l - v).max(0.0));
        rows.chain(bounds).fold(0.0, f64::max)
    }
}

/// Debug dump, one constraint per line. Not a stable format.
impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn terms(coeffs: &[f64]) -> String {
            let parts: Vec<String> = coeffs
                .iter()
                .enumerate()
                .filter(|(_, c)| **c != 0.0)
                .map(|(i, c)| format!("{c} x{}", i + 1))
                .collect();
            if parts.is_empty() {
                "0".into()
            } else {
                parts.join(" + ")
            }
        }
        writeln!(f, "max {}", terms(&self.objective))?;
        for c in &self.constraints {
            writeln!(f, "{} {} {}", terms(&c.coeffs), c.relation, c.rhs)?;
        }
        for (i, l) in self.lower_bounds.iter().enumerate() {
            writeln!(f, "x{} >= {l}", i + 1)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal values; empty unless optimal.
    pub values: Vec<f64>,
    /// `+inf` when unbounded, `-inf` when infeasible.
    pub objective: f64,
    pub pivots: usize,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}
