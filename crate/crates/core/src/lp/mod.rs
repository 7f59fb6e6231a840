//! Linear programs over exact rationals.

mod export;
mod float;
mod simplex;
mod sparse;

use std::time::Instant;

use thiserror::Error;

use crate::rational::Rational;

pub use export::write_lp;
pub use float::{solve_float, FloatSolution, MAX_DENSE_ROWS};
pub use simplex::solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    Free,
    NonNeg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Eq,
    Le,
    Ge,
}

#[derive(Debug, Clone)]
pub struct LpRow {
    pub coeffs: Vec<(usize, Rational)>,
    pub sense: Sense,
    pub rhs: Rational,
    pub label: String,
}

/// `maximize objective` subject to rows, with per-variable sign constraints.
/// An empty objective means a pure feasibility problem.
#[derive(Debug, Clone, Default)]
pub struct LpInstance {
    pub names: Vec<String>,
    pub kinds: Vec<VarKind>,
    pub rows: Vec<LpRow>,
    pub objective: Vec<(usize, Rational)>,
}

impl LpInstance {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind) -> usize {
        self.names.push(name.into());
        self.kinds.push(kind);
        self.names.len() - 1
    }

    pub fn add_row(
        &mut self,
        coeffs: Vec<(usize, Rational)>,
        sense: Sense,
        rhs: Rational,
        label: impl Into<String>,
    ) {
        let coeffs = sparse::normalize(coeffs);
        self.rows.push(LpRow { coeffs, sense, rhs, label: label.into() });
    }

    pub fn set_objective(&mut self, objective: Vec<(usize, Rational)>) {
        self.objective = sparse::normalize(objective);
    }

    pub fn num_vars(&self) -> usize {
        self.names.len()
    }

    /// Checks an assignment against every row and sign constraint exactly.
    pub fn check(&self, values: &[Rational]) -> Result<(), String> {
        for (j, k) in self.kinds.iter().enumerate() {
            if *k == VarKind::NonNeg && values[j].is_negative() {
                return Err(format!("variable {} is negative", self.names[j]));
            }
        }
        for row in &self.rows {
            let lhs: Rational = row.coeffs.iter().map(|(j, c)| c * &values[*j]).sum();
            let ok = match row.sense {
                Sense::Eq => lhs == row.rhs,
                Sense::Le => lhs <= row.rhs,
                Sense::Ge => lhs >= row.rhs,
            };
            if !ok {
                return Err(format!("row `{}` violated: lhs {} vs rhs {}", row.label, lhs, row.rhs));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    /// A feasible point; the objective is unbounded above or was not optimized.
    Feasible,
    Infeasible,
    Unknown,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub status: LpStatus,
    pub values: Vec<Rational>,
    pub objective: Option<Rational>,
    pub pivots: usize,
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub deadline: Option<Instant>,
    /// Give up after this many pivots (status `Unknown`).
    pub max_pivots: Option<usize>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LpError {
    #[error("LP solve exceeded the deadline")]
    Timeout,
}
