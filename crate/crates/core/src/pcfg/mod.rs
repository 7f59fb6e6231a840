//! Probabilistic control-flow graphs.

pub mod sample;
mod structure;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use crate::dist::DistributionSpec;
use crate::linear::Dnf;
use crate::poly::{Polynomial, Var};
use crate::rational::Rational;

pub use sample::{reachable_states, run_to_termination, step, step_exact, Censored, CompiledPcfg, State};
pub use structure::{
    check_bounded_updates, check_bounded_updates_with, check_statically_bounded, check_statically_bounded_with,
};
pub use validate::ValidationError;

pub type LocId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum Update {
    None,
    Assign { var: Var, expr: Polynomial },
    Sample { var: Var, dist: DistributionSpec },
}

impl Update {
    pub fn target(&self) -> Option<Var> {
        match self {
            Update::None => None,
            Update::Assign { var, .. } | Update::Sample { var, .. } => Some(*var),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub source: LocId,
    /// Successor locations with probabilities. Entries are kept in branch
    /// order and may repeat a location; see [`Transition::succ_dist`].
    pub succ: Vec<(LocId, Rational)>,
    pub guard: Dnf,
    pub update: Update,
}

impl Transition {
    /// Successor distribution with repeated locations merged.
    pub fn succ_dist(&self) -> BTreeMap<LocId, Rational> {
        let mut m: BTreeMap<LocId, Rational> = BTreeMap::new();
        for (l, p) in &self.succ {
            if !p.is_zero() {
                *m.entry(*l).or_default() += p;
            }
        }
        m
    }
}

/// Net effect of one loop-body path on a variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Effect {
    /// `x := x + k` (identity when `k = 0`).
    Add(Rational),
    /// `x := c`.
    Set(Rational),
    Other,
}

/// Syntactic summary of a `while` loop, recorded during lowering.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopSummary {
    pub head: LocId,
    pub guard: Dnf,
    /// Per body path, the effect on each modified variable. `None` when the
    /// body has too many paths to enumerate.
    pub paths: Option<Vec<BTreeMap<Var, Effect>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Pcfg {
    pub labels: Vec<String>,
    pub vars: Vec<String>,
    pub out_vars: Vec<Var>,
    pub init_valuation: Vec<Rational>,
    pub init: LocId,
    pub out: LocId,
    pub transitions: Vec<Transition>,
    /// Loop structure when the graph came from the surface language.
    pub loops: Option<Vec<LoopSummary>>,
}

impl Pcfg {
    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn num_locations(&self) -> usize {
        self.labels.len()
    }

    pub fn out_var_names(&self) -> Vec<String> {
        self.out_vars.iter().map(|v| self.vars[*v as usize].clone()).collect()
    }

    pub fn location(&self, label: &str) -> Option<LocId> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn var(&self, name: &str) -> Option<Var> {
        self.vars.iter().position(|v| v == name).map(|i| i as Var)
    }

    pub fn outgoing(&self, loc: LocId) -> impl Iterator<Item = (usize, &Transition)> {
        self.transitions.iter().enumerate().filter(move |(_, t)| t.source == loc)
    }

    /// Transitions other than the terminal self-loop.
    pub fn non_terminal(&self) -> impl Iterator<Item = (usize, &Transition)> {
        let out = self.out;
        self.transitions.iter().enumerate().filter(move |(_, t)| t.source != out)
    }

    /// Variables provably integer-valued in every reachable state: integral
    /// initial value and only integer-preserving updates (greatest fixpoint).
    pub fn integer_vars(&self) -> Vec<bool> {
        let mut ints: Vec<bool> = self.init_valuation.iter().map(Rational::is_integer).collect();
        loop {
            let mut changed = false;
            for t in &self.transitions {
                let (var, ok) = match &t.update {
                    Update::None => continue,
                    Update::Assign { var, expr } => {
                        let ok = expr.terms().all(|(m, c)| c.is_integer() && m.vars().all(|v| ints[v as usize]));
                        (*var, ok)
                    }
                    Update::Sample { var, dist } => (*var, dist.is_integer_valued()),
                };
                if !ok && ints[var as usize] {
                    ints[var as usize] = false;
                    changed = true;
                }
            }
            if !changed {
                return ints;
            }
        }
    }

    pub fn validate(&self) -> Result<(), Vec<ValidationError>> {
        validate::validate(self)
    }
}

impl fmt::Display for Pcfg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = |v: Var| self.vars[v as usize].clone();
        writeln!(f, "vars: {}", self.vars.join(", "))?;
        writeln!(f, "outputs: {}", self.out_var_names().join(", "))?;
        for (i, t) in self.transitions.iter().enumerate() {
            write!(f, "t{i}: {} ", self.labels[t.source])?;
            write!(f, "[{:?}] ", t.guard)?;
            match &t.update {
                Update::None => {}
                Update::Assign { var, expr } => {
                    write!(f, "{} := ", names(*var))?;
                    expr.fmt_with(f, &names)?;
                    write!(f, " ")?;
                }
                Update::Sample { var, dist } => write!(f, "{} ~ {dist} ", names(*var))?,
            }
            write!(f, "->")?;
            for (l, p) in &t.succ {
                write!(f, " {}:{}", self.labels[*l], p)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}
