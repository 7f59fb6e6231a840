use thiserror::Error;

use super::{LocId, Pcfg, Update};
use crate::dist::DistError;
use crate::linear::{conj_feasible, conj_witness, Atom};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("terminal location `{0}` must have exactly one `true` self-loop without update")]
    TerminalShape(String),
    #[error("transition {index} refers to an unknown location")]
    BadLocation { index: usize },
    #[error("transition {index} has successor probabilities summing to {sum}")]
    BadProbabilities { index: usize, sum: Rational },
    #[error("transition {index} updates unknown variable {var}")]
    BadVariable { index: usize, var: u32 },
    #[error("transition {index}: {source}")]
    BadDistribution { index: usize, source: DistError },
    #[error("guards at `{location}` do not cover the state {witness:?}")]
    NotTotal { location: String, witness: Vec<Rational> },
    #[error("transitions {first} and {second} at `{location}` are both enabled at {witness:?}")]
    Overlap { location: String, first: usize, second: usize, witness: Vec<Rational> },
}

pub(super) fn validate(p: &Pcfg) -> Result<(), Vec<ValidationError>> {
    let mut errs = Vec::new();
    let n = p.num_vars();
    let nloc = p.num_locations();
    if p.init_valuation.len() != n || p.init >= nloc || p.out >= nloc {
        errs.push(ValidationError::TerminalShape(p.labels.get(p.out).cloned().unwrap_or_default()));
        return Err(errs);
    }
    for (i, t) in p.transitions.iter().enumerate() {
        if t.source >= nloc || t.succ.iter().any(|(l, _)| *l >= nloc) || t.succ.is_empty() {
            errs.push(ValidationError::BadLocation { index: i });
            continue;
        }
        let sum: Rational = t.succ.iter().map(|(_, q)| q.clone()).sum();
        if !sum.is_one() || t.succ.iter().any(|(_, q)| q.is_negative()) {
            errs.push(ValidationError::BadProbabilities { index: i, sum });
        }
        if let Some(v) = t.update.target() {
            if v as usize >= n {
                errs.push(ValidationError::BadVariable { index: i, var: v });
            }
        }
        if let Update::Sample { dist, .. } = &t.update {
            if let Err(source) = dist.validate() {
                errs.push(ValidationError::BadDistribution { index: i, source });
            }
        }
    }
    let terminal: Vec<_> = p.outgoing(p.out).collect();
    let ok_terminal = terminal.len() == 1 && {
        let t = terminal[0].1;
        t.guard.is_trivially_true() && t.update == Update::None && t.succ.iter().all(|(l, _)| *l == p.out)
    };
    if !ok_terminal {
        errs.push(ValidationError::TerminalShape(p.labels[p.out].clone()));
    }
    if !errs.is_empty() {
        return Err(errs);
    }
    for loc in 0..nloc {
        if loc == p.out {
            continue;
        }
        let ts: Vec<(usize, &super::Transition)> = p.outgoing(loc).collect();
        if let Some(w) = uncovered(p, loc, n) {
            errs.push(ValidationError::NotTotal { location: p.labels[loc].clone(), witness: w });
        }
        for (a, (i, ti)) in ts.iter().enumerate() {
            for (j, tj) in &ts[a + 1..] {
                'pair: for ci in ti.guard.cells() {
                    for cj in tj.guard.cells() {
                        let both: Vec<Atom> = ci.iter().chain(cj.iter()).cloned().collect();
                        if let Some(w) = conj_witness(&both, n) {
                            errs.push(ValidationError::Overlap {
                                location: p.labels[loc].clone(),
                                first: *i,
                                second: *j,
                                witness: w,
                            });
                            break 'pair;
                        }
                    }
                }
            }
        }
    }
    if errs.is_empty() {
        Ok(())
    } else {
        Err(errs)
    }
}

/// A state at `loc` enabling no transition, found by depth-first search over
/// one negated atom per guard cell.
fn uncovered(p: &Pcfg, loc: LocId, n: usize) -> Option<Vec<Rational>> {
    let cells: Vec<&Vec<Atom>> = p.outgoing(loc).flat_map(|(_, t)| t.guard.cells()).collect();
    fn dfs(cells: &[&Vec<Atom>], acc: &mut Vec<Atom>, n: usize) -> Option<Vec<Rational>> {
        let Some((first, rest)) = cells.split_first() else {
            return conj_witness(acc, n);
        };
        for a in first.iter() {
            acc.push(a.negate());
            if conj_feasible(acc, n) {
                if let Some(w) = dfs(rest, acc, n) {
                    return Some(w);
                }
            }
            acc.pop();
        }
        None
    }
    dfs(&cells, &mut Vec::new(), n)
}
