//! Structural sufficient conditions used for optional-stopping eligibility.

use std::collections::BTreeMap;

use super::{Effect, LoopSummary, Pcfg, Update};
use crate::invariant::interval::{eval_poly, refine};
use crate::invariant::{generate_interval_invariants, Invariant, DEFAULT_WIDEN_AFTER};
use crate::linear::{Atom, Conj};
use crate::poly::{Polynomial, Var};
use crate::rational::Rational;

/// Whether every loop provably exits after a bounded number of iterations.
pub fn check_statically_bounded(p: &Pcfg) -> bool {
    check_statically_bounded_with(p, &generate_interval_invariants(p, DEFAULT_WIDEN_AFTER))
}

/// As [`check_statically_bounded`], using the given invariant to bound the
/// ranking atom at each loop head.
pub fn check_statically_bounded_with(p: &Pcfg, inv: &Invariant) -> bool {
    match &p.loops {
        None => is_acyclic(p),
        Some(loops) => {
            let ints = p.integer_vars();
            loops.iter().all(|lp| loop_bounded(lp, inv, &ints))
        }
    }
}

fn effect(path: &BTreeMap<Var, Effect>, v: Var) -> Effect {
    path.get(&v).cloned().unwrap_or(Effect::Add(Rational::zero()))
}

/// Net change of the atom's expression along `path`, if constant.
fn delta(a: &Atom, path: &BTreeMap<Var, Effect>) -> Option<Rational> {
    let mut d = Rational::zero();
    for (v, c) in &a.expr.coeffs {
        match effect(path, *v) {
            Effect::Add(k) => d += c * &k,
            _ => return None,
        }
    }
    Some(d)
}

/// Whether the path fixes every variable of some guard atom to a value
/// that falsifies it.
fn kills(cell: &Conj, path: &BTreeMap<Var, Effect>) -> bool {
    cell.iter().any(|b| {
        let mut e = b.expr.clone();
        for v in b.expr.coeffs.keys() {
            match effect(path, *v) {
                Effect::Set(c) => e = e.fix_var(*v, &c),
                _ => return false,
            }
        }
        Atom { expr: e, strict: b.strict }.constant_truth() == Some(false)
    })
}

fn loop_bounded(lp: &LoopSummary, inv: &Invariant, ints: &[bool]) -> bool {
    let Some(paths) = &lp.paths else { return false };
    let [cell] = lp.guard.cells() else { return false };
    let Some(head) = inv.bounds(lp.head, ints) else { return true };
    let Some(head) = refine(&head, cell, ints) else { return true };
    cell.iter().any(|a| {
        let bounded_above = eval_poly(&a.expr.to_poly(), &head).hi.is_some();
        bounded_above
            && paths.iter().all(|path| kills(cell, path) || delta(a, path).is_some_and(|d| d.is_negative()))
    })
}

fn is_acyclic(p: &Pcfg) -> bool {
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut state = vec![0u8; p.num_locations()];
    fn dfs(p: &Pcfg, l: usize, state: &mut [u8]) -> bool {
        state[l] = 1;
        for (_, t) in p.outgoing(l) {
            for (s, q) in &t.succ {
                if *s == p.out && l == p.out || q.is_zero() {
                    continue;
                }
                let seen = state[*s];
                if seen == 1 || (seen == 0 && !dfs(p, *s, state)) {
                    return false;
                }
            }
        }
        state[l] = 2;
        true
    }
    dfs(p, p.init, &mut state)
}

/// Whether every update changes its target by a bounded amount over the
/// reachable states and every sampled distribution has bounded support.
pub fn check_bounded_updates(p: &Pcfg) -> bool {
    check_bounded_updates_with(p, &generate_interval_invariants(p, DEFAULT_WIDEN_AFTER))
}

pub fn check_bounded_updates_with(p: &Pcfg, inv: &Invariant) -> bool {
    let ints = p.integer_vars();
    for (_, t) in p.non_terminal() {
        let Some(bx) = inv.bounds(t.source, &ints) else { continue };
        for cell in t.guard.cells() {
            let Some(bx) = refine(&bx, cell, &ints) else { continue };
            let ok = match &t.update {
                Update::None => true,
                Update::Assign { var, expr } => {
                    let change = expr.sub(&Polynomial::var(*var));
                    eval_poly(&change, &bx).is_bounded()
                }
                Update::Sample { var, dist } => dist.has_bounded_support() && bx[*var as usize].is_bounded(),
            };
            if !ok {
                return false;
            }
        }
    }
    true
}
