use std::collections::BTreeSet;

use super::interval::{eval_poly, refine, Interval};
use super::Invariant;
use crate::pcfg::{LocId, Pcfg, Transition, Update};
use crate::rational::Rational;

pub const DEFAULT_WIDEN_AFTER: usize = 3;
const NARROWING_ROUNDS: usize = 10;

type Boxes = Vec<Option<Vec<Interval>>>;

fn transfer(t: &Transition, b: &[Interval], ints: &[bool]) -> Vec<(LocId, Vec<Interval>)> {
    let mut out = Vec::new();
    // identity self-loops add no states and would block narrowing
    if t.update == Update::None && t.succ.iter().all(|(l, _)| *l == t.source) {
        return out;
    }
    for cell in t.guard.cells() {
        let Some(mut nb) = refine(b, cell, ints) else { continue };
        match &t.update {
            Update::None => {}
            Update::Assign { var, expr } => {
                let j = *var as usize;
                let mut v = eval_poly(expr, &nb);
                if ints[j] {
                    v = v.round_integer();
                }
                nb[j] = v;
            }
            Update::Sample { var, dist } => {
                let (lo, hi) = dist.support_hull();
                nb[*var as usize] = Interval::new(lo, hi);
            }
        }
        for (l, q) in &t.succ {
            if q.is_positive() {
                out.push((*l, nb.clone()));
            }
        }
    }
    out
}

fn join_into(slot: &mut Option<Vec<Interval>>, b: &[Interval]) {
    *slot = Some(match slot.take() {
        None => b.to_vec(),
        Some(old) => old.iter().zip(b).map(|(x, y)| x.join(y)).collect(),
    });
}

fn initial(p: &Pcfg) -> Vec<Interval> {
    p.init_valuation.iter().cloned().map(Interval::point).collect()
}

/// One application of the abstract transformer to every location at once.
fn step_all(p: &Pcfg, cur: &Boxes, ints: &[bool]) -> Boxes {
    let mut next: Boxes = vec![None; p.num_locations()];
    next[p.init] = Some(initial(p));
    for t in &p.transitions {
        if let Some(b) = &cur[t.source] {
            for (l, nb) in transfer(t, b, ints) {
                join_into(&mut next[l], &nb);
            }
        }
    }
    next
}

/// Locations where widening is applied: loop heads, or targets of back
/// edges of a depth-first search when no loop structure is recorded.
fn widening_points(p: &Pcfg) -> Vec<bool> {
    let mut heads = vec![false; p.num_locations()];
    if let Some(loops) = &p.loops {
        for lp in loops {
            heads[lp.head] = true;
        }
        return heads;
    }
    let mut state = vec![0u8; p.num_locations()];
    let mut stack = vec![(p.init, 0usize)];
    state[p.init] = 1;
    let succs: Vec<Vec<LocId>> = (0..p.num_locations())
        .map(|l| p.outgoing(l).flat_map(|(_, t)| t.succ.iter().map(|(s, _)| *s)).collect())
        .collect();
    while let Some((l, i)) = stack.pop() {
        if i < succs[l].len() {
            stack.push((l, i + 1));
            let s = succs[l][i];
            match state[s] {
                0 => {
                    state[s] = 1;
                    stack.push((s, 0));
                }
                1 => heads[s] = true,
                _ => {}
            }
        } else {
            state[l] = 2;
        }
    }
    heads
}

/// Per-variable widening thresholds: the bounds implied by single-variable
/// guard atoms, and their integer neighbours.
fn thresholds(p: &Pcfg) -> Vec<Vec<Rational>> {
    let mut th: Vec<BTreeSet<Rational>> = vec![BTreeSet::new(); p.num_vars()];
    for t in &p.transitions {
        for a in t.guard.cells().iter().flatten() {
            if let [(v, c)] = a.expr.coeffs.iter().collect::<Vec<_>>()[..] {
                let b = -a.expr.constant.clone() / c.clone();
                let set = &mut th[*v as usize];
                set.insert(&b - Rational::one());
                set.insert(&b + Rational::one());
                set.insert(b);
            }
        }
    }
    th.into_iter().map(|s| s.into_iter().collect()).collect()
}

/// Per-location boxes; `None` marks locations found unreachable.
pub fn interval_boxes(p: &Pcfg, widen_after: usize) -> Boxes {
    let ints = p.integer_vars();
    let heads = widening_points(p);
    let th = thresholds(p);
    let mut boxes: Boxes = vec![None; p.num_locations()];
    boxes[p.init] = Some(initial(p));
    let mut updates = vec![0usize; p.num_locations()];
    loop {
        let mut changed = false;
        for t in &p.transitions {
            let Some(b) = boxes[t.source].clone() else { continue };
            for (l, nb) in transfer(t, &b, &ints) {
                let mut joined = boxes[l].clone();
                join_into(&mut joined, &nb);
                if joined == boxes[l] {
                    continue;
                }
                updates[l] += 1;
                let new = match (&boxes[l], joined) {
                    (Some(old), Some(j)) if heads[l] && updates[l] > widen_after => {
                        Some(old.iter().zip(&j).zip(&th).map(|((a, b), t)| a.widen_with(b, t)).collect())
                    }
                    (_, j) => j,
                };
                boxes[l] = new;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for _ in 0..NARROWING_ROUNDS {
        let fresh = step_all(p, &boxes, &ints);
        let narrowed: Boxes = boxes
            .iter()
            .zip(&fresh)
            .map(|(a, b)| match (a, b) {
                (Some(a), Some(b)) => {
                    let m: Vec<Interval> = a.iter().zip(b).map(|(x, y)| x.meet(y)).collect();
                    if m.iter().any(Interval::is_empty) {
                        None
                    } else {
                        Some(m)
                    }
                }
                _ => None,
            })
            .collect();
        if narrowed == boxes {
            break;
        }
        boxes = narrowed;
    }
    boxes
}

/// Interval invariants by forward propagation from the initial valuation,
/// with widening after `widen_after` growths of a location followed by a
/// few narrowing rounds.
pub fn generate_interval_invariants(p: &Pcfg, widen_after: usize) -> Invariant {
    let boxes = interval_boxes(p, widen_after);
    Invariant::from_boxes(&boxes)
}
