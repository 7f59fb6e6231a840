//! Supporting linear invariants: a conjunction of linear atoms per location.

mod check;
mod file;
mod generate;
pub mod interval;

use crate::linear::{conj_feasible, Atom, LinExpr};
use crate::pcfg::{LocId, Pcfg};
use crate::rational::Rational;

pub use check::{check_inductive, InductivenessReport, Violation, ViolationKind};
pub use file::{emit_invariant_file, parse_invariant_file, InvariantFileError};
pub use generate::{generate_interval_invariants, interval_boxes, DEFAULT_WIDEN_AFTER};
pub use interval::Interval;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Invariant {
    pub per_loc: Vec<Vec<Atom>>,
}

impl Invariant {
    /// The all-true invariant.
    pub fn trivial(p: &Pcfg) -> Self {
        Invariant { per_loc: vec![Vec::new(); p.num_locations()] }
    }

    pub fn at(&self, loc: LocId) -> &[Atom] {
        &self.per_loc[loc]
    }

    /// Box enclosure of `I(loc)` by bound propagation, `None` when the
    /// conjunction is infeasible.
    pub fn bounds(&self, loc: LocId, ints: &[bool]) -> Option<Vec<Interval>> {
        let atoms = self.at(loc);
        if !conj_feasible(atoms, ints.len()) {
            return None;
        }
        interval::refine(&vec![Interval::top(); ints.len()], atoms, ints)
    }

    /// Builds an invariant from per-location boxes; `None` marks an
    /// unreachable location and becomes the atom `-1 >= 0`.
    pub fn from_boxes(boxes: &[Option<Vec<Interval>>]) -> Self {
        let per_loc = boxes
            .iter()
            .map(|b| match b {
                None => vec![Atom::ge(LinExpr::constant(-Rational::one()))],
                Some(b) => {
                    let mut atoms = Vec::new();
                    for (j, iv) in b.iter().enumerate() {
                        let v = j as u32;
                        if let Some(lo) = &iv.lo {
                            atoms.push(Atom::ge(LinExpr::from_terms(-lo.clone(), [(v, Rational::one())])));
                        }
                        if let Some(hi) = &iv.hi {
                            atoms.push(Atom::ge(LinExpr::from_terms(hi.clone(), [(v, -Rational::one())])));
                        }
                    }
                    atoms
                }
            })
            .collect();
        Invariant { per_loc }
    }
}

/// Whether `I(l_out)` bounds every output variable from both sides.
pub fn check_bounded_output_range(p: &Pcfg, inv: &Invariant) -> bool {
    match inv.bounds(p.out, &p.integer_vars()) {
        None => true,
        Some(b) => p.out_vars.iter().all(|v| b[*v as usize].is_bounded()),
    }
}

/// Output-variable boxes at `l_out`, or `None` when some output is unbounded.
pub fn output_bounds(p: &Pcfg, inv: &Invariant) -> Option<Vec<Interval>> {
    let b = inv.bounds(p.out, &p.integer_vars())?;
    let out: Vec<Interval> = p.out_vars.iter().map(|v| b[*v as usize].clone()).collect();
    out.iter().all(Interval::is_bounded).then_some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::compile;
    use crate::rational::rat;

    const FIG_A: &str = include_str!("../../fixtures/transmission_a.ppl");

    fn iv(a: i64, b: i64) -> Interval {
        Interval::closed(rat(a, 1), rat(b, 1))
    }

    #[test]
    fn transmission_intervals() {
        let p = compile(FIG_A).unwrap();
        let boxes = interval_boxes(&p, DEFAULT_WIDEN_AFTER);
        assert_eq!(boxes[p.init], Some(vec![iv(0, 8_000_001), iv(0, 1)]));
        let out = boxes[p.out].clone().unwrap();
        assert_eq!(out[0].hi, Some(rat(8_000_001, 1)));
        assert_eq!(out[1], iv(0, 1));
        let inv = generate_interval_invariants(&p, DEFAULT_WIDEN_AFTER);
        assert!(check_bounded_output_range(&p, &inv));
    }

    #[test]
    fn constant_program() {
        let p = compile("x := 0\nreturn x").unwrap();
        assert_eq!(interval_boxes(&p, 3)[p.out], Some(vec![iv(0, 0)]));
    }

    #[test]
    fn widening_gives_up_on_growth() {
        let p = compile("x := 1; c := 0; while c <= 0 { if prob(1/2) { x := 2 * x } else { c := 1 } }; return x").unwrap();
        let b = interval_boxes(&p, 3)[p.init].clone().unwrap();
        assert_eq!(b[0], Interval::new(Some(rat(1, 1)), None));
        let inv = generate_interval_invariants(&p, 3);
        assert!(!check_bounded_output_range(&p, &inv));
    }

    #[test]
    fn file_round_trip() {
        let p = compile(FIG_A).unwrap();
        let inv = parse_invariant_file("# comment\nloc l_init: 1*sent + 0*fail >= 0\n", &p).unwrap();
        assert_eq!(inv.at(p.init).len(), 1);
        assert_eq!(emit_invariant_file(&inv, &p), "loc l_init: 0 + 1*sent >= 0\n");
        let gen = generate_interval_invariants(&p, 3);
        let text = emit_invariant_file(&gen, &p);
        let back = parse_invariant_file(&text, &p).unwrap();
        assert_eq!(back, gen);
        assert_eq!(emit_invariant_file(&back, &p), text);
        assert!(matches!(
            parse_invariant_file("loc l_9: sent >= 0", &p),
            Err(InvariantFileError::UnknownLocation { .. })
        ));
        assert!(matches!(
            parse_invariant_file("loc l_1: sent*fail >= 0", &p),
            Err(InvariantFileError::Nonlinear { .. })
        ));
        let rel = parse_invariant_file("loc l_2: sent <= 8000000 - 1/2*fail", &p).unwrap();
        assert_eq!(emit_invariant_file(&rel, &p), "loc l_2: 8000000 - 1*sent - 1/2*fail >= 0\n");
    }

    #[test]
    fn inductiveness() {
        let p = compile(FIG_A).unwrap();
        let gen = generate_interval_invariants(&p, 3);
        assert!(check_inductive(&p, &gen, 200, 1).ok());
        assert!(check_inductive(&p, &Invariant::trivial(&p), 10, 1).ok());
        let bad = parse_invariant_file("loc l_init: 5 - sent >= 0", &p).unwrap();
        let r = check_inductive(&p, &bad, 50, 1);
        assert!(!r.ok());
        assert!(r.violations.iter().any(|v| matches!(v.kind, ViolationKind::Sampled { .. })));
    }
}
