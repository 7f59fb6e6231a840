use std::cmp::Ordering;
use std::fmt;

use crate::linear::Atom;
use crate::poly::Polynomial;
use crate::rational::Rational;

/// Closed interval with optional (infinite) endpoints.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Interval {
    pub lo: Option<Rational>,
    pub hi: Option<Rational>,
}

#[derive(Clone, PartialEq, Eq)]
enum Ext {
    NegInf,
    Fin(Rational),
    PosInf,
}

impl Ext {
    fn mul(&self, o: &Ext) -> Ext {
        use Ext::*;
        match (self, o) {
            (Fin(a), Fin(b)) => Fin(a * b),
            (Fin(a), inf) | (inf, Fin(a)) => match a.signum() {
                0 => Fin(Rational::zero()),
                s if (s > 0) == (*inf == PosInf) => PosInf,
                _ => NegInf,
            },
            (a, b) => {
                if a == b {
                    PosInf
                } else {
                    NegInf
                }
            }
        }
    }

    fn cmp(&self, o: &Ext) -> Ordering {
        use Ext::*;
        match (self, o) {
            (NegInf, NegInf) | (PosInf, PosInf) => Ordering::Equal,
            (NegInf, _) | (_, PosInf) => Ordering::Less,
            (_, NegInf) | (PosInf, _) => Ordering::Greater,
            (Fin(a), Fin(b)) => a.cmp(b),
        }
    }
}

impl Interval {
    pub fn top() -> Self {
        Interval { lo: None, hi: None }
    }

    pub fn point(c: Rational) -> Self {
        Interval { lo: Some(c.clone()), hi: Some(c) }
    }

    pub fn new(lo: Option<Rational>, hi: Option<Rational>) -> Self {
        Interval { lo, hi }
    }

    pub fn closed(lo: Rational, hi: Rational) -> Self {
        Interval { lo: Some(lo), hi: Some(hi) }
    }

    pub fn is_empty(&self) -> bool {
        matches!((&self.lo, &self.hi), (Some(l), Some(h)) if l > h)
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_some() && self.hi.is_some()
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.lo.as_ref().is_none_or(|l| l <= x) && self.hi.as_ref().is_none_or(|h| x <= h)
    }

    pub fn contains_f64(&self, x: f64, tol: f64) -> bool {
        self.lo.as_ref().is_none_or(|l| l.to_f64() - tol <= x) && self.hi.as_ref().is_none_or(|h| x <= h.to_f64() + tol)
    }

    /// Largest absolute value, when bounded.
    pub fn magnitude(&self) -> Option<Rational> {
        Some(self.lo.as_ref()?.abs().max(self.hi.as_ref()?.abs()))
    }

    pub fn join(&self, o: &Interval) -> Interval {
        let lo = match (&self.lo, &o.lo) {
            (Some(a), Some(b)) => Some(a.clone().min(b.clone())),
            _ => None,
        };
        let hi = match (&self.hi, &o.hi) {
            (Some(a), Some(b)) => Some(a.clone().max(b.clone())),
            _ => None,
        };
        Interval { lo, hi }
    }

    pub fn meet(&self, o: &Interval) -> Interval {
        let lo = match (&self.lo, &o.lo) {
            (Some(a), Some(b)) => Some(a.clone().max(b.clone())),
            (a, b) => a.clone().or(b.clone()),
        };
        let hi = match (&self.hi, &o.hi) {
            (Some(a), Some(b)) => Some(a.clone().min(b.clone())),
            (a, b) => a.clone().or(b.clone()),
        };
        Interval { lo, hi }
    }

    /// Standard interval widening: unstable bounds jump to infinity.
    pub fn widen(&self, next: &Interval) -> Interval {
        let lo = match (&self.lo, &next.lo) {
            (Some(a), Some(b)) if b >= a => Some(a.clone()),
            _ => None,
        };
        let hi = match (&self.hi, &next.hi) {
            (Some(a), Some(b)) if b <= a => Some(a.clone()),
            _ => None,
        };
        Interval { lo, hi }
    }

    /// Widening with thresholds: an unstable bound moves to the nearest
    /// threshold beyond it, or to infinity when there is none.
    pub fn widen_with(&self, next: &Interval, thresholds: &[Rational]) -> Interval {
        let lo = match (&self.lo, &next.lo) {
            (Some(a), Some(b)) if b >= a => Some(a.clone()),
            (_, Some(b)) => thresholds.iter().rev().find(|t| *t <= b).cloned(),
            _ => None,
        };
        let hi = match (&self.hi, &next.hi) {
            (Some(a), Some(b)) if b <= a => Some(a.clone()),
            (_, Some(b)) => thresholds.iter().find(|t| *t >= b).cloned(),
            _ => None,
        };
        Interval { lo, hi }
    }

    pub fn add(&self, o: &Interval) -> Interval {
        let lo = match (&self.lo, &o.lo) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        let hi = match (&self.hi, &o.hi) {
            (Some(a), Some(b)) => Some(a + b),
            _ => None,
        };
        Interval { lo, hi }
    }

    pub fn neg(&self) -> Interval {
        Interval { lo: self.hi.as_ref().map(|h| -h), hi: self.lo.as_ref().map(|l| -l) }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        self.add(&o.neg())
    }

    pub fn scale(&self, r: &Rational) -> Interval {
        if r.is_zero() {
            return Interval::point(Rational::zero());
        }
        let lo = self.lo.as_ref().map(|l| l * r);
        let hi = self.hi.as_ref().map(|h| h * r);
        if r.is_positive() {
            Interval { lo, hi }
        } else {
            Interval { lo: hi, hi: lo }
        }
    }

    fn ends(&self) -> (Ext, Ext) {
        (
            self.lo.clone().map_or(Ext::NegInf, Ext::Fin),
            self.hi.clone().map_or(Ext::PosInf, Ext::Fin),
        )
    }

    fn from_ext(lo: Ext, hi: Ext) -> Interval {
        let f = |e: Ext| match e {
            Ext::Fin(r) => Some(r),
            _ => None,
        };
        Interval { lo: f(lo), hi: f(hi) }
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let (a, b) = self.ends();
        let (c, d) = o.ends();
        let cands = [a.mul(&c), a.mul(&d), b.mul(&c), b.mul(&d)];
        let lo = cands.iter().min_by(|x, y| x.cmp(y)).cloned().unwrap();
        let hi = cands.iter().max_by(|x, y| x.cmp(y)).cloned().unwrap();
        Interval::from_ext(lo, hi)
    }

    pub fn pow(&self, k: u32) -> Interval {
        if k == 0 {
            return Interval::point(Rational::one());
        }
        if k % 2 == 1 {
            return Interval { lo: self.lo.as_ref().map(|l| l.pow(k)), hi: self.hi.as_ref().map(|h| h.pow(k)) };
        }
        let zero = Rational::zero();
        let lo_neg = self.lo.as_ref().is_none_or(|l| l < &zero);
        let hi_pos = self.hi.as_ref().is_none_or(|h| h > &zero);
        match (lo_neg, hi_pos) {
            (true, true) => Interval { lo: Some(zero), hi: self.magnitude().map(|m| m.pow(k)) },
            (false, _) => Interval { lo: self.lo.as_ref().map(|l| l.pow(k)), hi: self.hi.as_ref().map(|h| h.pow(k)) },
            (true, false) => Interval { lo: self.hi.as_ref().map(|h| h.pow(k)), hi: self.lo.as_ref().map(|l| l.pow(k)) },
        }
    }

    /// Rounds endpoints inward to integers.
    pub fn round_integer(&self) -> Interval {
        Interval { lo: self.lo.as_ref().map(Rational::ceil), hi: self.hi.as_ref().map(Rational::floor) }
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.lo {
            Some(l) => write!(f, "[{l}, ")?,
            None => write!(f, "(-inf, ")?,
        }
        match &self.hi {
            Some(h) => write!(f, "{h}]"),
            None => write!(f, "+inf)"),
        }
    }
}

/// Interval enclosure of a polynomial over a box.
pub fn eval_poly(p: &Polynomial, bx: &[Interval]) -> Interval {
    let mut acc = Interval::point(Rational::zero());
    for (m, c) in p.terms() {
        let mut t = Interval::point(c.clone());
        for (v, e) in m.pairs() {
            t = t.mul(&bx[*v as usize].pow(*e));
        }
        acc = acc.add(&t);
    }
    acc
}

/// Narrows `bx` by the conjunction `atoms` with bound propagation. Returns
/// `None` when the box becomes empty. Integer variables are rounded.
pub fn refine(bx: &[Interval], atoms: &[Atom], ints: &[bool]) -> Option<Vec<Interval>> {
    let mut b = bx.to_vec();
    let atoms: Vec<Atom> = atoms
        .iter()
        .map(|a| {
            if a.expr.coeffs.keys().all(|v| ints[*v as usize]) {
                a.tighten_integer()
            } else {
                a.clone()
            }
        })
        .collect();
    for _ in 0..4 {
        let before = b.clone();
        for a in &atoms {
            if let Some(t) = a.constant_truth() {
                if !t {
                    return None;
                }
                continue;
            }
            for (j, aj) in &a.expr.coeffs {
                // aj * x_j >= -(c + sum_{i != j} a_i x_i)
                let mut rest = Interval::point(a.expr.constant.clone());
                for (i, ai) in &a.expr.coeffs {
                    if i != j {
                        rest = rest.add(&b[*i as usize].scale(ai));
                    }
                }
                let Some(hi_rest) = rest.hi else { continue };
                let bound = -hi_rest / aj.clone();
                let j = *j as usize;
                let cut = if aj.is_positive() {
                    Interval::new(Some(bound), None)
                } else {
                    Interval::new(None, Some(bound))
                };
                let mut nb = b[j].meet(&cut);
                if ints[j] {
                    nb = nb.round_integer();
                }
                if nb.is_empty() {
                    return None;
                }
                b[j] = nb;
            }
        }
        if b == before {
            break;
        }
    }
    for a in &atoms {
        if a.expr.coeffs.len() <= 1 {
            continue;
        }
        let v = eval_poly(&a.expr.to_poly(), &b);
        if let Some(h) = &v.hi {
            if h.is_negative() || (a.strict && h.is_zero()) {
                return None;
            }
        }
    }
    Some(b)
}
