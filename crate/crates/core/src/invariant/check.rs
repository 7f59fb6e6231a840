use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Invariant;
use crate::linear::{affine_of, conj_witness, Atom, LinExpr};
use crate::pcfg::{step, CompiledPcfg, Pcfg, Update};
use crate::rational::Rational;

const SAMPLE_BUDGET: u64 = 10_000_000;
const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum ViolationKind {
    /// A simulated run visited a state outside the invariant.
    Sampled { valuation: Vec<f64> },
    /// An exact one-step counterexample through `transition`.
    OneStep { transition: usize, valuation: Vec<Rational> },
    /// The initial valuation is outside `I(l_init)`.
    Initial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub location: String,
    pub atom: String,
    pub kind: ViolationKind,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct InductivenessReport {
    pub violations: Vec<Violation>,
    pub runs: usize,
    pub censored: usize,
}

impl InductivenessReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn atom_text(a: &Atom, p: &Pcfg) -> String {
    struct D<'a>(&'a Atom, &'a Pcfg);
    impl std::fmt::Display for D<'_> {
        fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
            self.0.fmt_with(f, &|v| self.1.vars[v as usize].clone())
        }
    }
    D(a, p).to_string()
}

fn holds_approx(a: &Atom, x: &[f64]) -> bool {
    let mut v = a.expr.constant.to_f64();
    let mut scale = v.abs();
    for (i, c) in &a.expr.coeffs {
        let t = c.to_f64() * x[*i as usize];
        v += t;
        scale += t.abs();
    }
    v >= -TOLERANCE * (1.0 + scale)
}

fn tighten(a: &Atom, ints: &[bool]) -> Atom {
    if a.expr.coeffs.keys().all(|v| ints.get(*v as usize).copied().unwrap_or(false)) {
        a.tighten_integer()
    } else {
        a.clone()
    }
}

/// Samples `n_samples` runs checking every visited state, then checks
/// one-step preservation exactly for transitions with affine updates.
pub fn check_inductive(p: &Pcfg, inv: &Invariant, n_samples: usize, seed: u64) -> InductivenessReport {
    let mut report = InductivenessReport::default();
    if let Some(a) = inv.at(p.init).iter().find(|a| !a.holds(&p.init_valuation)) {
        report.violations.push(Violation {
            location: p.labels[p.init].clone(),
            atom: atom_text(a, p),
            kind: ViolationKind::Initial,
        });
    }
    one_step(p, inv, &mut report);
    let cp = CompiledPcfg::new(p);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    'runs: for _ in 0..n_samples {
        report.runs += 1;
        let mut s = cp.initial_state();
        let mut n = 0u64;
        loop {
            if let Some(a) = inv.at(s.loc).iter().find(|a| !holds_approx(a, &s.vals)) {
                report.violations.push(Violation {
                    location: p.labels[s.loc].clone(),
                    atom: atom_text(a, p),
                    kind: ViolationKind::Sampled { valuation: s.vals.clone() },
                });
                break 'runs;
            }
            if s.loc == p.out {
                break;
            }
            if n >= SAMPLE_BUDGET || !step(&cp, &mut s, &mut rng) {
                report.censored += 1;
                break;
            }
            n += 1;
        }
    }
    report
}

fn one_step(p: &Pcfg, inv: &Invariant, report: &mut InductivenessReport) {
    let n = p.num_vars();
    let ints = p.integer_vars();
    for (ti, t) in p.non_terminal() {
        // Image of a target atom under the update, as constraints over the
        // source variables plus possibly one fresh variable (index n).
        let image = |a: &Atom| -> Option<(Atom, Vec<Atom>, bool)> {
            match &t.update {
                Update::None => Some((a.clone(), Vec::new(), false)),
                Update::Assign { var, expr } => {
                    if a.expr.coeff(*var).is_zero() {
                        return Some((a.clone(), Vec::new(), false));
                    }
                    let e = affine_of(expr)?;
                    Some((Atom { expr: a.expr.substitute(*var, &e), strict: a.strict }, Vec::new(), false))
                }
                Update::Sample { var, dist } => {
                    let xi = n as u32;
                    let e = a.expr.substitute(*var, &LinExpr::var(xi));
                    let (lo, hi) = dist.support_hull();
                    let mut side = Vec::new();
                    if let Some(lo) = lo {
                        side.push(Atom::ge(LinExpr::from_terms(-lo, [(xi, Rational::one())])));
                    }
                    if let Some(hi) = hi {
                        side.push(Atom::ge(LinExpr::from_terms(hi, [(xi, -Rational::one())])));
                    }
                    Some((Atom { expr: e, strict: a.strict }, side, dist.is_integer_valued()))
                }
            }
        };
        for cell in t.guard.cells() {
            for (l, q) in &t.succ {
                if !q.is_positive() {
                    continue;
                }
                for a in inv.at(*l) {
                    let Some((img, side, xi_int)) = image(a) else { continue };
                    let mut ints_ext = ints.clone();
                    ints_ext.push(xi_int);
                    let mut premise: Vec<Atom> =
                        inv.at(t.source).iter().chain(cell.iter()).map(|b| tighten(b, &ints_ext)).collect();
                    premise.extend(side);
                    premise.push(tighten(&img.negate(), &ints_ext));
                    if let Some(w) = conj_witness(&premise, n + 1) {
                        report.violations.push(Violation {
                            location: p.labels[*l].clone(),
                            atom: atom_text(a, p),
                            kind: ViolationKind::OneStep { transition: ti, valuation: w[..n].to_vec() },
                        });
                        return;
                    }
                }
            }
        }
    }
}
