//! Forward simulation of a pCFG.
//!
//! [`CompiledPcfg`] lowers guards, updates and successor distributions to
//! `f64` form once so that long Monte-Carlo runs stay cheap. An exact
//! rational stepper is provided for checking properties at reachable states.

use rand::Rng;
use thiserror::Error;

use super::{LocId, Pcfg, Update};
use crate::dist::DistributionSpec;
use crate::linear::{Atom, Dnf};
use crate::poly::Polynomial;
use crate::rational::Rational;

/// Polynomial with `f64` coefficients, evaluated term by term.
#[derive(Debug, Clone)]
pub struct CPoly {
    constant: f64,
    linear: Vec<(usize, f64)>,
    higher: Vec<(f64, Vec<(usize, i32)>)>,
}

impl CPoly {
    pub fn compile(p: &Polynomial) -> Self {
        let mut out = CPoly { constant: 0.0, linear: Vec::new(), higher: Vec::new() };
        for (m, c) in p.terms() {
            let c = c.to_f64();
            match m.degree() {
                0 => out.constant = c,
                1 => out.linear.push((m.pairs()[0].0 as usize, c)),
                _ => out.higher.push((c, m.pairs().iter().map(|(v, e)| (*v as usize, *e as i32)).collect())),
            }
        }
        out
    }

    #[inline]
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut acc = self.constant;
        for (v, c) in &self.linear {
            acc += c * x[*v];
        }
        for (c, m) in &self.higher {
            let mut t = *c;
            for (v, e) in m {
                t *= x[*v].powi(*e);
            }
            acc += t;
        }
        acc
    }
}

#[derive(Debug, Clone)]
pub struct CAtom {
    constant: f64,
    coeffs: Vec<(usize, f64)>,
    strict: bool,
}

impl CAtom {
    pub fn compile(a: &Atom) -> Self {
        CAtom {
            constant: a.expr.constant.to_f64(),
            coeffs: a.expr.coeffs.iter().map(|(v, c)| (*v as usize, c.to_f64())).collect(),
            strict: a.strict,
        }
    }

    #[inline]
    pub fn holds(&self, x: &[f64]) -> bool {
        let mut v = self.constant;
        for (i, c) in &self.coeffs {
            v += c * x[*i];
        }
        if self.strict {
            v > 0.0
        } else {
            v >= 0.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct CGuard(Vec<Vec<CAtom>>);

impl CGuard {
    pub fn compile(d: &Dnf) -> Self {
        CGuard(d.cells().iter().map(|c| c.iter().map(CAtom::compile).collect()).collect())
    }

    #[inline]
    pub fn holds(&self, x: &[f64]) -> bool {
        self.0.iter().any(|c| c.iter().all(|a| a.holds(x)))
    }
}

#[derive(Debug, Clone)]
enum CUpdate {
    None,
    Assign(usize, CPoly),
    Sample(usize, DistributionSpec),
}

#[derive(Debug, Clone)]
struct CTrans {
    guard: CGuard,
    /// Successors with cumulative probabilities.
    succ: Vec<(LocId, f64)>,
    update: CUpdate,
}

#[derive(Debug, Clone)]
pub struct CompiledPcfg {
    trans: Vec<Vec<CTrans>>,
    pub init: LocId,
    pub out: LocId,
    pub init_vals: Vec<f64>,
    pub out_vars: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub loc: LocId,
    pub vals: Vec<f64>,
}

/// A run did not reach the terminal location within the step budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("run censored after {steps} steps")]
pub struct Censored {
    pub steps: u64,
}

impl CompiledPcfg {
    pub fn new(p: &Pcfg) -> Self {
        let mut trans: Vec<Vec<CTrans>> = vec![Vec::new(); p.num_locations()];
        for t in &p.transitions {
            let mut acc = 0.0;
            let succ = t
                .succ
                .iter()
                .map(|(l, q)| {
                    acc += q.to_f64();
                    (*l, acc)
                })
                .collect();
            let update = match &t.update {
                Update::None => CUpdate::None,
                Update::Assign { var, expr } => CUpdate::Assign(*var as usize, CPoly::compile(expr)),
                Update::Sample { var, dist } => CUpdate::Sample(*var as usize, dist.clone()),
            };
            trans[t.source].push(CTrans { guard: CGuard::compile(&t.guard), succ, update });
        }
        CompiledPcfg {
            trans,
            init: p.init,
            out: p.out,
            init_vals: p.init_valuation.iter().map(Rational::to_f64).collect(),
            out_vars: p.out_vars.iter().map(|v| *v as usize).collect(),
        }
    }

    pub fn initial_state(&self) -> State {
        State { loc: self.init, vals: self.init_vals.clone() }
    }

    pub fn outputs(&self, s: &State) -> Vec<f64> {
        self.out_vars.iter().map(|v| s.vals[*v]).collect()
    }
}

/// Successor index for a uniform draw `u` over cumulative probabilities.
#[inline]
fn pick(succ: &[(LocId, f64)], u: f64) -> LocId {
    for (l, c) in succ {
        if u < *c {
            return *l;
        }
    }
    succ[succ.len() - 1].0
}

/// Takes one transition. Returns `false` when no transition is enabled.
///
/// A successor distribution with more than one entry consumes one uniform
/// draw; a sampling update then consumes the distribution's own draws.
#[inline]
pub fn step<R: Rng + ?Sized>(cp: &CompiledPcfg, s: &mut State, rng: &mut R) -> bool {
    let ts = &cp.trans[s.loc];
    let Some(k) = ts.iter().position(|t| t.guard.holds(&s.vals)) else {
        return false;
    };
    debug_assert!(
        ts[k + 1..].iter().all(|t| !t.guard.holds(&s.vals)),
        "several transitions enabled at location {}",
        s.loc
    );
    let t = &ts[k];
    let next = if t.succ.len() == 1 { t.succ[0].0 } else { pick(&t.succ, rng.random::<f64>()) };
    match &t.update {
        CUpdate::None => {}
        CUpdate::Assign(v, p) => s.vals[*v] = p.eval(&s.vals),
        CUpdate::Sample(v, d) => s.vals[*v] = d.sample(rng),
    }
    s.loc = next;
    true
}

/// Runs from the initial state until the terminal location is reached and
/// returns the output values.
pub fn run_to_termination<R: Rng + ?Sized>(cp: &CompiledPcfg, rng: &mut R, max_steps: u64) -> Result<Vec<f64>, Censored> {
    let mut s = cp.initial_state();
    let mut n = 0u64;
    while s.loc != cp.out {
        if n >= max_steps || !step(cp, &mut s, rng) {
            return Err(Censored { steps: n });
        }
        n += 1;
    }
    Ok(cp.outputs(&s))
}

/// Exact stepping over rationals. Continuous draws are converted from `f64`.
pub fn step_exact<R: Rng + ?Sized>(p: &Pcfg, loc: LocId, vals: &mut [Rational], rng: &mut R) -> Option<LocId> {
    let t = p.outgoing(loc).map(|(_, t)| t).find(|t| t.guard.holds(vals))?;
    let next = if t.succ.len() == 1 {
        t.succ[0].0
    } else {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut next = t.succ[t.succ.len() - 1].0;
        for (l, q) in &t.succ {
            acc += q.to_f64();
            if u < acc {
                next = *l;
                break;
            }
        }
        next
    };
    match &t.update {
        Update::None => {}
        Update::Assign { var, expr } => vals[*var as usize] = expr.evaluate(vals),
        Update::Sample { var, dist } => {
            let x = dist.sample(rng);
            vals[*var as usize] = exact_draw(dist, x);
        }
    }
    Some(next)
}

fn exact_draw(dist: &DistributionSpec, x: f64) -> Rational {
    if let Some(pts) = dist.finite_support() {
        if let Some(r) = pts.iter().find(|r| r.to_f64() == x) {
            return r.clone();
        }
    }
    Rational::from_f64_approx(x, 1 << 20).unwrap_or_default()
}

/// States visited by `runs` exact simulations of at most `max_steps` steps.
pub fn reachable_states<R: Rng + ?Sized>(
    p: &Pcfg,
    rng: &mut R,
    runs: usize,
    max_steps: usize,
) -> Vec<(LocId, Vec<Rational>)> {
    let mut out = Vec::new();
    for _ in 0..runs {
        let mut loc = p.init;
        let mut vals = p.init_valuation.clone();
        out.push((loc, vals.clone()));
        for _ in 0..max_steps {
            if loc == p.out {
                break;
            }
            match step_exact(p, loc, &mut vals, rng) {
                Some(l) => loc = l,
                None => break,
            }
            out.push((loc, vals.clone()));
        }
    }
    out
}
