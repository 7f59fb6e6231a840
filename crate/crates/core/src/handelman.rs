//! Handelman-style translation of entailments into linear programs, and
//! exact re-verification of the resulting certificates.

use std::collections::BTreeSet;
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use crate::linear::LinExpr;
use crate::lp::{self, LpInstance, LpStatus, Sense, SolveOptions, VarKind};
use crate::poly::{Monomial, Polynomial};
use crate::rational::Rational;
use crate::synth::{ConstraintSet, Entailment, RelKind};

pub const DEFAULT_BASIS_CAP: usize = 20_000;

/// Default size from which the floating-point pre-solve runs before the
/// exact simplex.
pub const PRESOLVE_MIN_ROWS: usize = 400;

/// Default lower bound on the slack of strict constraints, `1/10⁶`.
pub fn default_gamma_min() -> Rational {
    Rational::new(1, 1_000_000)
}

#[derive(Debug, Clone)]
pub struct HandelmanOptions {
    pub basis_cap: usize,
    pub gamma_min: Rational,
    pub deadline: Option<Instant>,
    /// Row count from which the floating-point pre-solve is tried; `None`
    /// solves exactly only.
    pub presolve_min_rows: Option<usize>,
}

impl Default for HandelmanOptions {
    fn default() -> Self {
        HandelmanOptions {
            basis_cap: DEFAULT_BASIS_CAP,
            gamma_min: default_gamma_min(),
            deadline: None,
            presolve_min_rows: Some(PRESOLVE_MIN_ROWS),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HandelmanError {
    #[error("Handelman basis for `{label}` has {size} products, above the cap of {cap}; lower the Handelman degree")]
    BasisTooLarge { label: String, size: usize, cap: usize },
    #[error("LP solve exceeded the deadline")]
    Timeout,
    #[error("exact re-check failed: {0}")]
    Recheck(String),
}

/// Products of premise atoms of total degree at most `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct HandelmanBasis {
    /// Exponent of each premise atom, one vector per product.
    pub exponents: Vec<Vec<u32>>,
    pub products: Vec<Polynomial>,
}

impl HandelmanBasis {
    pub fn len(&self) -> usize {
        self.products.len()
    }

    pub fn is_empty(&self) -> bool {
        self.products.is_empty()
    }
}

fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

/// Enumerates products by degree, then lexicographically by the
/// nondecreasing sequence of atom indices. The constant `1` comes first.
pub fn handelman_products(premise: &[LinExpr], d: u32, cap: usize) -> Result<HandelmanBasis, HandelmanError> {
    let m = premise.len();
    let size = binomial(m + d as usize, d as usize);
    if size > cap {
        return Err(HandelmanError::BasisTooLarge { label: String::new(), size, cap });
    }
    let atoms: Vec<Polynomial> = premise.iter().map(LinExpr::to_poly).collect();
    let mut exponents = vec![vec![0u32; m]];
    let mut products = vec![Polynomial::one()];
    // (last atom index, exponent vector, product) of the previous degree
    let mut frontier: Vec<(usize, Vec<u32>, Polynomial)> = vec![(0, vec![0; m], Polynomial::one())];
    for _ in 0..d {
        let mut next = Vec::new();
        for (last, e, p) in &frontier {
            for (i, a) in atoms.iter().enumerate().skip(*last) {
                let mut e2 = e.clone();
                e2[i] += 1;
                let p2 = p.mul(a);
                exponents.push(e2.clone());
                products.push(p2.clone());
                next.push((i, e2, p2));
            }
        }
        frontier = next;
    }
    Ok(HandelmanBasis { exponents, products })
}

/// One coefficient-matching equation `Σ coeffs·vars = rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub coeffs: Vec<(usize, Rational)>,
    pub rhs: Rational,
    pub monomial: Monomial,
}

/// Rows asserting `conclusion ≡ Σ λᵢ·hᵢ`, where template unknown `t` is LP
/// column `t` and `λᵢ` is column `first_lambda + i`.
pub fn entailment_to_linear(ent: &Entailment, basis: &HandelmanBasis, first_lambda: usize) -> Vec<LinearRow> {
    let mut monos: BTreeSet<Monomial> = ent.conclusion.terms().map(|(m, _)| m.clone()).collect();
    for h in &basis.products {
        monos.extend(h.terms().map(|(m, _)| m.clone()));
    }
    monos
        .into_iter()
        .map(|m| {
            let c = ent.conclusion.coeff(&m);
            let mut coeffs: Vec<(usize, Rational)> = c.terms.iter().map(|(t, k)| (*t as usize, k.clone())).collect();
            for (i, h) in basis.products.iter().enumerate() {
                let hc = h.coeff(&m);
                if !hc.is_zero() {
                    coeffs.push((first_lambda + i, -hc));
                }
            }
            LinearRow { coeffs, rhs: -c.constant, monomial: m }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct HandelmanLp {
    pub instance: LpInstance,
    pub bases: Vec<HandelmanBasis>,
    /// First multiplier column of each entailment.
    pub lambda_start: Vec<usize>,
    /// Strictness slack column, present when some relational row is strict.
    pub gamma: Option<usize>,
    pub num_template: usize,
}

pub fn bases_for(cs: &ConstraintSet, d: u32, cap: usize) -> Result<Vec<HandelmanBasis>, HandelmanError> {
    cs.entailments
        .par_iter()
        .map(|e| {
            handelman_products(&e.premise, d, cap).map_err(|err| match err {
                HandelmanError::BasisTooLarge { size, cap, .. } => {
                    HandelmanError::BasisTooLarge { label: e.label.clone(), size, cap }
                }
                other => other,
            })
        })
        .collect()
}

/// Assembles the LP: template unknowns are free columns, multipliers are
/// nonnegative, strict rows `e > 0` become `e - γ >= 0` with
/// `γ >= γ_min`. Without an explicit objective `γ` is maximized and capped
/// at one to keep the program bounded.
pub fn build_lp(cs: &ConstraintSet, d: u32, opts: &HandelmanOptions) -> Result<HandelmanLp, HandelmanError> {
    let bases = bases_for(cs, d, opts.basis_cap)?;
    let mut inst = LpInstance::new();
    for v in &cs.registry.vars {
        inst.add_var(v.name.clone(), VarKind::Free);
    }
    let num_template = cs.registry.len();
    let mut lambda_start = Vec::with_capacity(bases.len());
    for (k, b) in bases.iter().enumerate() {
        lambda_start.push(inst.num_vars());
        for i in 0..b.len() {
            inst.add_var(format!("lambda[{k}][{i}]"), VarKind::NonNeg);
        }
    }
    let rows: Vec<Vec<LinearRow>> = cs
        .entailments
        .par_iter()
        .zip(bases.par_iter())
        .zip(lambda_start.par_iter())
        .map(|((e, b), s)| entailment_to_linear(e, b, *s))
        .collect();
    for (e, rs) in cs.entailments.iter().zip(rows) {
        for r in rs {
            inst.add_row(r.coeffs, Sense::Eq, r.rhs, format!("{} @ {:?}", e.label, r.monomial));
        }
    }
    let gamma = cs.has_strict().then(|| inst.add_var("gamma", VarKind::NonNeg));
    for rel in &cs.relational {
        let mut coeffs: Vec<(usize, Rational)> = rel.expr.terms.iter().map(|(t, c)| (*t as usize, c.clone())).collect();
        let rhs = -rel.expr.constant.clone();
        let sense = match rel.kind {
            RelKind::Ge => Sense::Ge,
            RelKind::Eq => Sense::Eq,
            RelKind::Gt => {
                coeffs.push((gamma.expect("strict row implies gamma"), -Rational::one()));
                Sense::Ge
            }
        };
        inst.add_row(coeffs, sense, rhs, rel.label.clone());
    }
    if let Some(g) = gamma {
        inst.add_row(vec![(g, Rational::one())], Sense::Ge, opts.gamma_min.clone(), "gamma >= gamma_min");
    }
    match (cs.objective, gamma) {
        (Some(t), _) => inst.set_objective(vec![(t as usize, Rational::one())]),
        (None, Some(g)) => {
            inst.add_row(vec![(g, Rational::one())], Sense::Le, Rational::one(), "gamma <= 1");
            inst.set_objective(vec![(g, Rational::one())]);
        }
        (None, None) => {}
    }
    Ok(HandelmanLp { instance: inst, bases, lambda_start, gamma, num_template })
}

/// A solved and exactly re-checked constraint set.
#[derive(Debug, Clone)]
pub struct Solved {
    pub status: LpStatus,
    pub template_values: Vec<Rational>,
    pub multipliers: Vec<Vec<Rational>>,
    pub gamma: Option<Rational>,
    pub objective: Option<Rational>,
    pub pivots: usize,
}

impl HandelmanLp {
    /// Splits an LP assignment into template values and multiplier vectors.
    pub fn extract(&self, values: &[Rational]) -> (Vec<Rational>, Vec<Vec<Rational>>) {
        let tv = values[..self.num_template].to_vec();
        let mult = self
            .bases
            .iter()
            .zip(&self.lambda_start)
            .map(|(b, s)| values[*s..*s + b.len()].to_vec())
            .collect();
        (tv, mult)
    }
}

/// Solves an already assembled LP; `Ok(None)` when infeasible or undecided.
pub fn solve_lp(
    cs: &ConstraintSet,
    hl: &HandelmanLp,
    d: u32,
    opts: &HandelmanOptions,
) -> Result<Option<Solved>, HandelmanError> {
    let sopts = SolveOptions { deadline: opts.deadline, max_pivots: None };
    if opts.presolve_min_rows.is_some_and(|k| hl.instance.rows.len() >= k) {
        let f = lp::solve_float(&float_instance(hl), &sopts).map_err(|_| HandelmanError::Timeout)?;
        match f.status {
            LpStatus::Infeasible => return Ok(None),
            LpStatus::Optimal | LpStatus::Feasible => {
                if let Some(s) = repair(cs, hl, d, opts, &f) {
                    return Ok(Some(s));
                }
            }
            LpStatus::Unknown => {}
        }
    }
    let sol = lp::solve(&hl.instance, &sopts).map_err(|_| HandelmanError::Timeout)?;
    if !matches!(sol.status, LpStatus::Optimal | LpStatus::Feasible) {
        return Ok(None);
    }
    let (template_values, multipliers) = hl.extract(&sol.values);
    exact_recheck(cs, d, &template_values, &multipliers).map_err(HandelmanError::Recheck)?;
    Ok(Some(Solved {
        status: sol.status,
        gamma: hl.gamma.map(|g| sol.values[g].clone()),
        objective: sol.objective,
        template_values,
        multipliers,
        pivots: sol.pivots,
    }))
}

/// Strict slack floor used by the floating pre-solve. Far above the
/// rounding noise, so a floating answer is either clearly feasible or
/// reported infeasible.
const FLOAT_GAMMA_MIN: f64 = 1e-2;

fn float_instance(hl: &HandelmanLp) -> LpInstance {
    let mut inst = hl.instance.clone();
    if let Some(g) = hl.gamma {
        let floor = Rational::from_f64_approx(FLOAT_GAMMA_MIN, 1_000_000).expect("finite");
        for row in inst.rows.iter_mut() {
            if row.sense == Sense::Ge && row.coeffs.len() == 1 && row.coeffs[0] == (g, Rational::one()) {
                row.rhs = row.rhs.clone().max(floor.clone());
            }
        }
    }
    inst
}

/// Nearest rational with a small denominator, trying coarse ones first.
fn snap(x: f64) -> Option<Rational> {
    let tol = 1e-9 * (1.0 + x.abs());
    let mut den = 10;
    loop {
        let r = Rational::from_f64_approx(x, den)?;
        if (r.to_f64() - x).abs() <= tol || den >= 1_000_000 {
            return Some(r);
        }
        den *= 10;
    }
}

/// Largest value of template `o` keeping every relational row true when
/// the other templates are fixed; strict rows keep a margin of `γ_min`.
fn best_objective(cs: &ConstraintSet, tv: &[Rational], o: u32, gamma_min: &Rational) -> Option<Rational> {
    let mut upper: Option<Rational> = None;
    let mut lower: Option<Rational> = None;
    for r in &cs.relational {
        let Some(c) = r.expr.terms.get(&o).filter(|c| !c.is_zero()) else {
            continue;
        };
        let mut rest = r.expr.constant.clone();
        for (t, k) in &r.expr.terms {
            if *t != o {
                rest += k * &tv[*t as usize];
            }
        }
        if r.kind == RelKind::Gt {
            rest -= gamma_min;
        }
        let bound = -(&rest / c);
        if r.kind == RelKind::Eq {
            return Some(bound);
        }
        if c.is_negative() {
            upper = Some(upper.map_or(bound.clone(), |u| u.min(bound)));
        } else {
            lower = Some(lower.map_or(bound.clone(), |l| l.max(bound)));
        }
    }
    match (upper, lower) {
        (Some(u), Some(l)) if u < l => None,
        (Some(u), _) => Some(u),
        (None, _) => Some(tv[o as usize].clone()),
    }
}

/// Turns a floating pre-solve into an exact answer: template values are
/// snapped to rationals, then each entailment's multipliers come from an
/// exact solve of its own small system. `None` when anything fails.
fn repair(
    cs: &ConstraintSet,
    hl: &HandelmanLp,
    d: u32,
    opts: &HandelmanOptions,
    f: &lp::FloatSolution,
) -> Option<Solved> {
    let nt = hl.num_template;
    let mut tv: Vec<Rational> = f.values[..nt].iter().map(|&x| snap(x)).collect::<Option<_>>()?;
    if let Some(o) = cs.objective {
        if !cs.entailments.iter().any(|e| e.conclusion.template_vars().contains(&o)) {
            tv[o as usize] = best_objective(cs, &tv, o, &opts.gamma_min)?;
        }
    }
    let sopts = SolveOptions { deadline: opts.deadline, max_pivots: None };
    let mut multipliers = Vec::with_capacity(cs.entailments.len());
    for (e, b) in cs.entailments.iter().zip(&hl.bases) {
        let mut small = LpInstance::new();
        for i in 0..b.len() {
            small.add_var(format!("lambda[{i}]"), VarKind::NonNeg);
        }
        for row in entailment_to_linear(e, b, nt) {
            let mut rhs = row.rhs;
            let mut coeffs = Vec::new();
            for (j, c) in row.coeffs {
                if j < nt {
                    rhs -= &c * &tv[j];
                } else {
                    coeffs.push((j - nt, c));
                }
            }
            small.add_row(coeffs, Sense::Eq, rhs, "");
        }
        let sol = lp::solve(&small, &sopts).ok()?;
        if !matches!(sol.status, LpStatus::Optimal | LpStatus::Feasible) {
            return None;
        }
        multipliers.push(sol.values);
    }
    let gamma = hl.gamma.map(|_| {
        let value = |t: u32| tv[t as usize].clone();
        cs.relational
            .iter()
            .filter(|r| r.kind == RelKind::Gt)
            .map(|r| r.expr.evaluate(&value))
            .fold(Rational::one(), Rational::min)
    });
    if gamma.as_ref().is_some_and(|g| *g < opts.gamma_min) {
        return None;
    }
    exact_recheck(cs, d, &tv, &multipliers).ok()?;
    let objective = match cs.objective {
        Some(o) => Some(tv[o as usize].clone()),
        None => gamma.clone(),
    };
    Some(Solved { status: LpStatus::Feasible, template_values: tv, multipliers, gamma, objective, pivots: f.pivots })
}

/// Builds and solves the LP for `cs` at Handelman degree `d`.
pub fn solve_constraints(cs: &ConstraintSet, d: u32, opts: &HandelmanOptions) -> Result<Option<Solved>, HandelmanError> {
    let hl = build_lp(cs, d, opts)?;
    solve_lp(cs, &hl, d, opts)
}

/// Exact check of a candidate: multipliers nonnegative, every conclusion
/// identical to its Handelman combination, and every relational
/// constraint satisfied (strict ones strictly).
pub fn exact_recheck(
    cs: &ConstraintSet,
    d: u32,
    template_values: &[Rational],
    multipliers: &[Vec<Rational>],
) -> Result<(), String> {
    if template_values.len() != cs.registry.len() {
        return Err(format!("expected {} template values, got {}", cs.registry.len(), template_values.len()));
    }
    if multipliers.len() != cs.entailments.len() {
        return Err(format!("expected {} multiplier vectors, got {}", cs.entailments.len(), multipliers.len()));
    }
    let value = |t: u32| template_values[t as usize].clone();
    let bases = bases_for(cs, d, usize::MAX).map_err(|e| e.to_string())?;
    for ((e, b), lam) in cs.entailments.iter().zip(&bases).zip(multipliers) {
        if lam.len() != b.len() {
            return Err(format!("`{}`: expected {} multipliers, got {}", e.label, b.len(), lam.len()));
        }
        if let Some(i) = lam.iter().position(Rational::is_negative) {
            return Err(format!("`{}`: multiplier {i} is negative", e.label));
        }
        let mut combo = Polynomial::zero();
        for (h, l) in b.products.iter().zip(lam) {
            combo.add_assign_scaled(h, l);
        }
        let concl = e.conclusion.instantiate(&value);
        let diff = concl.sub(&combo);
        let first = diff.terms().next().map(|(m, c)| format!("`{}`: identity fails at monomial {m:?} by {c}", e.label));
        if let Some(msg) = first {
            return Err(msg);
        }
    }
    for r in &cs.relational {
        if !r.holds(&value) {
            return Err(format!("relational `{}` violated (value {})", r.label, r.expr.evaluate(&value)));
        }
    }
    Ok(())
}
