//! Symbolic templates and the universally quantified constraints whose
//! joint satisfiability yields a refutation certificate.

mod collect;
mod ost;

use std::fmt;

use thiserror::Error;

use crate::linear::{conj_feasible, Atom, LinExpr};
use crate::pcfg::{LocId, Pcfg, Transition, Update};
use crate::poly::{monomials_up_to, AffineExpr, Monomial, TVar, TemplatePoly, Var};
use crate::rational::Rational;

pub use collect::{
    collect_lesm_constraints, collect_uesm_constraints, lipschitz_constraints, refutation_constraint,
    similarity_constraint,
};
pub use ost::{ost_constraints, rsm_constraints, select_ost, synthesize_rsm, OstCondition, OstSelection, RsmResult};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TemplateVarKind {
    F,
    Uesm(LocId),
    Lesm(LocId),
    Rsm(LocId),
    BoundC,
    Epsilon,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateVarInfo {
    pub kind: TemplateVarKind,
    /// Monomial the unknown is the coefficient of; `1` for scalars.
    pub monomial: Monomial,
    pub name: String,
}

/// Allocator of template unknowns.
#[derive(Debug, Clone, Default)]
pub struct Registry {
    pub vars: Vec<TemplateVarInfo>,
}

impl Registry {
    pub fn fresh(&mut self, kind: TemplateVarKind, monomial: Monomial, name: String) -> TVar {
        self.vars.push(TemplateVarInfo { kind, monomial, name });
        (self.vars.len() - 1) as TVar
    }

    pub fn len(&self) -> usize {
        self.vars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vars.is_empty()
    }

    pub fn find(&self, kind: &TemplateVarKind) -> Option<TVar> {
        self.vars.iter().position(|v| &v.kind == kind).map(|i| i as TVar)
    }

    /// Dense polynomial of degree `d` over `vars` with fresh coefficients.
    pub fn template(&mut self, kind: TemplateVarKind, prefix: &str, vars: &[Var], names: &[String], d: u32) -> TemplatePoly {
        let mut p = TemplatePoly::zero();
        for m in monomials_up_to(vars, d) {
            let mname = monomial_name(&m, names);
            let t = self.fresh(kind.clone(), m.clone(), format!("{prefix}[{mname}]"));
            p.add_term(m, &AffineExpr::var(t));
        }
        p
    }
}

pub(crate) fn monomial_name(m: &Monomial, names: &[String]) -> String {
    struct D<'a>(&'a Monomial, &'a [String]);
    impl fmt::Display for D<'_> {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            self.0.fmt_with(f, &|v| self.1.get(v as usize).cloned().unwrap_or_else(|| format!("x{v}")))
        }
    }
    D(m, names).to_string()
}

/// `f` over output coordinates plus one template per location of each program.
#[derive(Debug, Clone)]
pub struct Templates {
    pub f: TemplatePoly,
    /// `f` with coordinates renamed to the output variables of each program.
    pub f1: TemplatePoly,
    pub f2: TemplatePoly,
    pub u: Vec<TemplatePoly>,
    pub l: Vec<TemplatePoly>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SynthError {
    #[error("programs return different numbers of values ({0} vs {1})")]
    OutputArity(usize, usize),
    #[error("template degree must be at least 1")]
    ZeroDegree,
    #[error("similarity threshold must be positive, got {0}")]
    NonPositiveEpsilon(Rational),
}

/// Names of the output coordinates, taken from the first program.
pub fn output_names(p1: &Pcfg) -> Vec<String> {
    p1.out_var_names()
}

pub fn make_templates(p1: &Pcfg, p2: &Pcfg, d: u32, reg: &mut Registry) -> Result<Templates, SynthError> {
    if d == 0 {
        return Err(SynthError::ZeroDegree);
    }
    let k = p1.out_vars.len();
    if k != p2.out_vars.len() {
        return Err(SynthError::OutputArity(k, p2.out_vars.len()));
    }
    let coords: Vec<Var> = (0..k as Var).collect();
    let f = reg.template(TemplateVarKind::F, "f", &coords, &output_names(p1), d);
    let f1 = f.rename(|j| p1.out_vars[j as usize]);
    let f2 = f.rename(|j| p2.out_vars[j as usize]);
    let all = |p: &Pcfg| (0..p.num_vars() as Var).collect::<Vec<_>>();
    let u = (0..p1.num_locations())
        .map(|l| reg.template(TemplateVarKind::Uesm(l), &format!("u[{}]", p1.labels[l]), &all(p1), &p1.vars, d))
        .collect();
    let l = (0..p2.num_locations())
        .map(|l| reg.template(TemplateVarKind::Lesm(l), &format!("l[{}]", p2.labels[l]), &all(p2), &p2.vars, d))
        .collect();
    Ok(Templates { f, f1, f2, u, l })
}

/// `Σ_{ℓ'} Pr(ℓ')·E[q_{ℓ'}(N) + g(N)]` for the successor state `N` of `t`.
pub fn pre_expectation(q: &[TemplatePoly], t: &Transition, g: &TemplatePoly) -> TemplatePoly {
    let mut acc = TemplatePoly::zero();
    for (l, p) in t.succ_dist() {
        acc.add_assign_scaled(&q[l].add(g), &p);
    }
    apply_update(&acc, &t.update)
}

fn apply_update(p: &TemplatePoly, u: &Update) -> TemplatePoly {
    match u {
        Update::None => p.clone(),
        Update::Assign { var, expr } => p.substitute(*var, expr),
        Update::Sample { var, dist } => p.expect_var(*var, &|k| dist.raw_moment(k)),
    }
}

/// `premise ⇒ conclusion >= 0` over `nvars` real variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Entailment {
    pub nvars: usize,
    /// Each expression is required to be nonnegative.
    pub premise: Vec<LinExpr>,
    pub conclusion: TemplatePoly,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RelKind {
    Ge,
    Gt,
    Eq,
}

/// `expr (>=|>|=) 0` over template unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct Relational {
    pub expr: AffineExpr,
    pub kind: RelKind,
    pub label: String,
}

impl Relational {
    pub fn holds(&self, value: &dyn Fn(TVar) -> Rational) -> bool {
        let v = self.expr.evaluate(value);
        match self.kind {
            RelKind::Ge => !v.is_negative(),
            RelKind::Gt => v.is_positive(),
            RelKind::Eq => v.is_zero(),
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct ConstraintSet {
    pub registry: Registry,
    pub entailments: Vec<Entailment>,
    pub relational: Vec<Relational>,
    /// Template unknown to maximize.
    pub objective: Option<TVar>,
}

impl ConstraintSet {
    pub fn has_strict(&self) -> bool {
        self.relational.iter().any(|r| r.kind == RelKind::Gt)
    }
}

/// Builds a premise from invariant and guard atoms: atoms over integer
/// variables are tightened, other strict atoms relaxed, constant-true atoms
/// dropped and duplicates removed. `None` when the premise is unsatisfiable.
pub fn make_premise(atoms: &[Atom], ints: &[bool], nvars: usize) -> Option<Vec<LinExpr>> {
    let all_int = |a: &Atom| a.expr.coeffs.keys().all(|v| ints.get(*v as usize).copied().unwrap_or(false));
    let mut out: Vec<LinExpr> = Vec::new();
    let mut exact = Vec::new();
    for a in atoms {
        match a.constant_truth() {
            Some(true) => continue,
            Some(false) => return None,
            None => {}
        }
        exact.push(a.clone());
        let e = if all_int(a) { a.tighten_integer().expr } else { a.expr.clone() };
        if e.is_constant() {
            if e.constant.is_negative() {
                return None;
            }
            continue;
        }
        if !out.contains(&e) {
            out.push(e);
        }
    }
    if !conj_feasible(&exact, nvars) {
        return None;
    }
    let relaxed: Vec<Atom> = out.iter().cloned().map(Atom::ge).collect();
    conj_feasible(&relaxed, nvars).then_some(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Equivalence,
    Similarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    L1,
    L2,
    Discrete,
    Uniform,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::L1 => "l1",
            Metric::L2 => "l2",
            Metric::Discrete => "discrete",
            Metric::Uniform => "uniform",
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        match s {
            "l1" => Some(Metric::L1),
            "l2" => Some(Metric::L2),
            "discrete" => Some(Metric::Discrete),
            "uniform" => Some(Metric::Uniform),
            _ => None,
        }
    }

    /// Whether the metric needs finite first moments of the outputs.
    pub fn needs_bounded_outputs(&self) -> bool {
        !matches!(self, Metric::Discrete)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EpsilonSpec {
    Fixed(Rational),
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthConfig {
    pub mode: Mode,
    pub metric: Metric,
    pub epsilon: EpsilonSpec,
    pub degree: u32,
    pub ost: OstCondition,
}

/// Everything needed to instantiate and check one refutation attempt.
#[derive(Debug, Clone)]
pub struct Problem {
    pub constraints: ConstraintSet,
    pub templates: Templates,
}

/// Collects every constraint of one synthesis attempt in a stable order:
/// UESM, LESM, Lipschitz, optional stopping, then the relational ones.
pub fn build_constraints(
    p1: &Pcfg,
    inv1: &crate::invariant::Invariant,
    p2: &Pcfg,
    inv2: &crate::invariant::Invariant,
    cfg: &SynthConfig,
) -> Result<Problem, SynthError> {
    let mut reg = Registry::default();
    let t = make_templates(p1, p2, cfg.degree, &mut reg)?;
    let mut ents = collect_uesm_constraints(p1, inv1, &t.u, &t.f1);
    ents.extend(collect_lesm_constraints(p2, inv2, &t.l, &t.f2));
    let mut relational = Vec::new();
    let mut objective = None;
    match cfg.mode {
        Mode::Equivalence => relational.push(refutation_constraint(p1, p2, &t)),
        Mode::Similarity => {
            ents.extend(lipschitz_constraints(&t.f, cfg.metric, p1, inv1, p2, inv2));
            let (rel, obj) = similarity_constraint(p1, p2, &t, &cfg.epsilon, &mut reg)?;
            relational.push(rel);
            objective = obj;
        }
    }
    let (ost_ents, ost_rel) = ost_constraints(cfg.ost, &t, p1, inv1, p2, inv2, &mut reg);
    ents.extend(ost_ents);
    relational.extend(ost_rel);
    Ok(Problem { constraints: ConstraintSet { registry: reg, entailments: ents, relational, objective }, templates: t })
}

#[cfg(test)]
mod tests;
