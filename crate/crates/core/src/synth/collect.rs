use super::{
    make_premise, pre_expectation, EpsilonSpec, Entailment, Metric, Registry, RelKind, Relational, SynthError,
    TemplateVarKind, Templates,
};
use crate::invariant::Invariant;
use crate::linear::{Atom, LinExpr};
use crate::pcfg::Pcfg;
use crate::poly::{AffineExpr, Monomial, TVar, TemplatePoly, Var};
use crate::rational::Rational;

/// Zero-on-output plus one decrease (`sign = 1`) or increase (`sign = -1`)
/// entailment per non-terminal transition and guard cell.
fn martingale_entailments(p: &Pcfg, inv: &Invariant, eta: &[TemplatePoly], f: &TemplatePoly, sign: i64, tag: &str) -> Vec<Entailment> {
    let n = p.num_vars();
    let ints = p.integer_vars();
    let mut out = Vec::new();
    if let Some(pr) = make_premise(inv.at(p.out), &ints, n) {
        for (s, conclusion) in [(">=", eta[p.out].clone()), ("<=", eta[p.out].neg())] {
            out.push(Entailment {
                nvars: n,
                premise: pr.clone(),
                conclusion,
                label: format!("{tag} zero {} {s}", p.labels[p.out]),
            });
        }
    }
    let sign = Rational::from(sign);
    for (i, t) in p.non_terminal() {
        let here = eta[t.source].add(f);
        let conclusion = here.sub(&pre_expectation(eta, t, f)).scale(&sign);
        for (c, cell) in t.guard.cells().iter().enumerate() {
            let mut atoms = inv.at(t.source).to_vec();
            atoms.extend(cell.iter().cloned());
            if let Some(pr) = make_premise(&atoms, &ints, n) {
                out.push(Entailment {
                    nvars: n,
                    premise: pr,
                    conclusion: conclusion.clone(),
                    label: format!("{tag} t{i} {} cell{c}", p.labels[t.source]),
                });
            }
        }
    }
    out
}

/// UESM conditions: `U` vanishes at `l_out` and `U + f` decreases in expectation.
pub fn collect_uesm_constraints(p: &Pcfg, inv: &Invariant, u: &[TemplatePoly], f: &TemplatePoly) -> Vec<Entailment> {
    martingale_entailments(p, inv, u, f, 1, "uesm")
}

/// LESM conditions: `L` vanishes at `l_out` and `L + f` increases in expectation.
pub fn collect_lesm_constraints(p: &Pcfg, inv: &Invariant, l: &[TemplatePoly], f: &TemplatePoly) -> Vec<Entailment> {
    martingale_entailments(p, inv, l, f, -1, "lesm")
}

/// `(L + f)(init₂) - (U + f)(init₁)` as an affine expression.
fn init_gap(p1: &Pcfg, p2: &Pcfg, t: &Templates) -> AffineExpr {
    let upper = t.u[p1.init].add(&t.f1).evaluate_at(&p1.init_valuation);
    let lower = t.l[p2.init].add(&t.f2).evaluate_at(&p2.init_valuation);
    lower.sub(&upper)
}

/// `U(init₁) + f(init₁) < L(init₂) + f(init₂)`.
pub fn refutation_constraint(p1: &Pcfg, p2: &Pcfg, t: &Templates) -> Relational {
    Relational { expr: init_gap(p1, p2, t), kind: RelKind::Gt, label: "refutation".into() }
}

/// `L(init₂) + f(init₂) - U(init₁) - f(init₁) >= ε`, with `ε` either fixed or
/// a fresh unknown that becomes the objective.
pub fn similarity_constraint(
    p1: &Pcfg,
    p2: &Pcfg,
    t: &Templates,
    eps: &EpsilonSpec,
    reg: &mut Registry,
) -> Result<(Relational, Option<TVar>), SynthError> {
    let gap = init_gap(p1, p2, t);
    let (expr, obj) = match eps {
        EpsilonSpec::Fixed(e) => {
            if !e.is_positive() {
                return Err(SynthError::NonPositiveEpsilon(e.clone()));
            }
            (gap.sub(&AffineExpr::constant(e.clone())), None)
        }
        EpsilonSpec::Maximize => {
            let v = reg.fresh(TemplateVarKind::Epsilon, Monomial::one(), "epsilon".into());
            (gap.sub(&AffineExpr::var(v)), Some(v))
        }
    };
    Ok((Relational { expr, kind: RelKind::Ge, label: "similarity".into() }, obj))
}

/// Atoms of `I(l_out)` that mention only output variables, over output
/// coordinates shifted by `offset`.
fn output_atoms(p: &Pcfg, inv: &Invariant, offset: Var) -> Vec<Atom> {
    let coord = |v: Var| p.out_vars.iter().position(|o| *o == v);
    inv.at(p.out)
        .iter()
        .filter(|a| a.expr.coeffs.keys().all(|v| coord(*v).is_some()))
        .map(|a| Atom { expr: a.expr.rename(|v| coord(v).unwrap() as Var + offset), strict: a.strict })
        .collect()
}

fn output_ints(p: &Pcfg) -> Vec<bool> {
    let ints = p.integer_vars();
    p.out_vars.iter().map(|v| ints[*v as usize]).collect()
}

/// 1-Lipschitz continuity of `f` with respect to `metric`, over doubled
/// output coordinates `x` (from `0`) and `y` (from `k`), for every ordered
/// pair of the two programs' output invariants.
pub fn lipschitz_constraints(
    f: &TemplatePoly,
    metric: Metric,
    p1: &Pcfg,
    inv1: &Invariant,
    p2: &Pcfg,
    inv2: &Invariant,
) -> Vec<Entailment> {
    let k = p1.out_vars.len() as Var;
    let fy = f.rename(|j| j + k);
    let diff = f.sub(&fy);
    let one = Rational::one();
    let gap = |j: Var| LinExpr::from_terms(Rational::zero(), [(j, one.clone()), (j + k, -one.clone())]);
    let (aux, conclusion): (Vec<Atom>, TemplatePoly) = match metric {
        Metric::L1 => {
            let mut atoms = Vec::new();
            let mut sum = TemplatePoly::zero();
            for j in 0..k {
                let a = LinExpr::var(2 * k + j);
                atoms.push(Atom::ge(a.sub(&gap(j))));
                atoms.push(Atom::ge(a.add(&gap(j))));
                sum.add_term(Monomial::var(2 * k + j), &AffineExpr::constant(one.clone()));
            }
            (atoms, sum.sub(&diff))
        }
        Metric::L2 | Metric::Uniform => {
            let a = LinExpr::var(2 * k);
            let atoms = (0..k).flat_map(|j| [Atom::ge(a.sub(&gap(j))), Atom::ge(a.add(&gap(j)))]).collect();
            let bound = TemplatePoly::term(Monomial::var(2 * k), AffineExpr::constant(one.clone()));
            (atoms, bound.sub(&diff))
        }
        Metric::Discrete => (Vec::new(), TemplatePoly::constant(AffineExpr::constant(one.clone())).sub(&diff)),
    };
    let naux = match metric {
        Metric::L1 => k,
        Metric::L2 | Metric::Uniform => 1,
        Metric::Discrete => 0,
    };
    let nvars = (2 * k + naux) as usize;
    let progs = [("a", p1, inv1), ("b", p2, inv2)];
    let mut out = Vec::new();
    for (na, pa, ia) in progs {
        for (nb, pb, ib) in progs {
            let mut atoms = output_atoms(pa, ia, 0);
            atoms.extend(output_atoms(pb, ib, k));
            atoms.extend(aux.iter().cloned());
            let mut ints = output_ints(pa);
            ints.extend(output_ints(pb));
            ints.resize(nvars, false);
            if let Some(premise) = make_premise(&atoms, &ints, nvars) {
                out.push(Entailment {
                    nvars,
                    premise,
                    conclusion: conclusion.clone(),
                    label: format!("lipschitz {} {na}-{nb}", metric.name()),
                });
            }
        }
    }
    out
}
