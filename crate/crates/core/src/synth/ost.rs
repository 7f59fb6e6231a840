use super::{make_premise, pre_expectation, ConstraintSet, Entailment, Registry, RelKind, Relational, TemplateVarKind, Templates};
use crate::handelman::{self, HandelmanOptions};
use crate::invariant::Invariant;
use crate::linear::{Atom, LinExpr};
use crate::pcfg::{check_bounded_updates_with, check_statically_bounded_with, Pcfg, Update};
use crate::poly::{AffineExpr, Monomial, Polynomial, TemplatePoly, Var};
use crate::rational::Rational;

/// Side condition licensing optional stopping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OstCondition {
    /// Bounded termination time.
    C1,
    /// Bounded process.
    C2,
    /// Finite expected termination time and bounded one-step change.
    C3,
    /// Exponential tails and polynomially bounded change.
    C4,
}

impl OstCondition {
    pub fn name(&self) -> &'static str {
        match self {
            OstCondition::C1 => "c1",
            OstCondition::C2 => "c2",
            OstCondition::C3 => "c3",
            OstCondition::C4 => "c4",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "c1" => Some(OstCondition::C1),
            "c2" => Some(OstCondition::C2),
            "c3" => Some(OstCondition::C3),
            "c4" => Some(OstCondition::C4),
            _ => None,
        }
    }
}

type Family<'a> = (&'a Pcfg, &'a Invariant, &'a [TemplatePoly], &'a TemplatePoly, &'static str);

/// Extra entailments (and relational constraints) for the chosen condition,
/// imposed on both programs.
pub fn ost_constraints(
    cond: OstCondition,
    t: &Templates,
    p1: &Pcfg,
    inv1: &Invariant,
    p2: &Pcfg,
    inv2: &Invariant,
    reg: &mut Registry,
) -> (Vec<Entailment>, Vec<Relational>) {
    let fams: [Family; 2] = [(p1, inv1, &t.u, &t.f1, "a"), (p2, inv2, &t.l, &t.f2, "b")];
    match cond {
        OstCondition::C1 | OstCondition::C4 => (Vec::new(), Vec::new()),
        OstCondition::C2 => {
            let c = reg.fresh(TemplateVarKind::BoundC, Monomial::one(), "C".into());
            let ents = fams.iter().flat_map(|fam| bounded_process(fam, c)).collect();
            let rel = Relational { expr: AffineExpr::var(c), kind: RelKind::Gt, label: "C > 0".into() };
            (ents, vec![rel])
        }
        OstCondition::C3 => {
            let c = reg.fresh(TemplateVarKind::BoundC, Monomial::one(), "C".into());
            (fams.iter().flat_map(|fam| bounded_change(fam, c)).collect(), Vec::new())
        }
    }
}

fn bound_pair(nvars: usize, premise: Vec<LinExpr>, e: &TemplatePoly, c: u32, label: String) -> [Entailment; 2] {
    let cpoly = TemplatePoly::constant(AffineExpr::var(c));
    [
        Entailment { nvars, premise: premise.clone(), conclusion: cpoly.sub(e), label: format!("{label} upper") },
        Entailment { nvars, premise, conclusion: cpoly.add(e), label: format!("{label} lower") },
    ]
}

/// `|η(ℓ, x) + f(x)| <= C` on every `I(ℓ)`.
fn bounded_process(&(p, inv, eta, f, tag): &Family, c: u32) -> Vec<Entailment> {
    let ints = p.integer_vars();
    let n = p.num_vars();
    let mut out = Vec::new();
    for l in 0..p.num_locations() {
        if let Some(pr) = make_premise(inv.at(l), &ints, n) {
            out.extend(bound_pair(n, pr, &eta[l].add(f), c, format!("c2 {tag} {}", p.labels[l])));
        }
    }
    out
}

/// `|η(ℓ, x) + f(x) - η(ℓ', N) - f(N)| <= C` for every transition,
/// successor and support cell of the sampled value.
fn bounded_change(&(p, inv, eta, f, tag): &Family, c: u32) -> Vec<Entailment> {
    let ints = p.integer_vars();
    let n = p.num_vars();
    let xi = n as Var;
    let mut out = Vec::new();
    for (i, t) in p.non_terminal() {
        let here = eta[t.source].add(f);
        // (successor substitution, extra premise atoms, universe size)
        let cases: Vec<(Option<Polynomial>, Vec<Atom>, usize)> = match &t.update {
            Update::None => vec![(None, Vec::new(), n)],
            Update::Assign { expr, .. } => vec![(Some(expr.clone()), Vec::new(), n)],
            Update::Sample { dist, .. } => match dist.finite_support() {
                Some(pts) => pts.into_iter().map(|v| (Some(Polynomial::from_rational(v)), Vec::new(), n)).collect(),
                None => {
                    let (lo, hi) = dist.support_hull();
                    let mut atoms = Vec::new();
                    if let Some(lo) = lo {
                        atoms.push(Atom::ge(LinExpr::from_terms(-lo, [(xi, Rational::one())])));
                    }
                    if let Some(hi) = hi {
                        atoms.push(Atom::ge(LinExpr::from_terms(hi, [(xi, -Rational::one())])));
                    }
                    vec![(Some(Polynomial::var(xi)), atoms, n + 1)]
                }
            },
        };
        for (l2, _) in t.succ_dist() {
            let next_val = eta[l2].add(f);
            for (k, (subst, extra, nvars)) in cases.iter().enumerate() {
                let next = match (subst, t.update.target()) {
                    (Some(e), Some(v)) => next_val.substitute(v, e),
                    _ => next_val.clone(),
                };
                let diff = here.sub(&next);
                for (ci, cell) in t.guard.cells().iter().enumerate() {
                    let mut atoms = inv.at(t.source).to_vec();
                    atoms.extend(cell.iter().cloned());
                    atoms.extend(extra.iter().cloned());
                    if let Some(pr) = make_premise(&atoms, &ints, *nvars) {
                        let label = format!("c3 {tag} t{i} ->{} case{k} cell{ci}", p.labels[l2]);
                        out.extend(bound_pair(*nvars, pr, &diff, c, label));
                    }
                }
            }
        }
    }
    out
}

/// Ranking supermartingale conditions with `R(l_out) = 0`: nonnegativity
/// on every other invariant and expected decrease by at least one.
pub fn rsm_constraints(p: &Pcfg, inv: &Invariant, d: u32) -> (ConstraintSet, Vec<TemplatePoly>) {
    let mut reg = Registry::default();
    let vars: Vec<Var> = (0..p.num_vars() as Var).collect();
    let r: Vec<TemplatePoly> = (0..p.num_locations())
        .map(|l| {
            if l == p.out {
                TemplatePoly::zero()
            } else {
                reg.template(TemplateVarKind::Rsm(l), &format!("r[{}]", p.labels[l]), &vars, &p.vars, d)
            }
        })
        .collect();
    let ints = p.integer_vars();
    let n = p.num_vars();
    let mut ents = Vec::new();
    for l in 0..p.num_locations() {
        if l == p.out {
            continue;
        }
        if let Some(pr) = make_premise(inv.at(l), &ints, n) {
            ents.push(Entailment { nvars: n, premise: pr, conclusion: r[l].clone(), label: format!("rsm nonneg {}", p.labels[l]) });
        }
    }
    let one = TemplatePoly::constant(AffineExpr::constant(Rational::one()));
    for (i, t) in p.non_terminal() {
        let conclusion = r[t.source].sub(&one).sub(&pre_expectation(&r, t, &TemplatePoly::zero()));
        for (ci, cell) in t.guard.cells().iter().enumerate() {
            let mut atoms = inv.at(t.source).to_vec();
            atoms.extend(cell.iter().cloned());
            if let Some(pr) = make_premise(&atoms, &ints, n) {
                ents.push(Entailment {
                    nvars: n,
                    premise: pr,
                    conclusion: conclusion.clone(),
                    label: format!("rsm decrease t{i} cell{ci}"),
                });
            }
        }
    }
    (ConstraintSet { registry: reg, entailments: ents, relational: Vec::new(), objective: None }, r)
}

/// An instantiated RSM with the Handelman multipliers proving it.
#[derive(Debug, Clone, PartialEq)]
pub struct RsmResult {
    pub degree: u32,
    pub handelman_degree: u32,
    pub r: Vec<Polynomial>,
    pub multipliers: Vec<Vec<Rational>>,
}

pub fn synthesize_rsm(p: &Pcfg, inv: &Invariant, d: u32) -> Option<RsmResult> {
    let (cs, r) = rsm_constraints(p, inv, d);
    let big_d = d + 1;
    let sol = handelman::solve_constraints(&cs, big_d, &HandelmanOptions::default()).ok()??;
    let value = |t: u32| sol.template_values[t as usize].clone();
    Some(RsmResult {
        degree: d,
        handelman_degree: big_d,
        r: r.iter().map(|q| q.instantiate(&value)).collect(),
        multipliers: sol.multipliers,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OstSelection {
    pub condition: OstCondition,
    pub reason: String,
    /// RSMs for both programs when the choice relied on them.
    pub rsm: Option<(RsmResult, RsmResult)>,
}

fn rsm_pair(p1: &Pcfg, inv1: &Invariant, p2: &Pcfg, inv2: &Invariant, d: u32) -> Option<(RsmResult, RsmResult)> {
    synthesize_rsm(p1, inv1, d).and_then(|a| synthesize_rsm(p2, inv2, d).map(|b| (a, b)))
}

/// Picks the first applicable condition in the order C1, C4, C3, C2, the
/// same for both programs.
pub fn select_ost(
    p1: &Pcfg,
    inv1: &Invariant,
    p2: &Pcfg,
    inv2: &Invariant,
    d: u32,
    user: Option<OstCondition>,
) -> OstSelection {
    if let Some(c) = user {
        // the certificate still needs ranking evidence for C3 and C4
        let rsm = match c {
            OstCondition::C3 | OstCondition::C4 => rsm_pair(p1, inv1, p2, inv2, d),
            _ => None,
        };
        return OstSelection { condition: c, reason: "user override".into(), rsm };
    }
    if check_statically_bounded_with(p1, inv1) && check_statically_bounded_with(p2, inv2) {
        return OstSelection { condition: OstCondition::C1, reason: "both programs statically bounded".into(), rsm: None };
    }
    match rsm_pair(p1, inv1, p2, inv2, d) {
        Some(pair) => {
            if check_bounded_updates_with(p1, inv1) && check_bounded_updates_with(p2, inv2) {
                OstSelection {
                    condition: OstCondition::C4,
                    reason: "bounded updates and ranking supermartingales for both programs".into(),
                    rsm: Some(pair),
                }
            } else {
                OstSelection {
                    condition: OstCondition::C3,
                    reason: "ranking supermartingales for both programs".into(),
                    rsm: Some(pair),
                }
            }
        }
        None => OstSelection { condition: OstCondition::C2, reason: "fallback".into(), rsm: None },
    }
}
