use super::*;
use crate::frontend::compile;
use crate::handelman::{solve_constraints, HandelmanOptions};
use crate::invariant::{generate_interval_invariants, DEFAULT_WIDEN_AFTER};
use crate::rational::rat;

const FIG_A: &str = include_str!("../../fixtures/transmission_a.ppl");
const FIG_B: &str = include_str!("../../fixtures/transmission_b.ppl");

fn fig() -> (Pcfg, Invariant, Pcfg, Invariant) {
    let a = compile(FIG_A).unwrap();
    let b = compile(FIG_B).unwrap();
    let ia = generate_interval_invariants(&a, DEFAULT_WIDEN_AFTER);
    let ib = generate_interval_invariants(&b, DEFAULT_WIDEN_AFTER);
    (a, ia, b, ib)
}

use crate::invariant::Invariant;

/// Concrete values for the template unknowns of `t`, read off from the
/// given polynomials.
fn values_for(reg: &Registry, f: &Polynomial, u: &[Polynomial], l: &[Polynomial]) -> Vec<Rational> {
    reg.vars
        .iter()
        .map(|v| match v.kind {
            TemplateVarKind::F => f.coeff(&v.monomial),
            TemplateVarKind::Uesm(k) => u[k].coeff(&v.monomial),
            TemplateVarKind::Lesm(k) => l[k].coeff(&v.monomial),
            _ => Rational::zero(),
        })
        .collect()
}

use crate::poly::Polynomial;

fn aff(c: i64, fail: i64) -> Polynomial {
    Polynomial::affine(rat(c, 1), [(1, rat(fail, 1))])
}

fn aff_half(c2: i64, fail2: i64) -> Polynomial {
    Polynomial::affine(rat(c2, 2), [(1, rat(fail2, 2))])
}

/// Feasible premise points: each coordinate in turn takes the lower end,
/// midpoint and upper end of its range given the coordinates fixed so far.
fn premise_points(e: &Entailment) -> Vec<Vec<Rational>> {
    use crate::invariant::{interval::refine, Interval};
    let atoms: Vec<Atom> = e.premise.iter().cloned().map(Atom::ge).collect();
    let ints = vec![false; e.nvars];
    let mut pts: Vec<Vec<Rational>> = vec![Vec::new()];
    for j in 0..e.nvars {
        let mut next = Vec::new();
        for p in &pts {
            let mut bx: Vec<Interval> = p.iter().map(|v| Interval::point(v.clone())).collect();
            bx.resize(e.nvars, Interval::top());
            let Some(bx) = refine(&bx, &atoms, &ints) else { continue };
            let lo = bx[j].lo.clone().unwrap_or_else(|| bx[j].hi.clone().map_or(rat(-5, 1), |h| h - rat(10, 1)));
            let hi = bx[j].hi.clone().unwrap_or_else(|| &lo + &rat(10, 1));
            let mid = (&lo + &hi) / rat(2, 1);
            for v in [lo, mid, hi] {
                let mut q = p.clone();
                q.push(v);
                if !next.contains(&q) {
                    next.push(q);
                }
            }
        }
        pts = next;
    }
    pts.retain(|p| atoms.iter().all(|a| a.holds(p)));
    assert!(!pts.is_empty(), "no premise points for {}", e.label);
    pts
}

#[test]
fn template_sizes() {
    let (a, _, b, _) = fig();
    let mut reg = Registry::default();
    let t = make_templates(&a, &b, 1, &mut reg).unwrap();
    assert_eq!(t.f.len(), 3);
    assert_eq!(a.num_locations(), 6);
    let mut reg2 = Registry::default();
    make_templates(&a, &b, 2, &mut reg2).unwrap();
    let uesm = reg2.vars.iter().filter(|v| matches!(v.kind, TemplateVarKind::Uesm(_))).count();
    assert_eq!(uesm, 36);
    assert_eq!(reg2.vars[0].name, "f[1]");
    assert!(make_templates(&a, &b, 0, &mut reg2).is_err());
}

#[test]
fn pre_expectation_cases() {
    let p = compile("x := 0; y := 0; x := x + 1; if prob(999/1000) { y := 1 } else { y := 2 }; x := sample(uniform(0, 1)); return x").unwrap();
    let u0 = AffineExpr::var(0);
    let u1 = AffineExpr::var(1);
    let q = TemplatePoly::from_terms([(Monomial::one(), u0.clone()), (Monomial::var(0), u1.clone())]);
    let qs = vec![q.clone(); p.num_locations()];
    let zero = TemplatePoly::zero();
    // x := x + 1
    let t0 = &p.transitions[0];
    let pre = pre_expectation(&qs, t0, &zero);
    assert_eq!(pre.coeff(&Monomial::one()), u0.add(&u1));
    assert_eq!(pre.coeff(&Monomial::var(0)), u1);
    // probabilistic branch with distinct successor templates
    let t1 = &p.transitions[1];
    let mut qs2 = vec![TemplatePoly::zero(); p.num_locations()];
    qs2[t1.succ[0].0] = TemplatePoly::constant(AffineExpr::var(5));
    qs2[t1.succ[1].0] = TemplatePoly::constant(AffineExpr::var(6));
    let g = TemplatePoly::constant(AffineExpr::var(7));
    let pre = pre_expectation(&qs2, t1, &g);
    let mut expect = AffineExpr::term(5, rat(999, 1000));
    expect.add_term(6, &rat(1, 1000));
    expect.add_term(7, &Rational::one());
    assert_eq!(pre.coeff(&Monomial::one()), expect);
    // x ~ uniform(0, 1) with q = x²
    let ts = p.transitions.iter().find(|t| matches!(t.update, Update::Sample { .. })).unwrap();
    let sq = vec![TemplatePoly::term(Monomial::var_pow(0, 2), AffineExpr::constant(Rational::one())); p.num_locations()];
    let pre = pre_expectation(&sq, ts, &zero);
    assert_eq!(pre, TemplatePoly::constant(AffineExpr::constant(rat(1, 3))));
}

fn holds_everywhere(ents: &[Entailment], vals: &[Rational]) -> Vec<String> {
    let value = |t: u32| vals[t as usize].clone();
    let mut bad = Vec::new();
    for e in ents {
        let c = e.conclusion.instantiate(&value);
        if premise_points(e).iter().any(|p| c.evaluate(p).is_negative()) {
            bad.push(e.label.clone());
        }
    }
    bad
}

#[test]
fn zero_certificate_satisfies_martingale_conditions() {
    let (a, ia, b, ib) = fig();
    let mut reg = Registry::default();
    let t = make_templates(&a, &b, 1, &mut reg).unwrap();
    let vals = vec![Rational::zero(); reg.len()];
    let mut ents = collect_uesm_constraints(&a, &ia, &t.u, &t.f1);
    ents.extend(collect_lesm_constraints(&b, &ib, &t.l, &t.f2));
    assert!(holds_everywhere(&ents, &vals).is_empty());
    // but the strict refutation constraint fails
    assert!(!refutation_constraint(&a, &b, &t).holds(&|_| Rational::zero()));
}

#[test]
fn example_uesm_is_valid() {
    let (a, ia, b, _) = fig();
    let mut reg = Registry::default();
    let t = make_templates(&a, &b, 1, &mut reg).unwrap();
    let f = Polynomial::affine(Rational::zero(), [(0, rat(1, 1)), (1, rat(-1, 1))]);
    let u = vec![aff(998, -998), aff(998, -997), aff(999, -998), aff(-1, 1), aff(-1, 1), Polynomial::zero()];
    let vals = values_for(&reg, &f, &u, &vec![Polynomial::zero(); 6]);
    let ents = collect_uesm_constraints(&a, &ia, &t.u, &t.f1);
    assert!(holds_everywhere(&ents, &vals).is_empty());
    // f = sent with U = 0 violates the decrease at the increment
    let vals = values_for(&reg, &Polynomial::var(0), &vec![Polynomial::zero(); 6], &vec![Polynomial::zero(); 6]);
    let bad = holds_everywhere(&ents, &vals);
    assert!(bad.iter().any(|l| l.contains(&a.labels[2])), "{bad:?}");
}

#[test]
fn example_lesm_fails_only_on_the_exit_edge() {
    // The rounded LESM ignores the exit with fail = 0 at sent = 9000001.
    let (a, _, b, ib) = fig();
    let mut reg = Registry::default();
    let t = make_templates(&a, &b, 1, &mut reg).unwrap();
    let f = Polynomial::affine(Rational::zero(), [(0, rat(1, 1)), (1, rat(-1, 1))]);
    let l = vec![aff_half(3995, -3995), aff_half(3995, -3993), aff_half(3997, -3995), aff(-1, 1), aff(-1, 1), Polynomial::zero()];
    let vals = values_for(&reg, &f, &vec![Polynomial::zero(); 6], &l);
    let ents = collect_lesm_constraints(&b, &ib, &t.l, &t.f2);
    let bad = holds_everywhere(&ents, &vals);
    let exit = b.transitions.iter().position(|t| t.source == b.init && t.succ[0].0 == b.out).unwrap();
    assert!(!bad.is_empty());
    assert!(bad.iter().all(|l| l.starts_with(&format!("lesm t{exit} "))), "{bad:?}");
}

#[test]
fn lipschitz_encodings() {
    let (a, ia, b, ib) = fig();
    let mut reg = Registry::default();
    let t = make_templates(&a, &b, 1, &mut reg).unwrap();
    let z = vec![Polynomial::zero(); 6];
    let ents = lipschitz_constraints(&t.f, Metric::L1, &a, &ia, &b, &ib);
    assert_eq!(ents.len(), 4);
    let ok = values_for(&reg, &Polynomial::affine(rat(3, 1), [(0, rat(1, 1)), (1, rat(-1, 1))]), &z, &z);
    assert!(holds_everywhere(&ents, &ok).is_empty());
    let bad = values_for(&reg, &Polynomial::affine(rat(0, 1), [(0, rat(2, 1))]), &z, &z);
    assert_eq!(holds_everywhere(&ents, &bad).len(), 4);
    // the discrete metric bounds the range of f on the output invariants
    let d = lipschitz_constraints(&t.f, Metric::Discrete, &a, &ia, &b, &ib);
    let fail_only = values_for(&reg, &Polynomial::affine(rat(0, 1), [(1, rat(1, 1))]), &z, &z);
    assert!(holds_everywhere(&d, &fail_only).is_empty());
    assert!(!holds_everywhere(&d, &ok).is_empty());
    let u = lipschitz_constraints(&t.f, Metric::Uniform, &a, &ia, &b, &ib);
    assert_eq!(u[0].nvars, 5);
    assert!(!holds_everywhere(&u, &ok).is_empty());
    let half = values_for(&reg, &Polynomial::affine(rat(0, 1), [(0, rat(1, 2)), (1, rat(-1, 2))]), &z, &z);
    assert!(holds_everywhere(&u, &half).is_empty());
}

#[test]
fn similarity_epsilon_validation() {
    let (a, _, b, _) = fig();
    let mut reg = Registry::default();
    let t = make_templates(&a, &b, 1, &mut reg).unwrap();
    assert!(similarity_constraint(&a, &b, &t, &EpsilonSpec::Fixed(Rational::zero()), &mut reg).is_err());
    let (rel, obj) = similarity_constraint(&a, &b, &t, &EpsilonSpec::Maximize, &mut reg).unwrap();
    assert_eq!(obj, Some((reg.len() - 1) as u32));
    assert_eq!(rel.kind, RelKind::Ge);
}

#[test]
fn rsm_for_transmission() {
    let (a, ia, _, _) = fig();
    let r = synthesize_rsm(&a, &ia, 1).expect("ranking supermartingale exists");
    assert_eq!(r.r[a.out], Polynomial::zero());
    let looping = compile("x := 0; while true { skip }; return x").unwrap();
    let inv = generate_interval_invariants(&looping, 3);
    assert!(synthesize_rsm(&looping, &inv, 1).is_none());
    let straight = compile("x := 0; x := x + 1; x := x + 2; return x").unwrap();
    let inv = generate_interval_invariants(&straight, 3);
    let r = synthesize_rsm(&straight, &inv, 1).unwrap();
    assert!(r.r[straight.init].evaluate(&[Rational::zero()]) >= rat(2, 1));
}

#[test]
fn ost_selection_for_transmission_is_c1() {
    let (a, ia, b, ib) = fig();
    let s = select_ost(&a, &ia, &b, &ib, 1, None);
    assert_eq!(s.condition, OstCondition::C1);
    let over = select_ost(&a, &ia, &b, &ib, 1, Some(OstCondition::C2));
    assert_eq!(over.condition, OstCondition::C2);
}

#[test]
fn transmission_similarity_lp() {
    let (a, ia, b, ib) = fig();
    let cfg = SynthConfig {
        mode: Mode::Similarity,
        metric: Metric::L1,
        epsilon: EpsilonSpec::Maximize,
        degree: 1,
        ost: OstCondition::C1,
    };
    let prob = build_constraints(&a, &ia, &b, &ib, &cfg).unwrap();
    let s = solve_constraints(&prob.constraints, 2, &HandelmanOptions::default()).unwrap().unwrap();
    let eps = s.objective.unwrap();
    assert!(eps >= rat(900, 1) && eps <= rat(1000, 1), "{eps}");
}
