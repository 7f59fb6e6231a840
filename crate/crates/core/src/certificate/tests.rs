use super::*;
use crate::frontend::compile;
use crate::pipeline::{run, RunConfig, Verdict, VerifyLevel};
use crate::rational::rat;
use crate::synth::{EpsilonSpec, Mode};

const FIG_A: &str = include_str!("../../fixtures/transmission_a.ppl");
const FIG_B: &str = include_str!("../../fixtures/transmission_b.ppl");

fn emitted(mode: Mode) -> (Certificate, Pcfg, Pcfg) {
    let mut cfg = RunConfig::new(FIG_A, FIG_B);
    cfg.mode = mode;
    cfg.degree_max = 1;
    let out = run(&cfg);
    assert_eq!(out.verdict, Verdict::Refuted, "{:?}", out.diagnostics);
    (out.certificate.unwrap(), compile(FIG_A).unwrap(), compile(FIG_B).unwrap())
}

#[test]
fn json_round_trip() {
    let (c, _, _) = emitted(Mode::Equivalence);
    let text = c.to_json();
    assert_eq!(Certificate::from_json(&text).unwrap(), c);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["mode"], "equivalence-refuted");
    assert_eq!(v["degree_D"], 2);
    let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
    assert!(keys.contains(&"multipliers") && keys.contains(&"ost") && keys.contains(&"invariants"));
}

#[test]
fn emitted_certificates_verify() {
    for mode in [Mode::Equivalence, Mode::Similarity] {
        let (c, a, b) = emitted(mode);
        verify_certificate(&c, &a, &b).unwrap();
        let (up, lo) = c.bounds(&a, &b).unwrap();
        assert!(lo > up);
        if mode == Mode::Similarity {
            assert!(&lo - &up >= c.epsilon.clone().unwrap());
        }
    }
}

#[test]
fn raised_epsilon_is_rejected() {
    let (mut c, a, b) = emitted(Mode::Similarity);
    c.epsilon = Some(c.epsilon.unwrap() + rat(1, 1));
    assert!(matches!(verify_certificate(&c, &a, &b), Err(VerifyError::Constraint(_))));
}

#[test]
fn negated_multiplier_is_rejected() {
    let (mut c, a, b) = emitted(Mode::Equivalence);
    let slot = c
        .multipliers
        .iter_mut()
        .flat_map(|m| m.lambda.iter_mut())
        .find(|x| x.is_positive())
        .expect("some positive multiplier");
    *slot = -slot.clone();
    assert!(matches!(verify_certificate(&c, &a, &b), Err(VerifyError::Constraint(_))));
}

#[test]
fn altered_polynomial_is_rejected() {
    let (mut c, a, b) = emitted(Mode::Equivalence);
    let t = &mut c.uesm[0].polynomial;
    match t.first_mut() {
        Some(term) => term.coeff = &term.coeff + &rat(1, 1),
        None => t.push(TermJson { monomial: BTreeMap::new(), coeff: rat(1, 1) }),
    }
    assert!(verify_certificate(&c, &a, &b).is_err());
}

#[test]
fn non_inductive_invariant_is_rejected() {
    let (mut c, a, b) = emitted(Mode::Equivalence);
    c.invariants.a.push_str("loc l_out: sent <= 5\n");
    assert!(verify_certificate(&c, &a, &b).is_err());
}

#[test]
fn mislabelled_multipliers_are_rejected() {
    let (mut c, a, b) = emitted(Mode::Equivalence);
    c.multipliers.swap(0, 1);
    assert!(matches!(verify_certificate(&c, &a, &b), Err(VerifyError::Malformed(_))));
}

#[test]
fn mc_on_a_deterministic_program() {
    let p = compile("x := 3\nreturn x").unwrap();
    let e = mc_expectation(&p, &Polynomial::var(0), 2500, 7, 100, None);
    assert_eq!(e.samples, 2500);
    assert_eq!(e.mean, 3.0);
    assert_eq!(e.std_dev, 0.0);
    assert_eq!(e.half_width, 0.0);
}

#[test]
fn mc_on_a_uniform_sample() {
    let p = compile("x := sample(uniform(0, 1))\nreturn x").unwrap();
    let e = mc_expectation(&p, &Polynomial::var(0), 20_000, 1, 100, Some(1.0));
    assert!((e.mean - 0.5).abs() <= e.half_width, "{e:?}");
    assert!((e.std_dev - (1.0f64 / 12.0).sqrt()).abs() < 0.01);
    assert_eq!(e, mc_expectation(&p, &Polynomial::var(0), 20_000, 1, 100, Some(1.0)));
}

#[test]
fn mc_censors_long_runs() {
    let p = compile("x := 0\nwhile x <= 100 { x := x + 1 }\nreturn x").unwrap();
    let e = mc_expectation(&p, &Polynomial::var(0), 10, 0, 5, None);
    assert_eq!(e.censored, 10);
}

#[test]
fn mc_agrees_with_the_transmission_certificate() {
    let (c, a, b) = emitted(Mode::Equivalence);
    let r = mc_consistency(&c, &a, &b, 2000, 3, 100_000_000).unwrap();
    assert_eq!(r.verdict, McVerdict::Consistent, "{r:?}");
}

#[test]
fn fixed_epsilon_run() {
    let mut cfg = RunConfig::new(FIG_A, FIG_B);
    cfg.mode = Mode::Similarity;
    cfg.epsilon = EpsilonSpec::Fixed(rat(500, 1));
    cfg.degree_max = 1;
    cfg.verify = VerifyLevel::Exact;
    let out = run(&cfg);
    assert_eq!(out.verdict, Verdict::Refuted);
    assert_eq!(out.epsilon, Some(rat(500, 1)));
    assert!(out.summary_line().starts_with("VERDICT refuted mode=similarity epsilon=500 degree=1 time_ms="));
}

#[test]
fn presolved_run_matches_exact_run() {
    let mut cfg = RunConfig::new(FIG_A, FIG_B);
    cfg.mode = Mode::Similarity;
    cfg.degree_max = 1;
    let exact = run(&RunConfig { presolve_min_rows: None, ..cfg.clone() });
    let guided = run(&RunConfig { presolve_min_rows: Some(0), ..cfg });
    assert_eq!(exact.verdict, Verdict::Refuted);
    assert_eq!(guided.verdict, Verdict::Refuted);
    let (a, b) = (compile(FIG_A).unwrap(), compile(FIG_B).unwrap());
    verify_certificate(guided.certificate.as_ref().unwrap(), &a, &b).unwrap();
    assert!(guided.epsilon <= exact.epsilon);
    assert!(guided.epsilon.unwrap().is_positive());
}
